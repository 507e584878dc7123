use std::path::Path;

use pathwise::chain::ChainError;
use pathwise::dd::DdError;
use pathwise::explicit::ExplicitError;
use pathwise::lang::LangError;
use pathwise::symbolic::AddError;
use pathwise::wmc::WmcError;

/// Failure classes, one per exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Model(String),
    #[error("{0}")]
    Cap(String),
    #[error("{0}")]
    Disagreement(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(_) => 3,
            CliError::Cap(_) => 4,
            CliError::Disagreement(_) => 5,
        }
    }

    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    /// Model error located in `path`: `file:line:col: message` when the
    /// error carries a position.
    pub fn lang(path: &Path, e: LangError) -> CliError {
        let msg = match e.pos() {
            Some(_) => format!("{}:{e}", path.display()),
            None => format!("{}: {e}", path.display()),
        };
        match e {
            LangError::StateCapExceeded(_) => CliError::Cap(msg),
            LangError::UnknownLabel(_) => CliError::Usage(msg),
            _ => CliError::Model(msg),
        }
    }
}

impl From<LangError> for CliError {
    fn from(e: LangError) -> Self {
        match e {
            LangError::StateCapExceeded(_) => CliError::Cap(e.to_string()),
            LangError::UnknownLabel(_) => CliError::Usage(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<DdError> for CliError {
    fn from(e: DdError) -> Self {
        match e {
            DdError::NodeCapExceeded(_) => CliError::Cap(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::BudgetExceeded(_) => CliError::Cap(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<AddError> for CliError {
    fn from(e: AddError) -> Self {
        match e {
            AddError::Dd(d) => d.into(),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<ExplicitError> for CliError {
    fn from(e: ExplicitError) -> Self {
        CliError::Cap(e.to_string())
    }
}

impl From<WmcError> for CliError {
    fn from(e: WmcError) -> Self {
        match e {
            WmcError::Dd(d) => d.into(),
            WmcError::Lang(l) => l.into(),
            WmcError::Chain(c) => c.into(),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
