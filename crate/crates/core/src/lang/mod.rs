//! A guarded-command modeling language for DTMCs and pMCs: modules with
//! bounded integer and boolean variables, probabilistic commands, action
//! synchronization, module renaming, formulas and labels.
//!
//! ```
//! use pathwise::lang::{Model, OverlapPolicy, explore};
//!
//! let src = "dtmc
//! module coin
//!   heads : bool init false;
//!   [] !heads -> 0.5 : (heads'=true) + 0.5 : (heads'=false);
//!   [] heads -> true;
//! endmodule
//! label \"done\" = heads;";
//! let model = Model::from_source(src).unwrap();
//! let target = model.label("done").unwrap();
//! let explored = explore(&model, target, OverlapPolicy::Weighted, 100).unwrap();
//! assert_eq!(explored.chain.num_states(), 2);
//! ```

mod ast;
mod lexer;
mod model;
mod parser;
mod semantics;
pub mod value;

pub use ast::*;
pub use model::{Model, ModuleInfo, RCommand, RExpr, RUpdate, VarInfo};
pub use parser::{parse, parse_expr};
pub use semantics::{
    eval_in, explore, find_guard_overlap, holds, select_from, successors, Explored, OverlapPolicy, State,
    DEFAULT_STATE_CAP,
};
pub use value::{EvalError, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LangError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unknown identifier `{name}`")]
    UnknownIdentifier { pos: Pos, name: String },
    #[error("{pos}: `{name}` is declared twice")]
    Duplicate { pos: Pos, name: String },
    #[error("{pos}: renaming mentions `{name}`, which does not occur in module `{module}`")]
    RenameUndeclared { pos: Pos, name: String, module: String },
    #[error("{}type error: {msg}", pos.map(|p| format!("{p}: ")).unwrap_or_default())]
    Type { pos: Option<Pos>, msg: String },
    #[error("{context}: {error}")]
    Eval { context: String, error: EvalError },
    #[error("variable `{var}` is assigned by two synchronizing commands in state ({state})")]
    DataRace { state: String, var: String },
    #[error("value {value} leaves the domain of `{var}` in state ({state})")]
    OutOfDomain { state: String, var: String, value: String },
    #[error("invalid distribution in state ({state}): {reason}")]
    InvalidDistribution { state: String, reason: String },
    #[error("module `{module}` has overlapping guards for action `{action}` in state ({state})")]
    OverlappingGuards { module: String, action: String, state: String },
    #[error("more than {0} reachable states")]
    StateCapExceeded(usize),
    #[error("unknown label \"{0}\"")]
    UnknownLabel(String),
}

impl LangError {
    pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> LangError {
        LangError::Syntax { pos, msg: msg.into() }
    }

    /// Source position, when the error has one.
    pub fn pos(&self) -> Option<Pos> {
        match self {
            LangError::Syntax { pos, .. }
            | LangError::UnknownIdentifier { pos, .. }
            | LangError::Duplicate { pos, .. }
            | LangError::RenameUndeclared { pos, .. } => Some(*pos),
            LangError::Type { pos, .. } => *pos,
            _ => None,
        }
    }
}
