//! Exact numbers: rationals and parametric polynomials over them.

mod polynomial;
mod rational;

pub use polynomial::{Monomial, Polynomial, Valuation};
pub use rational::{int, is_probability, parse_rational, rat, serde_pair, to_decimal, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumError {
    #[error("cannot parse `{0}` as a rational number")]
    Parse(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("parameter `{0}` has no value")]
    UnboundParameter(String),
}

/// Parses `name=value` pairs (comma separated) into a valuation.
pub fn parse_valuation(text: &str) -> Result<Valuation, NumError> {
    let mut out = Valuation::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| NumError::Parse(part.to_string()))?;
        out.insert(name.trim().to_string(), parse_rational(value)?);
    }
    Ok(out)
}
