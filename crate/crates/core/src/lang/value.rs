//! Runtime values and the operator semantics shared by the explicit builder
//! and the symbolic unroller.

use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};

use super::ast::{BinOp, Func, UnOp};
use crate::num::{int, Polynomial, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(i64),
    /// Rational constant or polynomial in the parameters.
    Real(Polynomial),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Real(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("type error: {0}")]
    Type(String),
    #[error("{0} depends on parameters")]
    NonConstant(String),
    #[error("integer overflow")]
    Overflow,
}

impl Value {
    pub fn as_bool(&self) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(*b),
            other => Err(EvalError::Type(format!("expected a boolean, found {other}"))),
        }
    }

    /// Numeric value as a polynomial (integers included).
    pub fn as_polynomial(&self) -> Result<Polynomial, EvalError> {
        match self {
            Value::Int(n) => Ok(Polynomial::constant(int(*n))),
            Value::Real(p) => Ok(p.clone()),
            Value::Bool(b) => Err(EvalError::Type(format!("expected a number, found {b}"))),
        }
    }

    pub fn as_rational(&self, what: &str) -> Result<Rational, EvalError> {
        self.as_polynomial()?.as_constant().ok_or_else(|| EvalError::NonConstant(what.to_string()))
    }

    /// Integer value; booleans count as 0/1 and integral rationals are accepted.
    pub fn as_int(&self) -> Result<i64, EvalError> {
        match self {
            Value::Int(n) => Ok(*n),
            Value::Bool(b) => Ok(*b as i64),
            Value::Real(_) => {
                let r = self.as_rational("integer value")?;
                if r.is_integer() {
                    r.to_integer().to_i64().ok_or(EvalError::Overflow)
                } else {
                    Err(EvalError::Type(format!("expected an integer, found {r}")))
                }
            }
        }
    }

    fn real(r: Rational) -> Value {
        Value::Real(Polynomial::constant(r))
    }
}

pub fn unary(op: UnOp, a: Value) -> Result<Value, EvalError> {
    match (op, a) {
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (UnOp::Neg, Value::Int(n)) => n.checked_neg().map(Value::Int).ok_or(EvalError::Overflow),
        (UnOp::Neg, Value::Real(p)) => Ok(Value::Real(-&p)),
        (UnOp::Not, other) => Err(EvalError::Type(format!("`!` applied to {other}"))),
        (UnOp::Neg, other) => Err(EvalError::Type(format!("`-` applied to {other}"))),
    }
}

pub fn binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    use Value::*;
    match op {
        BinOp::And | BinOp::Or | BinOp::Implies | BinOp::Iff => {
            let (x, y) = (a.as_bool()?, b.as_bool()?);
            Ok(Bool(match op {
                BinOp::And => x && y,
                BinOp::Or => x || y,
                BinOp::Implies => !x || y,
                _ => x == y,
            }))
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul => match (a, b) {
            (Int(x), Int(y)) => {
                let r = match op {
                    BinOp::Add => x.checked_add(*y),
                    BinOp::Sub => x.checked_sub(*y),
                    _ => x.checked_mul(*y),
                };
                r.map(Int).ok_or(EvalError::Overflow)
            }
            _ => {
                let (x, y) = (a.as_polynomial()?, b.as_polynomial()?);
                Ok(Real(match op {
                    BinOp::Add => &x + &y,
                    BinOp::Sub => &x - &y,
                    _ => &x * &y,
                }))
            }
        },
        BinOp::Div => {
            let x = a.as_polynomial()?;
            let y = b.as_rational("divisor")?;
            if y.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            Ok(Real(x.scale(&y.recip())))
        }
        BinOp::Eq | BinOp::Ne => {
            let equal = match (a, b) {
                (Bool(x), Bool(y)) => x == y,
                _ => {
                    let x = coerce_number(a)?;
                    let y = coerce_number(b)?;
                    x.as_constant().ok_or_else(|| EvalError::NonConstant("comparison".into()))?
                        == y.as_constant().ok_or_else(|| EvalError::NonConstant("comparison".into()))?
                }
            };
            Ok(Bool(equal == (op == BinOp::Eq)))
        }
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let x = a.as_rational("comparison")?;
            let y = b.as_rational("comparison")?;
            Ok(Bool(match op {
                BinOp::Lt => x < y,
                BinOp::Le => x <= y,
                BinOp::Gt => x > y,
                _ => x >= y,
            }))
        }
    }
}

/// Booleans compare with numbers as 0/1.
fn coerce_number(v: &Value) -> Result<Polynomial, EvalError> {
    match v {
        Value::Bool(b) => Ok(Polynomial::constant(int(*b as i64))),
        other => other.as_polynomial(),
    }
}

pub fn call(func: Func, args: &[Value]) -> Result<Value, EvalError> {
    match func {
        Func::ExactlyOneOf => {
            let mut count = 0;
            for a in args {
                count += a.as_bool()? as usize;
            }
            Ok(Value::Bool(count == 1))
        }
        Func::Min | Func::Max => {
            if args.is_empty() {
                return Err(EvalError::Type(format!("{} needs arguments", func.name())));
            }
            if args.iter().all(|a| matches!(a, Value::Int(_))) {
                let ints = args.iter().map(|a| a.as_int().expect("ints"));
                let v = if func == Func::Min { ints.min() } else { ints.max() };
                return Ok(Value::Int(v.expect("nonempty")));
            }
            let mut best = args[0].as_rational(func.name())?;
            for a in &args[1..] {
                let r = a.as_rational(func.name())?;
                if (func == Func::Min && r < best) || (func == Func::Max && r > best) {
                    best = r;
                }
            }
            Ok(Value::real(best))
        }
    }
}

/// Probability weight of a branch: must be numeric.
pub fn probability(v: &Value) -> Result<Polynomial, EvalError> {
    v.as_polynomial()
}

/// Whether a numeric value is a constant outside `[0, 1]`.
pub fn constant_out_of_range(p: &Polynomial) -> bool {
    p.as_constant().is_some_and(|c| c.is_negative() || c > Rational::from_integer(1.into()))
}
