//! Explicit Bellman iteration over sparse rows.
//!
//! `x_0 = [s ∈ T]` and `x_{i+1} = A · x_i`, where `A` is the transition
//! matrix with target rows made absorbing. Exact mode uses rationals and a
//! left-to-right reduction order; the `f64` variants exist for scaling runs.

use std::fmt::Write;

use num_traits::{One, Zero};

use crate::chain::{bad_states, Mc, Pmc};
use crate::num::{to_decimal, to_f64, NumError, Polynomial, Rational, Valuation};

/// Default state limit for [`unbounded_reach`].
pub const DEFAULT_SOLVE_CAP: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExplicitError {
    #[error("{states} undetermined states exceed the exact-solve limit of {cap}")]
    SizeCap { states: usize, cap: usize },
}

fn step(mc: &Mc, x: &[Rational]) -> Vec<Rational> {
    (0..mc.num_states())
        .map(|s| {
            if mc.is_target(s) {
                return Rational::one();
            }
            let mut acc = Rational::zero();
            for (t, p) in mc.distribution(s).support() {
                if !x[*t].is_zero() {
                    acc += p * &x[*t];
                }
            }
            acc
        })
        .collect()
}

fn indicator(mc: &Mc) -> Vec<Rational> {
    (0..mc.num_states())
        .map(|s| if mc.is_target(s) { Rational::one() } else { Rational::zero() })
        .collect()
}

/// `Pr(s ⊨ ◊≤h T)` for every state `s`.
pub fn bounded_reach_explicit(mc: &Mc, h: usize) -> Vec<Rational> {
    let mut x = indicator(mc);
    for _ in 0..h {
        x = step(mc, &x);
    }
    x
}

/// All iterates `x_0 … x_h`; `table[i][s] = Pr(s ⊨ ◊≤i T)`.
pub fn bounded_reach_table(mc: &Mc, h: usize) -> Vec<Vec<Rational>> {
    let mut table = vec![indicator(mc)];
    for i in 0..h {
        let next = step(mc, &table[i]);
        table.push(next);
    }
    table
}

pub fn bounded_reach_f64(mc: &Mc, h: usize) -> Vec<f64> {
    let rows: Vec<Vec<(usize, f64)>> = mc
        .transitions()
        .iter()
        .map(|d| d.support().iter().map(|(t, p)| (*t, to_f64(p))).collect())
        .collect();
    iterate_f64(&rows, &|s| mc.is_target(s), h)
}

/// Float iteration on `M[u]`, evaluating the weights of `pmc` in `f64`.
/// Rows are not checked for well-definedness.
pub fn bounded_reach_f64_at(pmc: &Pmc, u: &Valuation, h: usize) -> Result<Vec<f64>, NumError> {
    let values: std::collections::BTreeMap<&str, f64> = u.iter().map(|(k, v)| (k.as_str(), to_f64(v))).collect();
    let lookup = |name: &str| values.get(name).copied();
    let rows = pmc
        .transitions()
        .iter()
        .map(|d| d.support().iter().map(|(t, p)| Ok((*t, p.eval_f64(&lookup)?))).collect())
        .collect::<Result<Vec<Vec<_>>, NumError>>()?;
    Ok(iterate_f64(&rows, &|s| pmc.is_target(s), h))
}

fn iterate_f64(rows: &[Vec<(usize, f64)>], target: &dyn Fn(usize) -> bool, h: usize) -> Vec<f64> {
    let n = rows.len();
    let mut x: Vec<f64> = (0..n).map(|s| if target(s) { 1.0 } else { 0.0 }).collect();
    for _ in 0..h {
        x = (0..n)
            .map(|s| if target(s) { 1.0 } else { rows[s].iter().map(|(t, p)| p * x[*t]).sum() })
            .collect();
    }
    x
}

/// Bounded reachability of a parametric chain as polynomials in its parameters.
pub fn bounded_reach_parametric(pmc: &Pmc, h: usize) -> Vec<Polynomial> {
    let n = pmc.num_states();
    let mut x: Vec<Polynomial> =
        (0..n).map(|s| if pmc.is_target(s) { Polynomial::one() } else { Polynomial::zero() }).collect();
    for _ in 0..h {
        x = (0..n)
            .map(|s| {
                if pmc.is_target(s) {
                    return Polynomial::one();
                }
                let mut acc = Polynomial::zero();
                for (t, p) in pmc.distribution(s).support() {
                    if !x[*t].is_zero() {
                        acc = &acc + &(p * &x[*t]);
                    }
                }
                acc
            })
            .collect();
    }
    x
}

/// CSV rows `state,h,probability` for a table from [`bounded_reach_table`].
pub fn table_csv(table: &[Vec<Rational>]) -> String {
    let mut out = String::from("state,h,probability\n");
    let n = table.first().map_or(0, Vec::len);
    for s in 0..n {
        for (h, x) in table.iter().enumerate() {
            let _ = writeln!(out, "{s},{h},{}", to_decimal(&x[s], 12));
        }
    }
    out
}

/// `Pr(s ⊨ ◊T)` for every state, exactly.
///
/// States in `Bad` get 0 and targets 1; the remaining states are solved as a
/// linear system by Gaussian elimination, which is only attempted when there
/// are at most `cap` of them.
pub fn unbounded_reach(mc: &Mc, cap: usize) -> Result<Vec<Rational>, ExplicitError> {
    let n = mc.num_states();
    let bad = bad_states(mc);
    let unknown: Vec<usize> = (0..n).filter(|s| !mc.is_target(*s) && !bad.contains(s)).collect();
    if unknown.len() > cap {
        return Err(ExplicitError::SizeCap { states: unknown.len(), cap });
    }
    let mut index = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        index[s] = i;
    }
    let m = unknown.len();
    // Rows of [I - P_uu | P_uT · 1].
    let mut a: Vec<Vec<Rational>> = vec![vec![Rational::zero(); m + 1]; m];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] = Rational::one();
        for (t, p) in mc.distribution(s).support() {
            if mc.is_target(*t) {
                a[i][m] += p;
            } else if index[*t] != usize::MAX {
                a[i][index[*t]] -= p;
            }
        }
    }
    for col in 0..m {
        let pivot = (col..m).find(|&r| !a[r][col].is_zero()).expect("system is nonsingular once Bad is removed");
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut().skip(col) {
            *v *= &inv;
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in col..=m {
                    let delta = &factor * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    Ok((0..n)
        .map(|s| {
            if mc.is_target(s) {
                Rational::one()
            } else if index[s] != usize::MAX {
                a[index[s]][m].clone()
            } else {
                Rational::zero()
            }
        })
        .collect())
}
