//! Brute-force path enumeration. Small instances only; every engine is tested against it.

use num_traits::{One, Zero};

use super::{ChainError, Mc, Path, StateId};
use crate::num::Rational;

/// Default bound on the number of path prefixes the oracle may visit.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachingPaths {
    pub paths: Vec<Path>,
    pub mass: Rational,
}

/// `Pr(π)`: product of the transition probabilities along `pi`.
pub fn path_probability(mc: &Mc, pi: &Path) -> Result<Rational, ChainError> {
    let states = pi.states();
    let first = *states.first().ok_or(ChainError::EmptyPath)?;
    if first >= mc.num_states() {
        return Err(ChainError::InvalidState(first));
    }
    let mut pr = Rational::one();
    for w in states.windows(2) {
        let (from, to) = (w[0], w[1]);
        if to >= mc.num_states() {
            return Err(ChainError::InvalidState(to));
        }
        match mc.distribution(from).get(to) {
            Some(p) => pr *= p,
            None => return Err(ChainError::InvalidPath { from, to }),
        }
    }
    Ok(pr)
}

/// The paths from the initial state of length at most `h` that end in a target
/// and visit no target before their last state, with their total probability.
pub fn enumerate_reaching_paths(mc: &Mc, h: usize, cap: usize) -> Result<ReachingPaths, ChainError> {
    enumerate_reaching_paths_from(mc, mc.initial(), h, cap)
}

pub fn enumerate_reaching_paths_from(
    mc: &Mc,
    start: StateId,
    h: usize,
    cap: usize,
) -> Result<ReachingPaths, ChainError> {
    if start >= mc.num_states() {
        return Err(ChainError::InvalidState(start));
    }
    let mut out = ReachingPaths { paths: Vec::new(), mass: Rational::zero() };
    let mut visited = 0usize;
    let mut prefix = vec![start];
    dfs(mc, h, cap, &mut prefix, Rational::one(), &mut visited, &mut out)?;
    Ok(out)
}

fn dfs(
    mc: &Mc,
    remaining: usize,
    cap: usize,
    prefix: &mut Vec<StateId>,
    pr: Rational,
    visited: &mut usize,
    out: &mut ReachingPaths,
) -> Result<(), ChainError> {
    *visited += 1;
    if *visited > cap {
        return Err(ChainError::BudgetExceeded(cap));
    }
    let s = *prefix.last().expect("nonempty prefix");
    if mc.is_target(s) {
        out.mass += &pr;
        out.paths.push(Path(prefix.clone()));
        return Ok(());
    }
    if remaining == 0 {
        return Ok(());
    }
    for (t, p) in mc.distribution(s).support() {
        prefix.push(*t);
        dfs(mc, remaining - 1, cap, prefix, &pr * p, visited, out)?;
        prefix.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::toy_chain;
    use crate::num::{int, rat};

    #[test]
    fn toy_path_probabilities() {
        let mc = toy_chain();
        assert_eq!(path_probability(&mc, &Path(vec![0, 1, 2])).unwrap(), rat(1, 5));
        assert_eq!(path_probability(&mc, &Path(vec![3])).unwrap(), int(1));
        assert_eq!(path_probability(&mc, &Path(vec![0, 0, 1, 2])).unwrap(), rat(3, 25));
        assert_eq!(
            path_probability(&mc, &Path(vec![0, 2])),
            Err(ChainError::InvalidPath { from: 0, to: 2 })
        );
        assert_eq!(path_probability(&mc, &Path(vec![])), Err(ChainError::EmptyPath));
    }

    #[test]
    fn toy_has_three_reaching_paths() {
        let r = enumerate_reaching_paths(&toy_chain(), 3, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(r.paths.len(), 3);
        assert_eq!(r.mass, rat(21, 50));
        assert!(r.paths.iter().all(|p| p.last() == 2 && p.len() <= 3));
    }

    #[test]
    fn zero_horizon_in_target() {
        let mc = toy_chain().with_initial(2).unwrap();
        let r = enumerate_reaching_paths(&mc, 0, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(r.paths, vec![Path(vec![2])]);
        assert_eq!(r.paths[0].len(), 0);
        assert_eq!(r.mass, int(1));
    }

    #[test]
    fn budget_is_enforced() {
        let err = enumerate_reaching_paths(&toy_chain(), 30, 100).unwrap_err();
        assert_eq!(err, ChainError::BudgetExceeded(100));
    }
}
