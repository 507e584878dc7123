//! Seeded random chains for tests and benchmarks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Distribution, Mc};
use crate::num::rat;

#[derive(Debug, Clone, Copy)]
pub struct RandomChainConfig {
    pub min_states: usize,
    pub max_states: usize,
    pub max_degree: usize,
    /// Weights are integers in `1..=max_weight`, normalized per row.
    pub max_weight: i64,
}

impl Default for RandomChainConfig {
    fn default() -> Self {
        RandomChainConfig { min_states: 2, max_states: 8, max_degree: 4, max_weight: 9 }
    }
}

/// A chain with at least one target; the same seed always yields the same chain.
pub fn random_chain(seed: u64, cfg: RandomChainConfig) -> Mc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(cfg.min_states.max(1)..=cfg.max_states.max(cfg.min_states.max(1)));
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.gen_range(1..=cfg.max_degree.min(n).max(1));
        let succ = sample(&mut rng, n, k).into_vec();
        let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=cfg.max_weight)).collect();
        let total: i64 = weights.iter().sum();
        rows.push(Distribution::new(succ.into_iter().zip(weights.into_iter().map(|w| rat(w, total)))));
    }
    let mut targets: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.25)).collect();
    if targets.is_empty() {
        targets.push(rng.gen_range(0..n));
    }
    let initial = rng.gen_range(0..n);
    Mc::new(initial, rows, targets).expect("random rows are stochastic")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let cfg = RandomChainConfig::default();
        for seed in 0..50 {
            let a = random_chain(seed, cfg);
            assert_eq!(a, random_chain(seed, cfg));
            assert!(a.num_states() <= 8 && a.max_out_degree() <= 4 && !a.targets().is_empty());
        }
    }
}
