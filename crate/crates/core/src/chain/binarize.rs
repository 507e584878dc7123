//! Out-degree reduction to at most two successors per state.
//!
//! Each row with successors `s1 < … < sk` becomes a binary tree of depth
//! `d = ⌈log2 Δ⌉`, where `Δ` is the maximal out-degree of the chain. The left
//! subtree takes the first `⌊k/2⌋` successors; a group of one successor above
//! the leaves is padded with probability-one auxiliary steps. Every original
//! step therefore costs exactly `d` binarized steps, and targets are only ever
//! entered at multiples of `d`.

use num_traits::{One, Zero};

use super::{Distribution, Mc, StateId};
use crate::num::Rational;

/// Translation from original horizons to binarized horizons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HorizonMap {
    /// Binarized steps per original step.
    pub depth: usize,
}

impl HorizonMap {
    pub fn map(&self, h: usize) -> usize {
        h * self.depth
    }
}

#[derive(Debug, Clone)]
pub struct Binarized {
    pub chain: Mc,
    pub horizon: HorizonMap,
    /// `auxiliary[s]` is true for inserted states. Original states keep their ids.
    pub auxiliary: Vec<bool>,
}

impl Binarized {
    pub fn num_original_states(&self) -> usize {
        self.auxiliary.iter().filter(|a| !**a).count()
    }
}

pub fn binarize(mc: &Mc) -> Binarized {
    let max_degree = mc.max_out_degree().max(1);
    let depth = (usize::BITS - (max_degree - 1).leading_zeros()).max(1) as usize;
    let n = mc.num_states();
    let mut b = Builder {
        labels: mc.labels().to_vec(),
        rows: vec![None; n],
    };
    for s in 0..n {
        let entries = mc.distribution(s).support().to_vec();
        let row = b.split(s, &entries, depth);
        b.rows[s] = Some(row);
    }
    let auxiliary = (0..b.rows.len()).map(|s| s >= n).collect();
    let transitions = b.rows.into_iter().map(|r| r.expect("every row built")).collect();
    let chain = Mc::with_labels(b.labels, mc.initial(), transitions, mc.targets().iter().copied())
        .expect("binarization preserves stochasticity");
    Binarized { chain, horizon: HorizonMap { depth }, auxiliary }
}

struct Builder {
    labels: Vec<String>,
    rows: Vec<Option<Distribution<Rational>>>,
}

impl Builder {
    /// Row of a node that reaches `entries` (weights relative to their sum) in exactly `depth` steps.
    fn split(&mut self, owner: StateId, entries: &[(StateId, Rational)], depth: usize) -> Distribution<Rational> {
        debug_assert!(depth >= 1 && entries.len() <= 1 << depth);
        if entries.len() == 1 {
            let child = self.subtree(owner, entries, depth - 1);
            return Distribution::dirac(child);
        }
        let (left, right) = entries.split_at(entries.len() / 2);
        let total: Rational = entries.iter().map(|(_, p)| p).fold(Rational::zero(), |a, b| a + b);
        let left_mass: Rational = left.iter().map(|(_, p)| p).fold(Rational::zero(), |a, b| a + b);
        let pl = &left_mass / &total;
        let pr = Rational::one() - &pl;
        let l = self.subtree(owner, left, depth - 1);
        let r = self.subtree(owner, right, depth - 1);
        Distribution::new([(l, pl), (r, pr)])
    }

    fn subtree(&mut self, owner: StateId, entries: &[(StateId, Rational)], depth: usize) -> StateId {
        if depth == 0 {
            debug_assert_eq!(entries.len(), 1);
            return entries[0].0;
        }
        let id = self.rows.len();
        self.labels.push(format!("{}#{}", self.labels[owner], id));
        self.rows.push(None);
        let row = self.split(owner, entries, depth);
        self.rows[id] = Some(row);
        id
    }
}
