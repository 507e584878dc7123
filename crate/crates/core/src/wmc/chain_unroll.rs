use std::collections::{BTreeMap, BTreeSet};

use super::{chain_selectors, coin_chain_weights, Coin, Constraint, Unrolled, WmcError};
use crate::chain::{MarkovChain, StateId, Weight};
use crate::dd::{DdManager, NodeId, VarId};
use crate::num::Polynomial;

/// Which states are counted and which stop a path. Counted states must stop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainQuery {
    pub count: BTreeSet<StateId>,
    pub stop: BTreeSet<StateId>,
}

impl ChainQuery {
    /// First-visit reachability of `targets`.
    pub fn reach(targets: &BTreeSet<StateId>) -> ChainQuery {
        ChainQuery { count: targets.clone(), stop: targets.clone() }
    }
}

/// Causal encoding of `Pr(◊≤h T)` for an explicit chain. Each step keeps,
/// per live state, the condition on coins under which the path is there.
/// Coin `c_{s}_{t}` splits the distribution of state `s` at step `t`; rows
/// with more than two successors get `c_{s}_{t}_{j}` for each position `j`.
pub fn unroll_chain<P: Weight>(mc: &MarkovChain<P>, h: usize) -> Result<Unrolled, WmcError> {
    unroll_chain_with(mc, h, &ChainQuery::reach(mc.targets()))
}

pub fn unroll_chain_with<P: Weight>(mc: &MarkovChain<P>, h: usize, query: &ChainQuery) -> Result<Unrolled, WmcError> {
    debug_assert!(query.count.is_subset(&query.stop));
    let mut mgr = DdManager::new();
    let mut coins = Vec::new();
    let mut constraints = Vec::new();
    let mut constrained = BTreeSet::new();
    let init = mc.initial();
    let mut hit = if query.count.contains(&init) { DdManager::TRUE } else { DdManager::FALSE };
    let mut at: BTreeMap<StateId, NodeId> = BTreeMap::new();
    if !query.stop.contains(&init) {
        at.insert(init, DdManager::TRUE);
    }
    for t in 0..h {
        let mut next: BTreeMap<StateId, NodeId> = BTreeMap::new();
        for (&s, &cond) in &at {
            let support = mc.distribution(s).support();
            let probs: Vec<Polynomial> = support.iter().map(|(_, w)| w.to_polynomial()).collect();
            if probs.iter().any(|p| !p.is_constant()) && constrained.insert(s) {
                constraints.push(Constraint { context: format!("state {}", mc.label(s)), probs: probs.clone() });
            }
            let weights = coin_chain_weights(&probs)?;
            let multi = weights.len() > 1;
            let mut vars: Vec<VarId> = Vec::with_capacity(weights.len());
            for (j, weight) in weights.into_iter().enumerate() {
                let name = if multi {
                    format!("c_{}_{t}_{j}", mc.label(s))
                } else {
                    format!("c_{}_{t}", mc.label(s))
                };
                vars.push(mgr.new_var(name));
                coins.push(Coin { step: t, site: format!("state {} branch {j}", mc.label(s)), weight });
            }
            let selectors = chain_selectors(&mut mgr, &vars)?;
            for ((succ, _), sel) in support.iter().zip(selectors) {
                let c = mgr.and(cond, sel)?;
                if query.count.contains(succ) {
                    hit = mgr.or(hit, c)?;
                }
                if !query.stop.contains(succ) {
                    let slot = next.entry(*succ).or_insert(DdManager::FALSE);
                    *slot = mgr.or(*slot, c)?;
                }
            }
        }
        at = next;
    }
    Ok(Unrolled { manager: mgr, root: hit, coins, constraints, horizon: h, parameters: mc.parameters().to_vec() })
}
