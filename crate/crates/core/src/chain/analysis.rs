use std::collections::BTreeSet;

use super::{Distribution, MarkovChain, StateId, Weight};

/// Replaces every target row by a probability-one self-loop (the matrix `A`).
pub fn make_absorbing<P: Weight>(mc: &MarkovChain<P>) -> MarkovChain<P> {
    let transitions = mc
        .transitions()
        .iter()
        .enumerate()
        .map(|(s, d)| if mc.is_target(s) { Distribution::dirac(s) } else { d.clone() })
        .collect();
    MarkovChain::from_parts_unchecked(
        mc.labels().to_vec(),
        mc.initial(),
        transitions,
        mc.targets().clone(),
        mc.parameters().to_vec(),
    )
}

/// States from which some state in `goal` is reachable (including `goal` itself).
pub fn can_reach<P: Weight>(mc: &MarkovChain<P>, goal: &BTreeSet<StateId>) -> BTreeSet<StateId> {
    let n = mc.num_states();
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for (s, d) in mc.transitions().iter().enumerate() {
        for t in d.successors() {
            preds[t].push(s);
        }
    }
    let mut seen = vec![false; n];
    let mut stack: Vec<StateId> = goal.iter().copied().collect();
    for &g in goal {
        seen[g] = true;
    }
    while let Some(s) = stack.pop() {
        for &p in &preds[s] {
            if !seen[p] {
                seen[p] = true;
                stack.push(p);
            }
        }
    }
    (0..n).filter(|&s| seen[s]).collect()
}

/// States with no path to a target.
pub fn bad_states<P: Weight>(mc: &MarkovChain<P>) -> BTreeSet<StateId> {
    let good = can_reach(mc, mc.targets());
    (0..mc.num_states()).filter(|s| !good.contains(s)).collect()
}
