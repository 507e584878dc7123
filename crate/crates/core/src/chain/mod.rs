//! Discrete-time Markov chains with exact (or polynomial) transition weights.
//!
//! A chain is the tuple `⟨S, ι, P, T⟩`: dense state ids `0..n`, an initial
//! state, one [`Distribution`] per state and a target set. The same type
//! carries constant chains ([`Mc`], rational weights) and parametric chains
//! ([`Pmc`], polynomial weights); [`instantiate`] turns the latter into the
//! former for a concrete [`Valuation`].

mod analysis;
mod binarize;
mod oracle;
pub mod random;

use std::collections::BTreeSet;
use std::fmt::Debug;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::num::{is_probability, Polynomial, Rational, Valuation};

pub use analysis::{bad_states, can_reach, make_absorbing};
pub use binarize::{binarize, Binarized, HorizonMap};
pub use oracle::{
    enumerate_reaching_paths, enumerate_reaching_paths_from, path_probability, ReachingPaths,
    DEFAULT_PATH_CAP,
};

pub type StateId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("state {0} does not exist")]
    InvalidState(StateId),
    #[error("state {state} has no outgoing distribution")]
    EmptyDistribution { state: StateId },
    #[error("row of state {state} is not a distribution: {reason}")]
    NotStochastic { state: StateId, reason: String },
    #[error("valuation is not well-defined: {0}")]
    NotWellDefined(WellDefinedReport),
    #[error("invalid path: no transition {from} -> {to}")]
    InvalidPath { from: StateId, to: StateId },
    #[error("empty path")]
    EmptyPath,
    #[error("path enumeration exceeded the budget of {0} paths")]
    BudgetExceeded(usize),
    #[error("malformed chain JSON: {0}")]
    Json(String),
}

/// Transition weight: a rational probability or a polynomial over parameters.
pub trait Weight: Clone + PartialEq + Debug + Send + Sync + 'static {
    fn zero_weight() -> Self;
    fn one_weight() -> Self;
    fn is_zero_weight(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn to_polynomial(&self) -> Polynomial;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self, String>;
}

impl Weight for Rational {
    fn zero_weight() -> Self {
        Zero::zero()
    }
    fn one_weight() -> Self {
        One::one()
    }
    fn is_zero_weight(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn to_polynomial(&self) -> Polynomial {
        Polynomial::constant(self.clone())
    }
    fn to_json(&self) -> Value {
        json!([self.numer().to_string(), self.denom().to_string()])
    }
    fn from_json(v: &Value) -> Result<Self, String> {
        let pair: [String; 2] = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        crate::num::parse_rational(&format!("{}/{}", pair[0], pair[1])).map_err(|e| e.to_string())
    }
}

impl Weight for Polynomial {
    fn zero_weight() -> Self {
        Polynomial::zero()
    }
    fn one_weight() -> Self {
        Polynomial::one()
    }
    fn is_zero_weight(&self) -> bool {
        Polynomial::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn to_polynomial(&self) -> Polynomial {
        self.clone()
    }
    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("polynomials serialize")
    }
    fn from_json(v: &Value) -> Result<Self, String> {
        serde_json::from_value(v.clone()).map_err(|e| e.to_string())
    }
}

/// Finite-support distribution over successor states.
///
/// Entries are sorted by state id, duplicates are merged and zero weights are
/// dropped, so the support is exactly `Succ(s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution<P> {
    support: Vec<(StateId, P)>,
}

impl<P: Weight> Distribution<P> {
    pub fn new(entries: impl IntoIterator<Item = (StateId, P)>) -> Self {
        let mut support: Vec<(StateId, P)> = Vec::new();
        let mut entries: Vec<_> = entries.into_iter().collect();
        entries.sort_by_key(|(s, _)| *s);
        for (s, w) in entries {
            match support.last_mut() {
                Some((last, acc)) if *last == s => *acc = acc.add(&w),
                _ => support.push((s, w)),
            }
        }
        support.retain(|(_, w)| !w.is_zero_weight());
        Distribution { support }
    }

    pub fn dirac(s: StateId) -> Self {
        Distribution { support: vec![(s, P::one_weight())] }
    }

    pub fn support(&self) -> &[(StateId, P)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn get(&self, s: StateId) -> Option<&P> {
        self.support
            .binary_search_by_key(&s, |(t, _)| *t)
            .ok()
            .map(|i| &self.support[i].1)
    }

    pub fn successors(&self) -> impl Iterator<Item = StateId> + '_ {
        self.support.iter().map(|(s, _)| *s)
    }
}

/// A (parametric) Markov chain `⟨S, ι, P, T⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovChain<P> {
    labels: Vec<String>,
    initial: StateId,
    transitions: Vec<Distribution<P>>,
    targets: BTreeSet<StateId>,
    parameters: Vec<String>,
}

/// Chain with constant rational probabilities.
pub type Mc = MarkovChain<Rational>;
/// Parametric chain with polynomial transition weights.
pub type Pmc = MarkovChain<Polynomial>;

impl<P: Weight> MarkovChain<P> {
    /// Builds a chain, checking that all state references are valid.
    ///
    /// Constant chains additionally need every row to be a probability
    /// distribution; parametric rows are checked per valuation instead.
    pub fn new(
        initial: StateId,
        transitions: Vec<Distribution<P>>,
        targets: impl IntoIterator<Item = StateId>,
    ) -> Result<Self, ChainError> {
        let labels = (0..transitions.len()).map(|s| s.to_string()).collect();
        Self::with_labels(labels, initial, transitions, targets)
    }

    pub fn with_labels(
        labels: Vec<String>,
        initial: StateId,
        transitions: Vec<Distribution<P>>,
        targets: impl IntoIterator<Item = StateId>,
    ) -> Result<Self, ChainError> {
        let n = transitions.len();
        if initial >= n {
            return Err(ChainError::InvalidState(initial));
        }
        assert_eq!(labels.len(), n, "one label per state");
        let targets: BTreeSet<StateId> = targets.into_iter().collect();
        if let Some(&bad) = targets.iter().find(|&&t| t >= n) {
            return Err(ChainError::InvalidState(bad));
        }
        let mut parameters = BTreeSet::new();
        for (s, d) in transitions.iter().enumerate() {
            if d.is_empty() {
                return Err(ChainError::EmptyDistribution { state: s });
            }
            for (t, w) in d.support() {
                if *t >= n {
                    return Err(ChainError::InvalidState(*t));
                }
                parameters.extend(w.to_polynomial().parameters());
            }
        }
        let chain = MarkovChain {
            labels,
            initial,
            transitions,
            targets,
            parameters: parameters.into_iter().collect(),
        };
        if chain.parameters.is_empty() {
            for (s, d) in chain.transitions.iter().enumerate() {
                check_constant_row(s, d.support().iter().map(|(_, w)| w.to_polynomial()))?;
            }
        }
        Ok(chain)
    }

    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn targets(&self) -> &BTreeSet<StateId> {
        &self.targets
    }

    pub fn is_target(&self, s: StateId) -> bool {
        self.targets.contains(&s)
    }

    pub fn distribution(&self, s: StateId) -> &Distribution<P> {
        &self.transitions[s]
    }

    pub fn transitions(&self) -> &[Distribution<P>] {
        &self.transitions
    }

    pub fn label(&self, s: StateId) -> &str {
        &self.labels[s]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Parameter names, sorted. Empty for constant chains.
    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().map(Distribution::len).sum()
    }

    pub fn max_out_degree(&self) -> usize {
        self.transitions.iter().map(Distribution::len).max().unwrap_or(0)
    }

    /// Same chain with a different target set.
    pub fn with_targets(&self, targets: impl IntoIterator<Item = StateId>) -> Result<Self, ChainError> {
        Self::with_labels(
            self.labels.clone(),
            self.initial,
            self.transitions.clone(),
            targets,
        )
    }

    /// Same chain started from another state.
    pub fn with_initial(&self, initial: StateId) -> Result<Self, ChainError> {
        if initial >= self.num_states() {
            return Err(ChainError::InvalidState(initial));
        }
        let mut out = self.clone();
        out.initial = initial;
        Ok(out)
    }

    /// Canonical JSON form used by golden files.
    pub fn to_json(&self) -> Value {
        let transitions: Vec<Value> = self
            .transitions
            .iter()
            .map(|d| {
                Value::Array(
                    d.support()
                        .iter()
                        .map(|(t, w)| json!({"to": t, "p": w.to_json()}))
                        .collect(),
                )
            })
            .collect();
        json!({
            "initial": self.initial,
            "labels": self.labels,
            "parameters": self.parameters,
            "targets": self.targets,
            "transitions": transitions,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, ChainError> {
        let err = |m: &str| ChainError::Json(m.to_string());
        let initial = v["initial"].as_u64().ok_or_else(|| err("initial"))? as usize;
        let labels: Vec<String> =
            serde_json::from_value(v["labels"].clone()).map_err(|e| ChainError::Json(e.to_string()))?;
        let targets: Vec<StateId> =
            serde_json::from_value(v["targets"].clone()).map_err(|e| ChainError::Json(e.to_string()))?;
        let rows = v["transitions"].as_array().ok_or_else(|| err("transitions"))?;
        let mut transitions = Vec::with_capacity(rows.len());
        for row in rows {
            let entries = row.as_array().ok_or_else(|| err("row"))?;
            let mut support = Vec::with_capacity(entries.len());
            for e in entries {
                let to = e["to"].as_u64().ok_or_else(|| err("to"))? as usize;
                let p = P::from_json(&e["p"]).map_err(ChainError::Json)?;
                support.push((to, p));
            }
            transitions.push(Distribution::new(support));
        }
        if labels.len() != transitions.len() {
            return Err(err("labels and transitions differ in length"));
        }
        Self::with_labels(labels, initial, transitions, targets)
    }

    pub(crate) fn from_parts_unchecked(
        labels: Vec<String>,
        initial: StateId,
        transitions: Vec<Distribution<P>>,
        targets: BTreeSet<StateId>,
        parameters: Vec<String>,
    ) -> Self {
        MarkovChain { labels, initial, transitions, targets, parameters }
    }
}

impl Mc {
    pub fn probability(&self, from: StateId, to: StateId) -> Rational {
        self.transitions[from].get(to).cloned().unwrap_or_else(Rational::zero)
    }

    /// Lifts a constant chain to the parametric representation.
    pub fn to_pmc(&self) -> Pmc {
        MarkovChain {
            labels: self.labels.clone(),
            initial: self.initial,
            transitions: self
                .transitions
                .iter()
                .map(|d| Distribution::new(d.support().iter().map(|(t, w)| (*t, w.to_polynomial()))))
                .collect(),
            targets: self.targets.clone(),
            parameters: Vec::new(),
        }
    }
}

impl Pmc {
    /// Converts a parameter-free chain to rational weights.
    pub fn to_mc(&self) -> Result<Mc, ChainError> {
        instantiate(self, &Valuation::new())
    }
}

fn check_constant_row(state: StateId, weights: impl Iterator<Item = Polynomial>) -> Result<(), ChainError> {
    let mut sum = Rational::zero();
    for w in weights {
        let c = w.as_constant().expect("constant row");
        if !is_probability(&c) {
            return Err(ChainError::NotStochastic { state, reason: format!("weight {c} outside [0,1]") });
        }
        sum += c;
    }
    if !sum.is_one() {
        return Err(ChainError::NotStochastic { state, reason: format!("weights sum to {sum}") });
    }
    Ok(())
}

/// One offending entry of a valuation check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `P[u](state, successor)` lies outside `[0,1]`.
    OutOfRange { state: StateId, successor: StateId, value: Rational },
    /// The row of `state` does not sum to one.
    RowSum { state: StateId, sum: Rational },
    /// A parameter of the chain has no value.
    Unbound { parameter: String },
}

/// All violations of well-definedness for one valuation; empty iff well-defined.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WellDefinedReport {
    pub violations: Vec<Violation>,
}

impl WellDefinedReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// States with at least one violation, sorted.
    pub fn states(&self) -> BTreeSet<StateId> {
        self.violations
            .iter()
            .filter_map(|v| match v {
                Violation::OutOfRange { state, .. } | Violation::RowSum { state, .. } => Some(*state),
                Violation::Unbound { .. } => None,
            })
            .collect()
    }
}

impl std::fmt::Display for WellDefinedReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match v {
                Violation::OutOfRange { state, successor, value } => {
                    write!(f, "P({state},{successor}) = {value} not in [0,1]")?
                }
                Violation::RowSum { state, sum } => write!(f, "row {state} sums to {sum}")?,
                Violation::Unbound { parameter } => write!(f, "parameter {parameter} unbound")?,
            }
        }
        Ok(())
    }
}

/// Lists every branch and row that `u` fails to turn into a distribution.
pub fn is_well_defined(pmc: &Pmc, u: &Valuation) -> WellDefinedReport {
    evaluate_rows(pmc, u).1
}

fn evaluate_rows(pmc: &Pmc, u: &Valuation) -> (Vec<Distribution<Rational>>, WellDefinedReport) {
    let mut report = WellDefinedReport::default();
    for p in pmc.parameters() {
        if !u.contains_key(p) {
            report.violations.push(Violation::Unbound { parameter: p.clone() });
        }
    }
    if !report.is_empty() {
        return (Vec::new(), report);
    }
    let mut rows = Vec::with_capacity(pmc.num_states());
    for (s, d) in pmc.transitions.iter().enumerate() {
        let mut sum = Rational::zero();
        let mut row = Vec::with_capacity(d.support().len());
        for (t, w) in d.support() {
            let value = w.eval(u).expect("all parameters bound");
            if !is_probability(&value) {
                report.violations.push(Violation::OutOfRange { state: s, successor: *t, value: value.clone() });
            }
            sum += &value;
            row.push((*t, value));
        }
        if !sum.is_one() {
            report.violations.push(Violation::RowSum { state: s, sum });
        }
        rows.push(Distribution::new(row));
    }
    (rows, report)
}

/// `M[u]`: substitutes the valuation into every transition weight.
pub fn instantiate(pmc: &Pmc, u: &Valuation) -> Result<Mc, ChainError> {
    let (transitions, report) = evaluate_rows(pmc, u);
    if !report.is_empty() {
        return Err(ChainError::NotWellDefined(report));
    }
    Ok(MarkovChain {
        labels: pmc.labels.clone(),
        initial: pmc.initial,
        transitions,
        targets: pmc.targets.clone(),
        parameters: Vec::new(),
    })
}

/// A path `s0 … sn`; its length is the number of transitions `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path(pub Vec<StateId>);

impl Path {
    pub fn len(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.0.len() <= 1
    }

    pub fn last(&self) -> StateId {
        *self.0.last().expect("paths are nonempty")
    }

    pub fn states(&self) -> &[StateId] {
        &self.0
    }
}

/// Toy chain used throughout the docs and tests: states `⟨0,0⟩ ⟨0,1⟩ ⟨1,0⟩ ⟨1,1⟩`
/// (ids 0..4 in that lexicographic order), target `⟨1,0⟩`.
pub fn toy_chain() -> Mc {
    use crate::num::rat;
    let d = |e: &[(StateId, Rational)]| Distribution::new(e.iter().cloned());
    MarkovChain::with_labels(
        vec!["<0,0>".into(), "<0,1>".into(), "<1,0>".into(), "<1,1>".into()],
        0,
        vec![
            d(&[(0, rat(3, 5)), (1, rat(2, 5))]),
            d(&[(2, rat(1, 2)), (3, rat(1, 2))]),
            d(&[(0, rat(3, 5)), (3, rat(2, 5))]),
            d(&[(2, rat(1, 2)), (3, rat(1, 2))]),
        ],
        [2],
    )
    .expect("toy chain is well-formed")
}

/// Parametric toy chain: like [`toy_chain`] with `p`, `q` in place of 0.4, 0.5,
/// and `⟨1,1⟩ → ⟨0,0⟩` with weight `1-q` instead of the self-loop.
pub fn toy_pmc() -> Pmc {
    let p = Polynomial::var("p");
    let q = Polynomial::var("q");
    let one = Polynomial::one();
    let np = &one - &p;
    let nq = &one - &q;
    MarkovChain::with_labels(
        vec!["<0,0>".into(), "<0,1>".into(), "<1,0>".into(), "<1,1>".into()],
        0,
        vec![
            Distribution::new([(0, np.clone()), (1, p.clone())]),
            Distribution::new([(2, q.clone()), (3, nq.clone())]),
            Distribution::new([(0, np), (3, p)]),
            Distribution::new([(2, q), (0, nq)]),
        ],
        [2],
    )
    .expect("toy pMC is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat};

    fn val(pairs: &[(&str, Rational)]) -> Valuation {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn distributions_normalize() {
        let d: Distribution<Rational> =
            Distribution::new([(3, rat(1, 4)), (1, rat(1, 4)), (3, rat(1, 4)), (2, int(0)), (0, rat(1, 4))]);
        assert_eq!(d.support(), &[(0, rat(1, 4)), (1, rat(1, 4)), (3, rat(1, 2))]);
        assert_eq!(d.get(2), None);
    }

    #[test]
    fn rows_must_be_stochastic() {
        let bad = Mc::new(0, vec![Distribution::new([(0, rat(1, 2))])], []);
        assert!(matches!(bad, Err(ChainError::NotStochastic { state: 0, .. })));
        let out_of_range = Mc::new(0, vec![Distribution::new([(0, rat(3, 2)), (1, rat(-1, 2))]), Distribution::dirac(1)], []);
        assert!(matches!(out_of_range, Err(ChainError::NotStochastic { .. })));
        let dangling = Mc::new(0, vec![Distribution::dirac(4)], []);
        assert_eq!(dangling, Err(ChainError::InvalidState(4)));
        assert_eq!(Mc::new(2, vec![Distribution::dirac(0)], []), Err(ChainError::InvalidState(2)));
        assert_eq!(Mc::new(0, vec![Distribution::dirac(0)], [1]), Err(ChainError::InvalidState(1)));
    }

    #[test]
    fn toy_pmc_instantiates_and_reaches() {
        let pmc = toy_pmc();
        assert_eq!(pmc.parameters(), &["p".to_string(), "q".to_string()]);
        let mc = instantiate(&pmc, &val(&[("p", rat(2, 5)), ("q", rat(1, 2))])).unwrap();
        let mass = enumerate_reaching_paths(&mc, 3, DEFAULT_PATH_CAP).unwrap().mass;
        assert_eq!(mass, rat(21, 50));
    }

    #[test]
    fn degenerate_boundary_valuation_is_legal() {
        let pmc = Pmc::new(
            0,
            vec![
                Distribution::new([(0, Polynomial::var("p")), (1, &Polynomial::one() - &Polynomial::var("p"))]),
                Distribution::dirac(1),
            ],
            [1],
        )
        .unwrap();
        let mc = instantiate(&pmc, &val(&[("p", int(0))])).unwrap();
        assert_eq!(mc.distribution(0).support(), &[(1, int(1))]);
    }

    #[test]
    fn well_definedness_report() {
        let pmc = toy_pmc();
        for (p, q) in [(int(0), int(1)), (rat(1, 3), rat(7, 9)), (int(1), int(0))] {
            assert!(is_well_defined(&pmc, &val(&[("p", p), ("q", q)])).is_empty());
        }
        let report = is_well_defined(&pmc, &val(&[("p", int(2)), ("q", rat(1, 2))]));
        // Both states whose rows use p are flagged.
        assert_eq!(report.states(), BTreeSet::from([0, 2]));
        let unbound = is_well_defined(&pmc, &val(&[("p", int(0))]));
        assert_eq!(unbound.violations, vec![Violation::Unbound { parameter: "q".into() }]);
        assert!(matches!(instantiate(&pmc, &val(&[("p", int(2)), ("q", int(0))])), Err(ChainError::NotWellDefined(_))));
    }

    #[test]
    fn json_round_trips() {
        let mc = toy_chain();
        let back = Mc::from_json(&mc.to_json()).unwrap();
        assert_eq!(back, mc);
        let pmc = toy_pmc();
        let back = Pmc::from_json(&pmc.to_json()).unwrap();
        assert_eq!(back, pmc);
        let text = serde_json::to_string(&mc.to_json()).unwrap();
        assert!(text.contains(r#"{"p":["3","5"],"to":0}"#), "{text}");
    }
}
