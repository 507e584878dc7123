//! Weighted model counting over causally ordered coin encodings.
//!
//! A horizon-`h` query is unrolled into a BDD `φ` over boolean coins, one
//! coin per binary split of a transition distribution and time step. Coins are
//! created step by step, so the variable order is step-major. Each coin `c`
//! has a weight `W(c)`; the weighted model count of `φ` is the reachability
//! probability:
//!
//! ```
//! use pathwise::chain::toy_chain;
//! use pathwise::num::rat;
//! use pathwise::wmc::unroll_chain;
//!
//! let phi = unroll_chain(&toy_chain(), 3).unwrap();
//! assert_eq!(phi.wmc().unwrap(), rat(21, 50));
//! ```

mod bounds;
mod chain_unroll;
mod program;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Zero};

use crate::chain::{ChainError, Distribution, Mc};
use crate::dd::{DdError, DdManager, NodeId, NodeView, Terminal, VarId};
use crate::lang::LangError;
use crate::num::{is_probability, to_f64, NumError, Polynomial, Rational, Valuation};

pub use bounds::{indefinite_bounds_chain, indefinite_bounds_program, Bounds};
pub use chain_unroll::{unroll_chain, unroll_chain_with, ChainQuery};
pub use program::{unroll_program, unroll_program_with, Predicate, ProgramQuery};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WmcError {
    #[error("coin `{0}` has no constant weight")]
    MissingWeight(String),
    #[error("residual {residual} does not divide {numerator}")]
    NonConstantResidual { numerator: Polynomial, residual: Polynomial },
    #[error("valuation is not well defined: {0}")]
    NotWellDefined(String),
    #[error(transparent)]
    Dd(#[from] DdError),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Weight of one coin: a polynomial, or a quotient of polynomials when a
/// parametric residual does not divide the branch probability.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoinWeight {
    Poly(Polynomial),
    Quotient { num: Polynomial, den: Polynomial },
}

impl CoinWeight {
    pub fn as_constant(&self) -> Option<Rational> {
        match self {
            CoinWeight::Poly(p) => p.as_constant(),
            CoinWeight::Quotient { .. } => None,
        }
    }

    /// A zero denominator means the coin is only reached with probability
    /// zero, so any weight works; it evaluates to 0.
    pub fn eval(&self, u: &Valuation) -> Result<Rational, NumError> {
        match self {
            CoinWeight::Poly(p) => p.eval(u),
            CoinWeight::Quotient { num, den } => {
                let d = den.eval(u)?;
                if d.is_zero() {
                    Ok(Rational::zero())
                } else {
                    Ok(num.eval(u)? / d)
                }
            }
        }
    }

    pub fn eval_f64(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, NumError> {
        match self {
            CoinWeight::Poly(p) => p.eval_f64(lookup),
            CoinWeight::Quotient { num, den } => {
                let d = den.eval_f64(lookup)?;
                Ok(if d == 0.0 { 0.0 } else { num.eval_f64(lookup)? / d })
            }
        }
    }

    pub fn parameters(&self) -> BTreeSet<String> {
        match self {
            CoinWeight::Poly(p) => p.parameters(),
            CoinWeight::Quotient { num, den } => num.parameters().union(&den.parameters()).cloned().collect(),
        }
    }
}

impl fmt::Display for CoinWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoinWeight::Poly(p) => write!(f, "{p}"),
            CoinWeight::Quotient { num, den } => write!(f, "({num}) / ({den})"),
        }
    }
}

/// Coin weights for a distribution `p_1..p_k`: `k - 1` coins where coin `j`
/// has weight `p_j / (1 - p_1 - ... - p_{j-1})`. Heads on coin `j` (after
/// tails on all earlier coins) selects branch `j`; tails everywhere selects
/// branch `k`.
pub fn coin_chain(probs: &[Polynomial]) -> Result<Vec<Polynomial>, WmcError> {
    coin_chain_weights(probs)?
        .into_iter()
        .map(|w| match w {
            CoinWeight::Poly(p) => Ok(p),
            CoinWeight::Quotient { num, den } => Err(WmcError::NonConstantResidual { numerator: num, residual: den }),
        })
        .collect()
}

/// Like [`coin_chain`], with quotient weights where the residual does not divide.
pub fn coin_chain_weights(probs: &[Polynomial]) -> Result<Vec<CoinWeight>, WmcError> {
    let mut out = Vec::with_capacity(probs.len().saturating_sub(1));
    let mut residual = Polynomial::one();
    for p in &probs[..probs.len().saturating_sub(1)] {
        let w = if let Some(c) = residual.as_constant() {
            if c.is_zero() {
                CoinWeight::Poly(Polynomial::zero())
            } else {
                CoinWeight::Poly(p.scale(&c.recip()))
            }
        } else if let Some(q) = p.div_exact(&residual) {
            CoinWeight::Poly(q)
        } else {
            CoinWeight::Quotient { num: p.clone(), den: residual.clone() }
        };
        out.push(w);
        residual = &residual - p;
    }
    Ok(out)
}

/// Selector BDDs for a coin chain over `coins`: entry `j` is
/// `¬c_1 ∧ … ∧ ¬c_j ∧ c_{j+1}`, the last entry is all tails.
pub(crate) fn chain_selectors(mgr: &mut DdManager, coins: &[VarId]) -> Result<Vec<NodeId>, DdError> {
    let mut out = Vec::with_capacity(coins.len() + 1);
    let mut tails = DdManager::TRUE;
    for &c in coins {
        let heads = mgr.var(c)?;
        out.push(mgr.and(tails, heads)?);
        let t = mgr.nvar(c)?;
        tails = mgr.and(tails, t)?;
    }
    out.push(tails);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coin {
    /// Time step the coin decides (0-based: the move from step `t` to `t + 1`).
    pub step: usize,
    /// What the coin splits, for diagnostics.
    pub site: String,
    pub weight: CoinWeight,
}

/// Parametric distributions a valuation must turn into probability
/// distributions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub context: String,
    pub probs: Vec<Polynomial>,
}

impl Constraint {
    pub fn check(&self, u: &Valuation) -> Result<(), WmcError> {
        let mut sum = Rational::zero();
        for p in &self.probs {
            let v = p.eval(u)?;
            if !is_probability(&v) {
                return Err(WmcError::NotWellDefined(format!("{}: {p} = {v} outside [0,1]", self.context)));
            }
            sum += v;
        }
        if !sum.is_one() {
            return Err(WmcError::NotWellDefined(format!("{}: probabilities sum to {sum}", self.context)));
        }
        Ok(())
    }
}

/// An unrolled query: `φ` plus its coins. Every variable of the manager is a
/// coin, indexed by its [`VarId`].
#[derive(Debug, Clone)]
pub struct Unrolled {
    pub manager: DdManager,
    pub root: NodeId,
    pub coins: Vec<Coin>,
    pub constraints: Vec<Constraint>,
    pub horizon: usize,
    pub parameters: Vec<String>,
}

impl Unrolled {
    pub fn node_count(&self) -> usize {
        self.manager.node_count(self.root)
    }

    /// Number of inner (decision) nodes of `φ`.
    pub fn inner_nodes(&self) -> usize {
        self.manager.reachable(self.root).iter().filter(|&&n| !self.manager.is_terminal(n)).count()
    }

    pub fn num_coins(&self) -> usize {
        self.coins.len()
    }

    pub fn coin(&self, name: &str) -> Option<VarId> {
        (0..self.coins.len() as VarId).find(|&v| self.manager.var_name(v) == name)
    }

    fn constant_weight(&self, v: VarId) -> Result<Rational, WmcError> {
        self.coins[v as usize].weight.as_constant().ok_or_else(|| WmcError::MissingWeight(self.manager.var_name(v).into()))
    }

    /// Exact count with constant weights.
    pub fn wmc(&self) -> Result<Rational, WmcError> {
        wmc_by(&self.manager, self.root, &|v| self.constant_weight(v))
    }

    pub fn wmc_f64(&self) -> Result<f64, WmcError> {
        wmc_by(&self.manager, self.root, &|v| self.constant_weight(v).map(|r| to_f64(&r)))
    }

    /// Count at a valuation; checks well-definedness first.
    pub fn wmc_at(&self, u: &Valuation) -> Result<Rational, WmcError> {
        for c in &self.constraints {
            c.check(u)?;
        }
        wmc_by(&self.manager, self.root, &|v| Ok(self.coins[v as usize].weight.eval(u)?))
    }

    pub fn solution_function(&self) -> SolutionFunction {
        SolutionFunction::new(self)
    }

    /// Distinct coin weights `W(c)` over the coins `φ` depends on.
    pub fn distinct_weights(&self) -> BTreeSet<CoinWeight> {
        self.manager.support(self.root).into_iter().map(|v| self.coins[v as usize].weight.clone()).collect()
    }

    /// Distinct edge labels `W(c)` and `1 - W(c)` over the coins `φ` depends on.
    pub fn distinct_edge_probabilities(&self) -> BTreeSet<CoinWeight> {
        let mut out = BTreeSet::new();
        for w in self.distinct_weights() {
            let complement = match &w {
                CoinWeight::Poly(p) => CoinWeight::Poly(&Polynomial::one() - p),
                CoinWeight::Quotient { num, den } => CoinWeight::Quotient { num: den - num, den: den.clone() },
            };
            out.insert(w);
            out.insert(complement);
        }
        out
    }

    /// The chain induced by `φ` under constant weights; see [`bdd_as_mc`].
    pub fn to_mc(&self) -> Result<Mc, WmcError> {
        bdd_as_mc(&self.manager, self.root, &|v| self.constant_weight(v))
    }

    pub fn to_dot(&self) -> String {
        self.manager.to_dot(self.root)
    }
}

/// Arithmetic for the counting pass.
trait Field: Clone {
    fn zero_value() -> Self;
    fn one_value() -> Self;
    /// `w * hi + (1 - w) * lo`
    fn mix(w: &Self, hi: &Self, lo: &Self) -> Self;
}

impl Field for Rational {
    fn zero_value() -> Self {
        Rational::zero()
    }
    fn one_value() -> Self {
        Rational::one()
    }
    fn mix(w: &Self, hi: &Self, lo: &Self) -> Self {
        lo + w * (hi - lo)
    }
}

impl Field for f64 {
    fn zero_value() -> Self {
        0.0
    }
    fn one_value() -> Self {
        1.0
    }
    fn mix(w: &Self, hi: &Self, lo: &Self) -> Self {
        w * hi + (1.0 - w) * lo
    }
}

fn wmc_by<T: Field>(
    mgr: &DdManager,
    root: NodeId,
    weight: &dyn Fn(VarId) -> Result<T, WmcError>,
) -> Result<T, WmcError> {
    let mut value: HashMap<NodeId, T> = HashMap::new();
    for n in mgr.reachable(root) {
        let v = match mgr.view(n) {
            NodeView::Terminal(Terminal::Bool(b)) => {
                if *b {
                    T::one_value()
                } else {
                    T::zero_value()
                }
            }
            NodeView::Terminal(Terminal::Value(_)) => return Err(DdError::MixedTerminalKinds.into()),
            NodeView::Inner { var, low, high } => T::mix(&weight(var)?, &value[&high], &value[&low]),
        };
        value.insert(n, v);
    }
    Ok(value.remove(&root).expect("root is reachable"))
}

/// `WMC(φ, W)`: one bottom-up pass, `value(v) = W(var v)·value(high) + (1 - W(var v))·value(low)`.
pub fn wmc(mgr: &DdManager, root: NodeId, weight: &dyn Fn(VarId) -> Option<Rational>) -> Result<Rational, WmcError> {
    wmc_by(mgr, root, &|v| weight(v).ok_or_else(|| WmcError::MissingWeight(mgr.var_name(v).into())))
}

/// The Markov chain induced by a BDD: one state per reachable node, the high
/// edge taken with probability `W(var)` and the low edge with `1 - W(var)`,
/// terminals absorbing, the true terminal the only target. Its reachability
/// probability equals `WMC(φ, W)`.
pub fn bdd_as_mc(
    mgr: &DdManager,
    root: NodeId,
    weight: &dyn Fn(VarId) -> Result<Rational, WmcError>,
) -> Result<Mc, WmcError> {
    // Root first, then the rest in reverse topological order.
    let mut nodes = mgr.reachable(root);
    nodes.reverse();
    let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut labels = Vec::with_capacity(nodes.len());
    let mut rows = Vec::with_capacity(nodes.len());
    let mut targets = Vec::new();
    for (i, &n) in nodes.iter().enumerate() {
        match mgr.view(n) {
            NodeView::Terminal(t) => {
                if *t == Terminal::Bool(true) {
                    targets.push(i);
                }
                labels.push(t.to_string());
                rows.push(Distribution::dirac(i));
            }
            NodeView::Inner { var, low, high } => {
                let w = weight(var)?;
                labels.push(format!("{n}:{}", mgr.var_name(var)));
                rows.push(Distribution::new([(index[&high], w.clone()), (index[&low], Rational::one() - w)]));
            }
        }
    }
    Ok(Mc::with_labels(labels, 0, rows, targets)?)
}

/// A frozen `φ` with parametric weights, evaluated by one linear pass per
/// valuation.
#[derive(Debug, Clone)]
pub struct SolutionFunction {
    /// Inner nodes in children-first order as `(coin, low, high)`, where
    /// indices 0 and 1 are the false and true terminals and inner node `i`
    /// has index `i + 2`.
    nodes: Vec<(VarId, u32, u32)>,
    root: u32,
    weights: Vec<CoinWeight>,
    constraints: Vec<Constraint>,
    parameters: Vec<String>,
}

/// Work done by one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalStats {
    pub node_visits: usize,
    pub nodes: usize,
}

impl SolutionFunction {
    fn new(u: &Unrolled) -> SolutionFunction {
        let mgr = &u.manager;
        let mut index: HashMap<NodeId, u32> = HashMap::new();
        index.insert(DdManager::FALSE, 0);
        index.insert(DdManager::TRUE, 1);
        let mut nodes = Vec::new();
        for n in mgr.reachable(u.root) {
            if let NodeView::Inner { var, low, high } = mgr.view(n) {
                index.insert(n, nodes.len() as u32 + 2);
                nodes.push((var, index[&low], index[&high]));
            }
        }
        SolutionFunction {
            root: index[&u.root],
            nodes,
            weights: u.coins.iter().map(|c| c.weight.clone()).collect(),
            constraints: u.constraints.clone(),
            parameters: u.parameters.clone(),
        }
    }

    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len() + 2
    }

    pub fn check(&self, u: &Valuation) -> Result<(), WmcError> {
        for p in &self.parameters {
            if !u.contains_key(p) {
                return Err(WmcError::Num(NumError::UnboundParameter(p.clone())));
            }
        }
        self.constraints.iter().try_for_each(|c| c.check(u))
    }

    fn run<T: Field>(&self, weight: &mut dyn FnMut(VarId) -> Result<T, WmcError>) -> Result<(T, EvalStats), WmcError> {
        let mut values: Vec<T> = Vec::with_capacity(self.nodes.len() + 2);
        values.push(T::zero_value());
        values.push(T::one_value());
        let mut cache: HashMap<VarId, T> = HashMap::new();
        for &(var, lo, hi) in &self.nodes {
            let w = match cache.get(&var) {
                Some(w) => w.clone(),
                None => {
                    let w = weight(var)?;
                    cache.insert(var, w.clone());
                    w
                }
            };
            let v = T::mix(&w, &values[hi as usize], &values[lo as usize]);
            values.push(v);
        }
        let stats = EvalStats { node_visits: values.len(), nodes: self.num_nodes() };
        Ok((values.swap_remove(self.root as usize), stats))
    }

    pub fn evaluate(&self, u: &Valuation) -> Result<Rational, WmcError> {
        self.evaluate_with_stats(u).map(|(v, _)| v)
    }

    pub fn evaluate_with_stats(&self, u: &Valuation) -> Result<(Rational, EvalStats), WmcError> {
        self.check(u)?;
        self.run(&mut |v| Ok(self.weights[v as usize].eval(u)?))
    }

    /// Floating-point evaluation; well-definedness is still checked exactly.
    pub fn evaluate_f64(&self, u: &Valuation) -> Result<f64, WmcError> {
        self.check(u)?;
        let floats: HashMap<&str, f64> = u.iter().map(|(k, v)| (k.as_str(), to_f64(v))).collect();
        let lookup = |p: &str| floats.get(p).copied();
        self.run(&mut |v| Ok(self.weights[v as usize].eval_f64(&lookup)?)).map(|(v, _)| v)
    }

    /// Evaluates each valuation independently; failures stay per item.
    pub fn sample_many(&self, us: &[Valuation]) -> Vec<Result<Rational, WmcError>> {
        us.iter().map(|u| self.evaluate(u)).collect()
    }

    pub fn sample_many_f64(&self, us: &[Valuation]) -> Vec<Result<f64, WmcError>> {
        us.iter().map(|u| self.evaluate_f64(u)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{parse_valuation, rat};
    use proptest::prelude::*;

    fn c(r: Rational) -> Polynomial {
        Polynomial::constant(r)
    }

    #[test]
    fn coin_chains() {
        let w = coin_chain(&[c(rat(1, 3)), c(rat(1, 3)), c(rat(1, 3))]).unwrap();
        assert_eq!(w, vec![c(rat(1, 3)), c(rat(1, 2))]);
        let w = coin_chain(&[c(rat(1, 5)), c(rat(3, 10)), c(rat(1, 2))]).unwrap();
        assert_eq!(w, vec![c(rat(1, 5)), c(rat(3, 8))]);
        assert_eq!(rat(4, 5) * rat(3, 8), rat(3, 10));
        let p = Polynomial::var("p");
        assert_eq!(coin_chain(&[p.clone(), &Polynomial::one() - &p]).unwrap(), vec![p.clone()]);
        assert_eq!(coin_chain(&[c(rat(1, 1))]).unwrap(), vec![]);
    }

    #[test]
    fn parametric_residuals() {
        let p = Polynomial::var("p");
        let q = Polynomial::var("q");
        let one = Polynomial::one();
        // (p, p(1-p), (1-p)^2): residual 1-p divides p(1-p).
        let probs = [p.clone(), &p * &(&one - &p), (&one - &p).pow(2)];
        assert_eq!(coin_chain(&probs).unwrap(), vec![p.clone(), p.clone()]);
        let probs = [p.clone(), q.clone(), &(&one - &p) - &q];
        assert!(matches!(coin_chain(&probs), Err(WmcError::NonConstantResidual { .. })));
        let w = coin_chain_weights(&probs).unwrap();
        let u = parse_valuation("p=1/4,q=1/2").unwrap();
        assert_eq!(w[1].eval(&u).unwrap(), rat(2, 3));
    }

    #[test]
    fn trivial_counts() {
        let mgr = DdManager::new();
        assert_eq!(wmc(&mgr, DdManager::TRUE, &|_| None).unwrap(), rat(1, 1));
        assert_eq!(wmc(&mgr, DdManager::FALSE, &|_| None).unwrap(), rat(0, 1));
        let mc = bdd_as_mc(&mgr, DdManager::TRUE, &|_| unreachable!()).unwrap();
        assert_eq!(mc.num_states(), 1);
        assert!(mc.is_target(0));
    }

    #[test]
    fn missing_weight() {
        let mut mgr = DdManager::new();
        let x = mgr.new_var("x");
        let f = mgr.var(x).unwrap();
        assert_eq!(wmc(&mgr, f, &|_| None), Err(WmcError::MissingWeight("x".into())));
    }

    fn random_function(mgr: &mut DdManager, vars: &[VarId], table: &[bool]) -> NodeId {
        let mut f = DdManager::FALSE;
        for (row, &on) in table.iter().enumerate() {
            if !on {
                continue;
            }
            let mut cube = DdManager::TRUE;
            for (i, &v) in vars.iter().enumerate() {
                let lit = if row >> i & 1 == 1 { mgr.var(v).unwrap() } else { mgr.nvar(v).unwrap() };
                cube = mgr.and(cube, lit).unwrap();
            }
            f = mgr.or(f, cube).unwrap();
        }
        f
    }

    proptest! {
        #[test]
        fn wmc_matches_enumeration(table in proptest::collection::vec(any::<bool>(), 256),
                                   ws in proptest::collection::vec(0i64..=10, 8)) {
            let mut mgr = DdManager::new();
            let vars: Vec<VarId> = (0..8).map(|i| mgr.new_var(format!("x{i}"))).collect();
            let f = random_function(&mut mgr, &vars, &table);
            let weight = |v: VarId| Some(rat(ws[v as usize], 10));
            let mut expected = Rational::zero();
            for (row, &on) in table.iter().enumerate() {
                if on {
                    let mut w = Rational::one();
                    for i in 0..8 {
                        let wi = rat(ws[i], 10);
                        w *= if row >> i & 1 == 1 { wi } else { Rational::one() - wi };
                    }
                    expected += w;
                }
            }
            prop_assert_eq!(wmc(&mgr, f, &weight).unwrap(), expected.clone());
            let mc = bdd_as_mc(&mgr, f, &|v| Ok(weight(v).unwrap())).unwrap();
            prop_assert_eq!(crate::explicit::unbounded_reach(&mc, 10_000).unwrap()[mc.initial()].clone(), expected);
        }
    }
}
