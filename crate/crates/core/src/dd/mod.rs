//! Hash-consed reduced ordered decision diagrams.
//!
//! One [`DdManager`] holds BDDs (boolean terminals) and ADDs (polynomial
//! terminals, rationals being constant polynomials) over a fixed variable
//! order: variables are ordered by creation, so a [`VarId`] is also its level.
//! There are no complement edges, no reordering and no garbage collection.

mod dot;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rustc_hash::FxHashMap;

use crate::num::{Polynomial, Rational};

pub type VarId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terminal {
    Bool(bool),
    Value(Polynomial),
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Bool(b) => write!(f, "{}", if *b { "T" } else { "F" }),
            Terminal::Value(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Bool,
    Value,
}

#[derive(Debug, Clone, Copy)]
pub enum NodeView<'a> {
    Terminal(&'a Terminal),
    Inner { var: VarId, low: NodeId, high: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DdError {
    #[error("unknown variable {0}")]
    UnknownVariable(VarId),
    #[error("boolean and numeric diagrams mixed in one operation")]
    MixedTerminalKinds,
    #[error("variable clash: {0}")]
    VariableClash(String),
    #[error("children of a node must lie below its variable")]
    OrderViolation,
    #[error("node limit of {0} exceeded")]
    NodeCapExceeded(usize),
}

const TERMINAL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    var: u32,
    low: NodeId,
    high: NodeId,
    kind: Kind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Ite,
    Plus,
    Times,
    AddIte,
    Restrict,
}

#[derive(Debug, Clone)]
pub struct DdManager {
    nodes: Vec<Node>,
    payloads: Vec<Terminal>,
    unique: FxHashMap<(u32, NodeId, NodeId), NodeId>,
    terminals: FxHashMap<Terminal, NodeId>,
    var_names: Vec<String>,
    cache: FxHashMap<(Op, NodeId, NodeId, NodeId), NodeId>,
    node_cap: Option<usize>,
}

impl Default for DdManager {
    fn default() -> Self {
        Self::new()
    }
}

impl DdManager {
    pub const FALSE: NodeId = NodeId(0);
    pub const TRUE: NodeId = NodeId(1);

    pub fn new() -> Self {
        let mut m = DdManager {
            nodes: Vec::new(),
            payloads: Vec::new(),
            unique: FxHashMap::default(),
            terminals: FxHashMap::default(),
            var_names: Vec::new(),
            cache: FxHashMap::default(),
            node_cap: None,
        };
        m.terminal(Terminal::Bool(false));
        m.terminal(Terminal::Bool(true));
        m
    }

    /// Limits the total number of nodes; operations that would exceed it fail.
    pub fn set_node_cap(&mut self, cap: Option<usize>) {
        self.node_cap = cap;
    }

    /// Appends a variable at the bottom of the order.
    pub fn new_var(&mut self, name: impl Into<String>) -> VarId {
        self.var_names.push(name.into());
        (self.var_names.len() - 1) as VarId
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.var_names[v as usize]
    }

    /// Total number of nodes ever created.
    pub fn total_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }

    fn terminal(&mut self, t: Terminal) -> NodeId {
        if let Some(&id) = self.terminals.get(&t) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        let kind = match t {
            Terminal::Bool(_) => Kind::Bool,
            Terminal::Value(_) => Kind::Value,
        };
        self.nodes.push(Node { var: TERMINAL, low: NodeId(self.payloads.len() as u32), high: NodeId(0), kind });
        self.payloads.push(t.clone());
        self.terminals.insert(t, id);
        id
    }

    /// ADD terminal carrying `p`.
    pub fn constant(&mut self, p: Polynomial) -> NodeId {
        self.terminal(Terminal::Value(p))
    }

    pub fn constant_rational(&mut self, r: Rational) -> NodeId {
        self.constant(Polynomial::constant(r))
    }

    /// The BDD `x`.
    pub fn var(&mut self, x: VarId) -> Result<NodeId, DdError> {
        self.check_var(x)?;
        self.mk(x, Self::FALSE, Self::TRUE)
    }

    /// The BDD `¬x`.
    pub fn nvar(&mut self, x: VarId) -> Result<NodeId, DdError> {
        self.check_var(x)?;
        self.mk(x, Self::TRUE, Self::FALSE)
    }

    fn check_var(&self, x: VarId) -> Result<(), DdError> {
        if (x as usize) < self.var_names.len() {
            Ok(())
        } else {
            Err(DdError::UnknownVariable(x))
        }
    }

    /// Canonical node `(var, low, high)`; returns `low` when both children agree.
    pub fn node(&mut self, var: VarId, low: NodeId, high: NodeId) -> Result<NodeId, DdError> {
        self.check_var(var)?;
        if self.level(low) <= var || self.level(high) <= var {
            return Err(DdError::OrderViolation);
        }
        if self.kind(low) != self.kind(high) {
            return Err(DdError::MixedTerminalKinds);
        }
        self.mk(var, low, high)
    }

    fn mk(&mut self, var: VarId, low: NodeId, high: NodeId) -> Result<NodeId, DdError> {
        if low == high {
            return Ok(low);
        }
        if let Some(&id) = self.unique.get(&(var, low, high)) {
            return Ok(id);
        }
        if let Some(cap) = self.node_cap {
            if self.nodes.len() >= cap {
                return Err(DdError::NodeCapExceeded(cap));
            }
        }
        let id = NodeId(self.nodes.len() as u32);
        let kind = self.nodes[low.index()].kind;
        self.nodes.push(Node { var, low, high, kind });
        self.unique.insert((var, low, high), id);
        Ok(id)
    }

    pub fn view(&self, n: NodeId) -> NodeView<'_> {
        let node = &self.nodes[n.index()];
        if node.var == TERMINAL {
            NodeView::Terminal(&self.payloads[node.low.index()])
        } else {
            NodeView::Inner { var: node.var, low: node.low, high: node.high }
        }
    }

    pub fn is_terminal(&self, n: NodeId) -> bool {
        self.nodes[n.index()].var == TERMINAL
    }

    pub fn kind(&self, n: NodeId) -> Kind {
        self.nodes[n.index()].kind
    }

    /// Top variable, or `u32::MAX` for terminals.
    pub fn level(&self, n: NodeId) -> u32 {
        self.nodes[n.index()].var
    }

    pub fn low(&self, n: NodeId) -> NodeId {
        debug_assert!(!self.is_terminal(n));
        self.nodes[n.index()].low
    }

    pub fn high(&self, n: NodeId) -> NodeId {
        debug_assert!(!self.is_terminal(n));
        self.nodes[n.index()].high
    }

    pub fn terminal_of(&self, n: NodeId) -> Option<&Terminal> {
        match self.view(n) {
            NodeView::Terminal(t) => Some(t),
            NodeView::Inner { .. } => None,
        }
    }

    fn cofactors(&self, n: NodeId, var: u32) -> (NodeId, NodeId) {
        let node = &self.nodes[n.index()];
        if node.var == var {
            (node.low, node.high)
        } else {
            (n, n)
        }
    }

    fn expect_kind(&self, kind: Kind, args: &[NodeId]) -> Result<(), DdError> {
        if args.iter().all(|&a| self.kind(a) == kind) {
            Ok(())
        } else {
            Err(DdError::MixedTerminalKinds)
        }
    }

    // ----- BDD operations -----

    pub fn ite(&mut self, f: NodeId, g: NodeId, h: NodeId) -> Result<NodeId, DdError> {
        self.expect_kind(Kind::Bool, &[f, g, h])?;
        self.ite_rec(f, g, h)
    }

    fn ite_rec(&mut self, f: NodeId, g: NodeId, h: NodeId) -> Result<NodeId, DdError> {
        if f == Self::TRUE || g == h {
            return Ok(g);
        }
        if f == Self::FALSE {
            return Ok(h);
        }
        if g == Self::TRUE && h == Self::FALSE {
            return Ok(f);
        }
        let key = (Op::Ite, f, g, h);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let top = self.level(f).min(self.level(g)).min(self.level(h));
        let (f0, f1) = self.cofactors(f, top);
        let (g0, g1) = self.cofactors(g, top);
        let (h0, h1) = self.cofactors(h, top);
        let low = self.ite_rec(f0, g0, h0)?;
        let high = self.ite_rec(f1, g1, h1)?;
        let r = self.mk(top, low, high)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    pub fn not(&mut self, f: NodeId) -> Result<NodeId, DdError> {
        self.ite(f, Self::FALSE, Self::TRUE)
    }

    pub fn and(&mut self, f: NodeId, g: NodeId) -> Result<NodeId, DdError> {
        self.ite(f, g, Self::FALSE)
    }

    pub fn or(&mut self, f: NodeId, g: NodeId) -> Result<NodeId, DdError> {
        self.ite(f, Self::TRUE, g)
    }

    pub fn xor(&mut self, f: NodeId, g: NodeId) -> Result<NodeId, DdError> {
        let ng = self.not(g)?;
        self.ite(f, ng, g)
    }

    pub fn and_all(&mut self, fs: impl IntoIterator<Item = NodeId>) -> Result<NodeId, DdError> {
        let mut acc = Self::TRUE;
        for f in fs {
            acc = self.and(acc, f)?;
        }
        Ok(acc)
    }

    pub fn or_all(&mut self, fs: impl IntoIterator<Item = NodeId>) -> Result<NodeId, DdError> {
        let mut acc = Self::FALSE;
        for f in fs {
            acc = self.or(acc, f)?;
        }
        Ok(acc)
    }

    // ----- ADD operations -----

    pub fn plus(&mut self, f: NodeId, g: NodeId) -> Result<NodeId, DdError> {
        self.expect_kind(Kind::Value, &[f, g])?;
        self.apply_rec(Op::Plus, f, g)
    }

    pub fn times(&mut self, f: NodeId, g: NodeId) -> Result<NodeId, DdError> {
        self.expect_kind(Kind::Value, &[f, g])?;
        self.apply_rec(Op::Times, f, g)
    }

    fn value(&self, n: NodeId) -> Option<&Polynomial> {
        match self.view(n) {
            NodeView::Terminal(Terminal::Value(p)) => Some(p),
            _ => None,
        }
    }

    fn apply_rec(&mut self, op: Op, f: NodeId, g: NodeId) -> Result<NodeId, DdError> {
        if let (Some(a), Some(b)) = (self.value(f), self.value(g)) {
            let r = match op {
                Op::Plus => a + b,
                Op::Times => a * b,
                _ => unreachable!(),
            };
            return Ok(self.constant(r));
        }
        match op {
            Op::Plus => {
                if self.value(f).is_some_and(Polynomial::is_zero) {
                    return Ok(g);
                }
                if self.value(g).is_some_and(Polynomial::is_zero) {
                    return Ok(f);
                }
            }
            Op::Times => {
                if self.value(f).is_some_and(Polynomial::is_zero) || self.value(g).is_some_and(Polynomial::is_one) {
                    return Ok(f);
                }
                if self.value(g).is_some_and(Polynomial::is_zero) || self.value(f).is_some_and(Polynomial::is_one) {
                    return Ok(g);
                }
            }
            _ => unreachable!(),
        }
        let (f, g) = if f <= g { (f, g) } else { (g, f) };
        let key = (op, f, g, NodeId(0));
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let top = self.level(f).min(self.level(g));
        let (f0, f1) = self.cofactors(f, top);
        let (g0, g1) = self.cofactors(g, top);
        let low = self.apply_rec(op, f0, g0)?;
        let high = self.apply_rec(op, f1, g1)?;
        let r = self.mk(top, low, high)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    /// `if c then f else g` with a BDD condition and ADD branches.
    pub fn add_ite(&mut self, c: NodeId, f: NodeId, g: NodeId) -> Result<NodeId, DdError> {
        self.expect_kind(Kind::Bool, &[c])?;
        self.expect_kind(Kind::Value, &[f, g])?;
        self.add_ite_rec(c, f, g)
    }

    fn add_ite_rec(&mut self, c: NodeId, f: NodeId, g: NodeId) -> Result<NodeId, DdError> {
        if c == Self::TRUE || f == g {
            return Ok(f);
        }
        if c == Self::FALSE {
            return Ok(g);
        }
        let key = (Op::AddIte, c, f, g);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let top = self.level(c).min(self.level(f)).min(self.level(g));
        let (c0, c1) = self.cofactors(c, top);
        let (f0, f1) = self.cofactors(f, top);
        let (g0, g1) = self.cofactors(g, top);
        let low = self.add_ite_rec(c0, f0, g0)?;
        let high = self.add_ite_rec(c1, f1, g1)?;
        let r = self.mk(top, low, high)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    /// 0/1-valued ADD of a BDD.
    pub fn bdd_to_add(&mut self, f: NodeId) -> Result<NodeId, DdError> {
        let one = self.constant(Polynomial::one());
        let zero = self.constant(Polynomial::zero());
        self.add_ite(f, one, zero)
    }

    /// Cofactor `f[var := value]`; works on both kinds.
    pub fn restrict(&mut self, f: NodeId, var: VarId, value: bool) -> Result<NodeId, DdError> {
        self.check_var(var)?;
        self.restrict_rec(f, var, value)
    }

    fn restrict_rec(&mut self, f: NodeId, var: VarId, value: bool) -> Result<NodeId, DdError> {
        let level = self.level(f);
        if level > var {
            return Ok(f);
        }
        if level == var {
            return Ok(if value { self.high(f) } else { self.low(f) });
        }
        let key = (Op::Restrict, f, NodeId(var), NodeId(value as u32));
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let (lo, hi) = (self.low(f), self.high(f));
        let low = self.restrict_rec(lo, var, value)?;
        let high = self.restrict_rec(hi, var, value)?;
        let r = self.mk(level, low, high)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    /// `f[var := 0] + f[var := 1]`.
    pub fn sum_var(&mut self, f: NodeId, var: VarId) -> Result<NodeId, DdError> {
        self.expect_kind(Kind::Value, &[f])?;
        let f0 = self.restrict(f, var, false)?;
        let f1 = self.restrict(f, var, true)?;
        self.plus(f0, f1)
    }

    pub fn sum_vars(&mut self, f: NodeId, vars: &[VarId]) -> Result<NodeId, DdError> {
        let mut acc = f;
        for &v in vars {
            acc = self.sum_var(acc, v)?;
        }
        Ok(acc)
    }

    /// Variables tested anywhere in `f`, sorted.
    pub fn support(&self, f: NodeId) -> BTreeSet<VarId> {
        self.reachable(f)
            .into_iter()
            .filter(|&n| !self.is_terminal(n))
            .map(|n| self.level(n))
            .collect()
    }

    /// Renames variables of `f` through `map`; the map must preserve the
    /// relative order of the variables in the support of `f`.
    pub fn rename(&mut self, f: NodeId, map: &HashMap<VarId, VarId>) -> Result<NodeId, DdError> {
        let support: Vec<VarId> = self.support(f).into_iter().collect();
        let image: Vec<VarId> = support.iter().map(|v| *map.get(v).unwrap_or(v)).collect();
        for &v in &image {
            self.check_var(v)?;
        }
        if image.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DdError::VariableClash("renaming does not preserve the variable order".into()));
        }
        let mut memo = FxHashMap::default();
        self.rename_rec(f, map, &mut memo)
    }

    fn rename_rec(
        &mut self,
        f: NodeId,
        map: &HashMap<VarId, VarId>,
        memo: &mut FxHashMap<NodeId, NodeId>,
    ) -> Result<NodeId, DdError> {
        if self.is_terminal(f) {
            return Ok(f);
        }
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let var = self.level(f);
        let (lo, hi) = (self.low(f), self.high(f));
        let low = self.rename_rec(lo, map, memo)?;
        let high = self.rename_rec(hi, map, memo)?;
        let r = self.mk(*map.get(&var).unwrap_or(&var), low, high)?;
        memo.insert(f, r);
        Ok(r)
    }

    /// Simultaneous substitution of BDDs for variables (`f[x := g_x]`).
    /// Unmapped variables stay as they are. `f` may be a BDD or an ADD.
    pub fn substitute(&mut self, f: NodeId, map: &HashMap<VarId, NodeId>) -> Result<NodeId, DdError> {
        for &g in map.values() {
            self.expect_kind(Kind::Bool, &[g])?;
        }
        let mut memo = FxHashMap::default();
        self.substitute_rec(f, map, &mut memo)
    }

    fn substitute_rec(
        &mut self,
        f: NodeId,
        map: &HashMap<VarId, NodeId>,
        memo: &mut FxHashMap<NodeId, NodeId>,
    ) -> Result<NodeId, DdError> {
        if self.is_terminal(f) {
            return Ok(f);
        }
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let var = self.level(f);
        let (lo, hi) = (self.low(f), self.high(f));
        let low = self.substitute_rec(lo, map, memo)?;
        let high = self.substitute_rec(hi, map, memo)?;
        let cond = match map.get(&var) {
            Some(&g) => g,
            None => self.var(var)?,
        };
        let r = match self.kind(f) {
            Kind::Bool => self.ite_rec(cond, high, low)?,
            Kind::Value => self.add_ite_rec(cond, high, low)?,
        };
        memo.insert(f, r);
        Ok(r)
    }

    // ----- evaluation and statistics -----

    /// Follows the path selected by `assignment` to its terminal.
    pub fn eval(&self, mut n: NodeId, assignment: &dyn Fn(VarId) -> bool) -> &Terminal {
        loop {
            match self.view(n) {
                NodeView::Terminal(t) => return t,
                NodeView::Inner { var, low, high } => n = if assignment(var) { high } else { low },
            }
        }
    }

    /// Nodes reachable from `root`, children before parents.
    pub fn reachable(&self, root: NodeId) -> Vec<NodeId> {
        self.reachable_many(&[root])
    }

    pub fn reachable_many(&self, roots: &[NodeId]) -> Vec<NodeId> {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut order = Vec::new();
        let mut stack: Vec<(NodeId, bool)> = roots.iter().rev().map(|&r| (r, false)).collect();
        while let Some((n, expanded)) = stack.pop() {
            if expanded {
                order.push(n);
                continue;
            }
            if !seen.insert(n) {
                continue;
            }
            stack.push((n, true));
            if !self.is_terminal(n) {
                stack.push((self.high(n), false));
                stack.push((self.low(n), false));
            }
        }
        order
    }

    /// Number of distinct nodes reachable from `root`, terminals included.
    pub fn node_count(&self, root: NodeId) -> usize {
        self.reachable(root).len()
    }

    pub fn node_count_many(&self, roots: &[NodeId]) -> usize {
        self.reachable_many(roots).len()
    }

    /// Distinct terminal payloads reachable from `root`.
    pub fn terminal_set(&self, root: NodeId) -> BTreeSet<Terminal> {
        self.reachable(root)
            .into_iter()
            .filter_map(|n| self.terminal_of(n).cloned())
            .collect()
    }

    /// Satisfying assignments of a BDD over the first `num_vars` variables.
    pub fn model_count(&self, f: NodeId, num_vars: u32) -> Result<BigUint, DdError> {
        self.expect_kind(Kind::Bool, &[f])?;
        let mut counts: FxHashMap<NodeId, BigUint> = FxHashMap::default();
        let level = |n: NodeId| if self.is_terminal(n) { num_vars } else { self.level(n) };
        for n in self.reachable(f) {
            let c = match self.view(n) {
                NodeView::Terminal(t) => {
                    if *t == Terminal::Bool(true) {
                        BigUint::one()
                    } else {
                        BigUint::zero()
                    }
                }
                NodeView::Inner { var, low, high } => {
                    if var >= num_vars {
                        return Err(DdError::UnknownVariable(var));
                    }
                    let lo = &counts[&low] << (level(low) - var - 1);
                    let hi = &counts[&high] << (level(high) - var - 1);
                    lo + hi
                }
            };
            counts.insert(n, c);
        }
        Ok(&counts[&f] << level(f))
    }

    /// Checks reducedness, uniqueness and ordering of everything below `root`.
    pub fn check_invariants(&self, root: NodeId) -> Result<(), String> {
        let mut seen: FxHashMap<(u32, NodeId, NodeId), NodeId> = FxHashMap::default();
        let mut payloads: FxHashMap<&Terminal, NodeId> = FxHashMap::default();
        for n in self.reachable(root) {
            match self.view(n) {
                NodeView::Terminal(t) => {
                    if let Some(other) = payloads.insert(t, n) {
                        return Err(format!("terminal {t} stored twice ({other}, {n})"));
                    }
                }
                NodeView::Inner { var, low, high } => {
                    if low == high {
                        return Err(format!("{n} is redundant"));
                    }
                    if self.level(low) <= var || self.level(high) <= var {
                        return Err(format!("{n} has a child above it in the order"));
                    }
                    if self.kind(low) != self.kind(high) {
                        return Err(format!("{n} mixes terminal kinds"));
                    }
                    if let Some(other) = seen.insert((var, low, high), n) {
                        return Err(format!("{n} duplicates {other}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Graphviz rendering of the diagram below `root`.
    pub fn to_dot(&self, root: NodeId) -> String {
        dot::render(self, root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use proptest::prelude::*;

    #[test]
    fn literals_and_reduction() {
        let mut m = DdManager::new();
        let x = m.new_var("x");
        let _y = m.new_var("y");
        let fx = m.var(x).unwrap();
        assert_eq!(m.view(fx).clone_inner(), Some((x, DdManager::FALSE, DdManager::TRUE)));
        let zero = m.constant_rational(rat(0, 1));
        assert_eq!(m.node(x, zero, zero).unwrap(), zero);
        assert_eq!(m.var(7), Err(DdError::UnknownVariable(7)));
        let p = Polynomial::var("p");
        let q = Polynomial::var("q");
        let c = m.constant(&(&p * &q) + &Polynomial::constant(rat(1, 2)));
        match m.view(c) {
            NodeView::Terminal(Terminal::Value(v)) => assert_eq!(v.num_terms(), 2),
            _ => panic!("expected a terminal"),
        }
        assert_eq!(m.node_count(DdManager::FALSE), 1);
    }

    impl NodeView<'_> {
        fn clone_inner(&self) -> Option<(VarId, NodeId, NodeId)> {
            match *self {
                NodeView::Inner { var, low, high } => Some((var, low, high)),
                NodeView::Terminal(_) => None,
            }
        }
    }

    #[test]
    fn boolean_identities() {
        let mut m = DdManager::new();
        let a = m.new_var("a");
        let b = m.new_var("b");
        let fa = m.var(a).unwrap();
        let fb = m.var(b).unwrap();
        let na = m.not(fa).unwrap();
        assert_eq!(m.and(fa, na).unwrap(), DdManager::FALSE);
        assert_eq!(m.or(fa, na).unwrap(), DdManager::TRUE);
        let o = m.or(fa, fb).unwrap();
        assert_eq!(m.model_count(o, 2).unwrap(), BigUint::from(3u32));
        assert_eq!(m.model_count(DdManager::TRUE, 3).unwrap(), BigUint::from(8u32));
        let x = m.xor(fa, fb).unwrap();
        assert_eq!(m.model_count(x, 2).unwrap(), BigUint::from(2u32));
    }

    #[test]
    fn kinds_do_not_mix() {
        let mut m = DdManager::new();
        let a = m.new_var("a");
        let fa = m.var(a).unwrap();
        let half = m.constant_rational(rat(1, 2));
        assert_eq!(m.and(fa, half), Err(DdError::MixedTerminalKinds));
        assert_eq!(m.plus(fa, half), Err(DdError::MixedTerminalKinds));
        assert_eq!(m.node(a, DdManager::FALSE, half), Err(DdError::MixedTerminalKinds));
    }

    #[test]
    fn add_sums_and_restrictions() {
        let mut m = DdManager::new();
        let x = m.new_var("x");
        let y = m.new_var("y");
        let fx = m.var(x).unwrap();
        let fy = m.var(y).unwrap();
        let one = m.constant_rational(rat(1, 1));
        let two = m.constant_rational(rat(2, 1));
        let three = m.constant_rational(rat(3, 1));
        let zero = m.constant_rational(rat(0, 1));
        // f(x, y) = 1 + 2x + 3y
        let ax = m.add_ite(fx, two, zero).unwrap();
        let ay = m.add_ite(fy, three, zero).unwrap();
        let s = m.plus(ax, ay).unwrap();
        let f = m.plus(s, one).unwrap();
        let total = m.sum_vars(f, &[x, y]).unwrap();
        assert_eq!(m.terminal_of(total), Some(&Terminal::Value(Polynomial::constant(rat(14, 1)))));
        let r = m.restrict(f, y, true).unwrap();
        assert_eq!(m.eval(r, &|_| true), &Terminal::Value(Polynomial::constant(rat(6, 1))));
        let sq = m.times(f, f).unwrap();
        assert_eq!(m.eval(sq, &|v| v == x), &Terminal::Value(Polynomial::constant(rat(9, 1))));
        assert!(m.check_invariants(sq).is_ok());
    }

    #[test]
    fn rename_must_keep_order() {
        let mut m = DdManager::new();
        let x = m.new_var("x");
        let xp = m.new_var("x'");
        let y = m.new_var("y");
        let yp = m.new_var("y'");
        let fxp = m.var(xp).unwrap();
        let fyp = m.var(yp).unwrap();
        let f = m.and(fxp, fyp).unwrap();
        let g = m.rename(f, &HashMap::from([(xp, x), (yp, y)])).unwrap();
        let fx = m.var(x).unwrap();
        let fy = m.var(y).unwrap();
        assert_eq!(g, m.and(fx, fy).unwrap());
        let swapped = m.rename(f, &HashMap::from([(xp, y), (yp, x)]));
        assert!(matches!(swapped, Err(DdError::VariableClash(_))));
    }

    #[test]
    fn substitution_composes() {
        let mut m = DdManager::new();
        let s = m.new_var("s");
        let a = m.new_var("a");
        let b = m.new_var("b");
        let fs = m.var(s).unwrap();
        let fa = m.var(a).unwrap();
        let fb = m.var(b).unwrap();
        let ns = m.not(fs).unwrap();
        let ab = m.and(fa, fb).unwrap();
        let g = m.substitute(ns, &HashMap::from([(s, ab)])).unwrap();
        assert_eq!(g, m.not(ab).unwrap());
    }

    /// Random formula over `n` variables as a postfix program.
    #[derive(Debug, Clone)]
    enum Formula {
        Var(u32),
        Not(Box<Formula>),
        And(Box<Formula>, Box<Formula>),
        Or(Box<Formula>, Box<Formula>),
        Xor(Box<Formula>, Box<Formula>),
    }

    impl Formula {
        fn eval(&self, bits: u32) -> bool {
            match self {
                Formula::Var(v) => bits >> v & 1 == 1,
                Formula::Not(f) => !f.eval(bits),
                Formula::And(a, b) => a.eval(bits) && b.eval(bits),
                Formula::Or(a, b) => a.eval(bits) || b.eval(bits),
                Formula::Xor(a, b) => a.eval(bits) != b.eval(bits),
            }
        }

        fn build(&self, m: &mut DdManager) -> NodeId {
            match self {
                Formula::Var(v) => m.var(*v).unwrap(),
                Formula::Not(f) => {
                    let f = f.build(m);
                    m.not(f).unwrap()
                }
                Formula::And(a, b) => {
                    let (a, b) = (a.build(m), b.build(m));
                    m.and(a, b).unwrap()
                }
                Formula::Or(a, b) => {
                    let (a, b) = (a.build(m), b.build(m));
                    m.or(a, b).unwrap()
                }
                Formula::Xor(a, b) => {
                    let (a, b) = (a.build(m), b.build(m));
                    m.xor(a, b).unwrap()
                }
            }
        }
    }

    fn formula(nvars: u32) -> impl Strategy<Value = Formula> {
        let leaf = (0..nvars).prop_map(Formula::Var);
        leaf.prop_recursive(6, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Or(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::Xor(Box::new(a), Box::new(b))),
            ]
        })
    }

    fn fresh(nvars: u32) -> DdManager {
        let mut m = DdManager::new();
        for i in 0..nvars {
            m.new_var(format!("v{i}"));
        }
        m
    }

    /// Builds the BDD of a truth table by Shannon expansion on the table itself.
    fn from_table(m: &mut DdManager, table: &[bool], var: u32, nvars: u32, offset: usize) -> NodeId {
        if var == nvars {
            return if table[offset] { DdManager::TRUE } else { DdManager::FALSE };
        }
        let low = from_table(m, table, var + 1, nvars, offset);
        let high = from_table(m, table, var + 1, nvars, offset | 1 << var);
        m.node(var, low, high).unwrap()
    }

    proptest! {
        #[test]
        fn eval_matches_truth_table(f in formula(10)) {
            let mut m = fresh(10);
            let root = f.build(&mut m);
            prop_assert!(m.check_invariants(root).is_ok());
            for bits in 0..1u32 << 10 {
                let got = m.eval(root, &|v| bits >> v & 1 == 1);
                prop_assert_eq!(got, &Terminal::Bool(f.eval(bits)));
            }
        }

        #[test]
        fn canonical_across_constructions(f in formula(8)) {
            let mut m = fresh(8);
            let table: Vec<bool> = (0..1u32 << 8).map(|b| f.eval(b)).collect();
            let from_formula = f.build(&mut m);
            m.clear_cache();
            let from_truth_table = from_table(&mut m, &table, 0, 8, 0);
            prop_assert_eq!(from_formula, from_truth_table);
            let count = table.iter().filter(|b| **b).count();
            prop_assert_eq!(m.model_count(from_formula, 8).unwrap(), BigUint::from(count));
        }
    }
}
