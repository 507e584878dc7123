//! ADD engine: transition matrix and probability vector as algebraic decision
//! diagrams, iterated by symbolic matrix-vector products.
//!
//! Row bits `x_i` and column bits `x_i'` are interleaved in the variable order
//! (`x_0, x_0', x_1, x_1', …`), most significant bit first.

use std::collections::HashMap;
use std::fmt::Write;

use crate::chain::{make_absorbing, MarkovChain, StateId, Weight};
use crate::dd::{DdError, DdManager, NodeId, Terminal, VarId};
use crate::num::{Polynomial, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AddError {
    #[error("encoding has {bits} bits, too few for state code {code}")]
    EncodingTooSmall { bits: usize, code: u64 },
    #[error("encoding maps two states to code {0}")]
    NotInjective(u64),
    #[error("encoding covers {codes} states but the chain has {states}")]
    WrongLength { codes: usize, states: usize },
    #[error(transparent)]
    Dd(#[from] DdError),
}

/// Injective map from states to bit vectors of a fixed width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateEncoding {
    bits: usize,
    codes: Vec<u64>,
}

impl StateEncoding {
    /// State `s` encoded as the binary number `s` on `⌈log2 n⌉` bits (at least one).
    pub fn binary(num_states: usize) -> Self {
        let bits = (usize::BITS - num_states.saturating_sub(1).leading_zeros()).max(1) as usize;
        StateEncoding { bits, codes: (0..num_states as u64).collect() }
    }

    pub fn with_codes(bits: usize, codes: Vec<u64>) -> Result<Self, AddError> {
        let mut seen = std::collections::HashSet::new();
        for &c in &codes {
            if bits < 64 && c >> bits != 0 {
                return Err(AddError::EncodingTooSmall { bits, code: c });
            }
            if !seen.insert(c) {
                return Err(AddError::NotInjective(c));
            }
        }
        Ok(StateEncoding { bits, codes })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn code(&self, s: StateId) -> u64 {
        self.codes[s]
    }

    /// Value of bit `i` (0 = most significant) of `code`.
    pub fn bit(&self, code: u64, i: usize) -> bool {
        code >> (self.bits - 1 - i) & 1 == 1
    }
}

/// A manager with the interleaved row/column variables of an encoding.
#[derive(Debug, Clone)]
pub struct AddModel {
    pub manager: DdManager,
    pub encoding: StateEncoding,
    pub row_vars: Vec<VarId>,
    pub col_vars: Vec<VarId>,
}

impl AddModel {
    pub fn new(encoding: StateEncoding) -> Self {
        let mut manager = DdManager::new();
        let mut row_vars = Vec::new();
        let mut col_vars = Vec::new();
        for i in 0..encoding.bits() {
            row_vars.push(manager.new_var(format!("x{i}")));
            col_vars.push(manager.new_var(format!("x{i}'")));
        }
        AddModel { manager, encoding, row_vars, col_vars }
    }

    fn level_var(&self, level: usize) -> VarId {
        if level.is_multiple_of(2) {
            self.row_vars[level / 2]
        } else {
            self.col_vars[level / 2]
        }
    }

    /// ADD over row and column bits with value `P(s, s')` at `(row(s), col(s'))`.
    pub fn transition_add<P: Weight>(&mut self, mc: &MarkovChain<P>) -> Result<NodeId, AddError> {
        self.check_fits(mc.num_states())?;
        let mut entries: Vec<(u64, u64, Polynomial)> = Vec::with_capacity(mc.num_transitions());
        for s in 0..mc.num_states() {
            for (t, p) in mc.distribution(s).support() {
                entries.push((self.encoding.code(s), self.encoding.code(*t), p.to_polynomial()));
            }
        }
        let zero = self.manager.constant(Polynomial::zero());
        self.build_matrix(&mut entries, 0, zero)
    }

    fn check_fits(&self, states: usize) -> Result<(), AddError> {
        if self.encoding.codes.len() != states {
            return Err(AddError::WrongLength { codes: self.encoding.codes.len(), states });
        }
        Ok(())
    }

    fn build_matrix(
        &mut self,
        entries: &mut [(u64, u64, Polynomial)],
        level: usize,
        zero: NodeId,
    ) -> Result<NodeId, AddError> {
        if entries.is_empty() {
            return Ok(zero);
        }
        if level == 2 * self.encoding.bits() {
            debug_assert_eq!(entries.len(), 1);
            return Ok(self.manager.constant(entries[0].2.clone()));
        }
        let bit = level / 2;
        let enc = self.encoding.clone();
        let is_high = |e: &(u64, u64, Polynomial)| enc.bit(if level.is_multiple_of(2) { e.0 } else { e.1 }, bit);
        entries.sort_by_key(|e| is_high(e));
        let split = entries.iter().position(is_high).unwrap_or(entries.len());
        let (lo, hi) = entries.split_at_mut(split);
        let low = self.build_matrix(lo, level + 1, zero)?;
        let high = self.build_matrix(hi, level + 1, zero)?;
        let var = self.level_var(level);
        Ok(self.manager.node(var, low, high)?)
    }

    /// ADD over column bits with value `values[s]` at `col(s)`, zero elsewhere.
    pub fn column_vector(&mut self, values: &[(StateId, Polynomial)]) -> Result<NodeId, AddError> {
        let mut entries: Vec<(u64, Polynomial)> =
            values.iter().map(|(s, v)| (self.encoding.code(*s), v.clone())).collect();
        let zero = self.manager.constant(Polynomial::zero());
        self.build_vector(&mut entries, 0, zero)
    }

    fn build_vector(&mut self, entries: &mut [(u64, Polynomial)], bit: usize, zero: NodeId) -> Result<NodeId, AddError> {
        if entries.is_empty() {
            return Ok(zero);
        }
        if bit == self.encoding.bits() {
            return Ok(self.manager.constant(entries[0].1.clone()));
        }
        let enc = self.encoding.clone();
        entries.sort_by_key(|e| enc.bit(e.0, bit));
        let split = entries.iter().position(|e| enc.bit(e.0, bit)).unwrap_or(entries.len());
        let (lo, hi) = entries.split_at_mut(split);
        let low = self.build_vector(lo, bit + 1, zero)?;
        let high = self.build_vector(hi, bit + 1, zero)?;
        Ok(self.manager.node(self.col_vars[bit], low, high)?)
    }

    /// `Σ_{x'} A(x, x') · v(x')`, an ADD over row bits.
    pub fn matvec(&mut self, a: NodeId, v: NodeId) -> Result<NodeId, AddError> {
        let support = self.manager.support(v);
        if let Some(&clash) = support.iter().find(|x| !self.col_vars.contains(x)) {
            return Err(DdError::VariableClash(format!(
                "vector depends on non-column variable {}",
                self.manager.var_name(clash)
            ))
            .into());
        }
        let prod = self.manager.times(a, v)?;
        let cols = self.col_vars.clone();
        Ok(self.manager.sum_vars(prod, &cols)?)
    }

    /// Renames row bits to column bits.
    pub fn rows_to_cols(&mut self, v: NodeId) -> Result<NodeId, AddError> {
        let map: HashMap<VarId, VarId> = self.row_vars.iter().copied().zip(self.col_vars.iter().copied()).collect();
        Ok(self.manager.rename(v, &map)?)
    }

    /// Renames column bits to row bits.
    pub fn cols_to_rows(&mut self, v: NodeId) -> Result<NodeId, AddError> {
        let map: HashMap<VarId, VarId> = self.col_vars.iter().copied().zip(self.row_vars.iter().copied()).collect();
        Ok(self.manager.rename(v, &map)?)
    }

    /// Value of a row-bit vector at state `s`.
    pub fn row_value(&self, v: NodeId, s: StateId) -> Polynomial {
        self.value_at(v, s, &self.row_vars)
    }

    /// Value of a column-bit vector at state `s`.
    pub fn col_value(&self, v: NodeId, s: StateId) -> Polynomial {
        self.value_at(v, s, &self.col_vars)
    }

    fn value_at(&self, v: NodeId, s: StateId, vars: &[VarId]) -> Polynomial {
        let code = self.encoding.code(s);
        let lookup: HashMap<VarId, bool> =
            vars.iter().enumerate().map(|(i, &x)| (x, self.encoding.bit(code, i))).collect();
        match self.manager.eval(v, &|x| lookup.get(&x).copied().unwrap_or(false)) {
            Terminal::Value(p) => p.clone(),
            Terminal::Bool(_) => unreachable!("vectors are ADDs"),
        }
    }

    /// Value of a matrix ADD at `(row(s), col(t))`.
    pub fn matrix_value(&self, a: NodeId, s: StateId, t: StateId) -> Polynomial {
        let (rs, ct) = (self.encoding.code(s), self.encoding.code(t));
        let mut lookup: HashMap<VarId, bool> = HashMap::new();
        for i in 0..self.encoding.bits() {
            lookup.insert(self.row_vars[i], self.encoding.bit(rs, i));
            lookup.insert(self.col_vars[i], self.encoding.bit(ct, i));
        }
        match self.manager.eval(a, &|x| lookup[&x]) {
            Terminal::Value(p) => p.clone(),
            Terminal::Bool(_) => unreachable!("matrices are ADDs"),
        }
    }
}

/// Diagram sizes after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AddStats {
    pub h: usize,
    pub matrix_nodes: usize,
    pub matrix_leaves: usize,
    pub vector_nodes: usize,
    pub vector_leaves: usize,
}

#[derive(Debug, Clone)]
pub struct AddReach {
    pub model: AddModel,
    pub matrix: NodeId,
    /// `Pr(· ⊨ ◊≤h T)` over row bits.
    pub vector: NodeId,
    pub initial: StateId,
    /// One entry per iterate `0..=h`.
    pub stats: Vec<AddStats>,
}

impl AddReach {
    pub fn value(&self, s: StateId) -> Polynomial {
        self.model.row_value(self.vector, s)
    }

    pub fn value_at_initial(&self) -> Polynomial {
        self.value(self.initial)
    }

    /// Value at the initial state of a constant chain.
    pub fn rational_at_initial(&self) -> Rational {
        self.value_at_initial().as_constant().expect("constant chain")
    }
}

/// Bounded reachability by `h` symbolic products with the absorbing matrix.
pub fn bounded_reach_add<P: Weight>(mc: &MarkovChain<P>, h: usize) -> Result<AddReach, AddError> {
    bounded_reach_add_with(mc, h, StateEncoding::binary(mc.num_states()))
}

pub fn bounded_reach_add_with<P: Weight>(
    mc: &MarkovChain<P>,
    h: usize,
    encoding: StateEncoding,
) -> Result<AddReach, AddError> {
    let mut model = AddModel::new(encoding);
    let a = model.transition_add(&make_absorbing(mc))?;
    let targets: Vec<(StateId, Polynomial)> = mc.targets().iter().map(|&t| (t, Polynomial::one())).collect();
    let x0 = model.column_vector(&targets)?;
    let mut vector = model.cols_to_rows(x0)?;
    let matrix_nodes = model.manager.node_count(a);
    let matrix_leaves = model.manager.terminal_set(a).len();
    let record = |model: &AddModel, h: usize, v: NodeId| AddStats {
        h,
        matrix_nodes,
        matrix_leaves,
        vector_nodes: model.manager.node_count(v),
        vector_leaves: model.manager.terminal_set(v).len(),
    };
    let mut stats = vec![record(&model, 0, vector)];
    for i in 1..=h {
        let col = model.rows_to_cols(vector)?;
        vector = model.matvec(a, col)?;
        stats.push(record(&model, i, vector));
    }
    Ok(AddReach { model, matrix: a, vector, initial: mc.initial(), stats })
}

/// CSV with header `model,h,add-nodes,add-leaves,vector-nodes,vector-leaves`.
pub fn stats_csv(model_name: &str, stats: &[AddStats]) -> String {
    let mut out = String::from("model,h,add-nodes,add-leaves,vector-nodes,vector-leaves\n");
    for s in stats {
        let _ = writeln!(
            out,
            "{model_name},{},{},{},{},{}",
            s.h, s.matrix_nodes, s.matrix_leaves, s.vector_nodes, s.vector_leaves
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::chain::random::{random_chain, RandomChainConfig};
    use crate::chain::{toy_chain, toy_pmc, Distribution, Mc};
    use crate::explicit::bounded_reach_explicit;
    use crate::num::{int, rat};

    fn values(rs: &[Rational]) -> BTreeSet<Terminal> {
        rs.iter().map(|r| Terminal::Value(Polynomial::constant(r.clone()))).collect()
    }

    #[test]
    fn toy_matrix_terminals_and_entries() {
        let mc = toy_chain();
        let mut m = AddModel::new(StateEncoding::binary(4));
        let a = m.transition_add(&mc).unwrap();
        assert_eq!(
            m.manager.terminal_set(a),
            values(&[int(0), rat(2, 5), rat(1, 2), rat(3, 5)])
        );
        assert_eq!(m.matrix_value(a, 0, 0), Polynomial::constant(rat(3, 5)));
        assert_eq!(m.matrix_value(a, 1, 2), Polynomial::constant(rat(1, 2)));
        assert_eq!(m.matrix_value(a, 0, 3), Polynomial::zero());
        assert!(m.manager.check_invariants(a).is_ok());
    }

    #[test]
    fn one_product_gives_first_column() {
        let mc = toy_chain();
        let mut m = AddModel::new(StateEncoding::binary(4));
        let a = m.transition_add(&make_absorbing(&mc)).unwrap();
        let x = m.column_vector(&[(2, Polynomial::one())]).unwrap();
        let y = m.matvec(a, x).unwrap();
        let got: Vec<_> = (0..4).map(|s| m.row_value(y, s)).collect();
        let expect: Vec<_> = [int(0), rat(1, 2), int(1), rat(1, 2)].into_iter().map(Polynomial::constant).collect();
        assert_eq!(got, expect);
        let zero = m.column_vector(&[]).unwrap();
        let z = m.matvec(a, zero).unwrap();
        assert_eq!(m.manager.terminal_set(z), values(&[int(0)]));
    }

    #[test]
    fn toy_reach() {
        let r = bounded_reach_add(&toy_chain(), 3).unwrap();
        assert_eq!(r.rational_at_initial(), rat(21, 50));
        let r2 = bounded_reach_add(&toy_chain(), 2).unwrap();
        assert_eq!(r2.model.manager.terminal_set(r2.vector), values(&[int(1), rat(1, 5), rat(3, 4)]));
        let r0 = bounded_reach_add(&toy_chain(), 0).unwrap();
        assert_eq!(r0.model.manager.terminal_set(r0.vector), values(&[int(0), int(1)]));
        assert_eq!(r.stats.len(), 4);
    }

    #[test]
    fn identity_matrix() {
        let n = 5;
        let mc = Mc::new(0, (0..n).map(Distribution::dirac).collect(), [1]).unwrap();
        let mut m = AddModel::new(StateEncoding::binary(n));
        let a = m.transition_add(&mc).unwrap();
        assert_eq!(m.manager.terminal_set(a), values(&[int(0), int(1)]));
        let v = m
            .column_vector(&(0..n).map(|s| (s, Polynomial::constant(rat(s as i64, 7)))).collect::<Vec<_>>())
            .unwrap();
        let w = m.matvec(a, v).unwrap();
        assert_eq!(m.rows_to_cols(w).unwrap(), v);
    }

    #[test]
    fn matvec_rejects_row_vectors() {
        let mut m = AddModel::new(StateEncoding::binary(4));
        let a = m.transition_add(&toy_chain()).unwrap();
        let x = m.column_vector(&[(1, Polynomial::one())]).unwrap();
        let row = m.cols_to_rows(x).unwrap();
        assert!(matches!(m.matvec(a, row), Err(AddError::Dd(DdError::VariableClash(_)))));
    }

    #[test]
    fn agrees_with_explicit_on_seeded_chains() {
        for seed in 0..30 {
            let mc = random_chain(seed, RandomChainConfig::default());
            let r = bounded_reach_add(&mc, 6).unwrap();
            let x = bounded_reach_explicit(&mc, 6);
            for s in 0..mc.num_states() {
                assert_eq!(r.value(s), Polynomial::constant(x[s].clone()), "seed {seed} state {s}");
            }
        }
    }

    #[test]
    fn leaf_count_is_number_of_distinct_probabilities() {
        for seed in 0..20 {
            let mc = random_chain(seed, RandomChainConfig::default());
            let mut m = AddModel::new(StateEncoding::binary(mc.num_states()));
            let a = m.transition_add(&mc).unwrap();
            let mut distinct: BTreeSet<Rational> =
                mc.transitions().iter().flat_map(|d| d.support().iter().map(|(_, p)| p.clone())).collect();
            let full = mc.num_transitions() == 1 << (2 * m.encoding.bits());
            if !full {
                distinct.insert(int(0));
            }
            assert_eq!(m.manager.terminal_set(a).len(), distinct.len());
        }
    }

    #[test]
    fn parametric_matrix_commutes_with_instantiation() {
        let pmc = toy_pmc();
        let u = crate::num::parse_valuation("p=2/5,q=1/2").unwrap();
        let r = bounded_reach_add(&pmc, 3).unwrap();
        assert_eq!(r.value_at_initial().eval(&u).unwrap(), rat(21, 50));
        let mut m = AddModel::new(StateEncoding::binary(4));
        let a = m.transition_add(&pmc).unwrap();
        let mc = crate::chain::instantiate(&pmc, &u).unwrap();
        for s in 0..4 {
            for t in 0..4 {
                assert_eq!(m.matrix_value(a, s, t).eval(&u).unwrap(), mc.probability(s, t));
            }
        }
    }

    #[test]
    fn encodings_are_checked() {
        assert!(matches!(StateEncoding::with_codes(1, vec![0, 2]), Err(AddError::EncodingTooSmall { .. })));
        assert_eq!(StateEncoding::with_codes(2, vec![1, 1]), Err(AddError::NotInjective(1)));
        let csv = stats_csv("toy", &bounded_reach_add(&toy_chain(), 1).unwrap().stats);
        assert!(csv.starts_with("model,h,add-nodes,add-leaves,vector-nodes,vector-leaves\ntoy,0,"));
    }
}
