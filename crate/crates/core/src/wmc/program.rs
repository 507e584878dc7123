//! Causal encoding of a guarded-command model. The state at step `t` is a
//! vector of bit BDDs over the coins of steps `< t`; each step applies the
//! transition relation symbolically:
//!
//! 1. guards are evaluated to BDDs;
//! 2. one top-level alternative (an anonymous command or a named action) is
//!    chosen uniformly among the enabled combinations, by coins when more
//!    than one is enabled;
//! 3. inside a synchronized action, each module picks one of its enabled
//!    commands uniformly;
//! 4. each firing command picks an update by a coin chain over its update
//!    probabilities, with separate coins per distinct probability context;
//! 5. assignments produce the next bit BDDs.
//!
//! Everything is restricted to the live region (stop predicate not yet
//! reached), so stopped paths keep their state and the counted flag latches.

use std::collections::{BTreeMap, HashSet};

use num_traits::One;

use super::{chain_selectors, coin_chain_weights, Coin, CoinWeight, Constraint, Unrolled, WmcError};
use crate::dd::{DdManager, NodeId, VarId};
use crate::lang::{BinOp, EvalError, LangError, Model, RExpr, State, Value};
use crate::num::{rat, Polynomial};

/// A state predicate for targets and stop sets.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Expr(RExpr),
    /// Membership in an explicit set of states, tested one state at a time.
    States(Vec<State>),
    Or(Vec<Predicate>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramQuery {
    pub count: Predicate,
    /// Must include `count`.
    pub stop: Predicate,
}

impl ProgramQuery {
    pub fn reach(target: &RExpr) -> ProgramQuery {
        ProgramQuery { count: Predicate::Expr(target.clone()), stop: Predicate::Expr(target.clone()) }
    }
}

/// Unrolls `Pr(◊≤h target)` for a model.
pub fn unroll_program(model: &Model, target: &RExpr, h: usize) -> Result<Unrolled, WmcError> {
    unroll_program_with(model, &ProgramQuery::reach(target), h, None)
}

/// Unrolls a general query; `node_cap` bounds the manager size.
pub fn unroll_program_with(
    model: &Model,
    query: &ProgramQuery,
    h: usize,
    node_cap: Option<usize>,
) -> Result<Unrolled, WmcError> {
    let mut mgr = DdManager::new();
    mgr.set_node_cap(node_cap);
    let init = model.initial_state();
    let bits = model
        .vars
        .iter()
        .zip(&init)
        .map(|(v, &o)| (0..v.bits()).map(|k| if o >> k & 1 == 1 { DdManager::TRUE } else { DdManager::FALSE }).collect())
        .collect();
    let mut u = Unroller {
        model,
        mgr,
        bits,
        partitions: vec![None; model.vars.len()],
        coins: Vec::new(),
        constraints: Vec::new(),
        seen_constraints: HashSet::new(),
        step: 0,
    };
    let count = u.predicate(&query.count, DdManager::TRUE)?;
    let stop = u.predicate(&query.stop, DdManager::TRUE)?;
    let mut hit = count;
    let mut stopped = u.mgr.or(stop, count)?;
    for t in 0..h {
        u.step = t;
        let live = u.mgr.not(stopped)?;
        if live == DdManager::FALSE {
            break;
        }
        u.transition(live)?;
        let c = u.predicate(&query.count, live)?;
        let s = u.predicate(&query.stop, live)?;
        hit = u.mgr.or(hit, c)?;
        stopped = u.mgr.or_all([stopped, s, c])?;
    }
    Ok(Unrolled {
        manager: u.mgr,
        root: hit,
        coins: u.coins,
        constraints: u.constraints,
        horizon: h,
        parameters: model.parameters.clone(),
    })
}

/// A symbolic value: disjoint regions, each with the value taken there.
type Sym = Vec<(Value, NodeId)>;

struct Unroller<'a> {
    model: &'a Model,
    mgr: DdManager,
    /// Per variable, its offset bits (least significant first).
    bits: Vec<Vec<NodeId>>,
    /// Per variable, cached `(offset, region)` pairs for the current bits.
    partitions: Vec<Option<Vec<(u64, NodeId)>>>,
    coins: Vec<Coin>,
    constraints: Vec<Constraint>,
    seen_constraints: HashSet<Vec<Polynomial>>,
    step: usize,
}

fn lang(context: String, error: EvalError) -> WmcError {
    WmcError::Lang(LangError::Eval { context, error })
}

impl Unroller<'_> {
    fn partition(&mut self, var: usize) -> Result<Vec<(u64, NodeId)>, WmcError> {
        if let Some(p) = &self.partitions[var] {
            return Ok(p.clone());
        }
        let size = self.model.vars[var].size;
        let mut out = Vec::new();
        for o in 0..size {
            let mut cond = DdManager::TRUE;
            for (k, &b) in self.bits[var].clone().iter().enumerate() {
                let lit = if o >> k & 1 == 1 { b } else { self.mgr.not(b)? };
                cond = self.mgr.and(cond, lit)?;
                if cond == DdManager::FALSE {
                    break;
                }
            }
            if cond != DdManager::FALSE {
                out.push((o, cond));
            }
        }
        self.partitions[var] = Some(out.clone());
        Ok(out)
    }

    /// A concrete state reachable inside `region`, for error messages.
    fn witness(&self, region: NodeId) -> String {
        let mut assignment: BTreeMap<VarId, bool> = BTreeMap::new();
        let mut n = region;
        while !self.mgr.is_terminal(n) {
            let var = self.mgr.level(n);
            if self.mgr.high(n) != DdManager::FALSE {
                assignment.insert(var, true);
                n = self.mgr.high(n);
            } else {
                assignment.insert(var, false);
                n = self.mgr.low(n);
            }
        }
        let lookup = |v: VarId| assignment.get(&v).copied().unwrap_or(false);
        let state: Vec<u64> = self
            .bits
            .iter()
            .map(|bs| {
                bs.iter()
                    .enumerate()
                    .map(|(k, &b)| (*self.mgr.eval(b, &lookup) == crate::dd::Terminal::Bool(true)) as u64 * (1 << k))
                    .sum()
            })
            .collect();
        self.model.state_label(&state)
    }

    fn context(&self, region: NodeId, what: &str) -> String {
        format!("{what} at step {} in state ({})", self.step, self.witness(region))
    }

    fn merge(&mut self, parts: impl IntoIterator<Item = (Value, NodeId)>) -> Result<Sym, WmcError> {
        let mut by_value: BTreeMap<Value, NodeId> = BTreeMap::new();
        for (v, r) in parts {
            if r == DdManager::FALSE {
                continue;
            }
            let slot = by_value.entry(v).or_insert(DdManager::FALSE);
            *slot = self.mgr.or(*slot, r)?;
        }
        Ok(by_value.into_iter().collect())
    }

    /// Splits a boolean value into its true and false regions.
    fn bool_regions(&mut self, s: &Sym, what: &str) -> Result<(NodeId, NodeId), WmcError> {
        let (mut t, mut f) = (DdManager::FALSE, DdManager::FALSE);
        for (v, r) in s {
            match v.as_bool() {
                Ok(true) => t = self.mgr.or(t, *r)?,
                Ok(false) => f = self.mgr.or(f, *r)?,
                Err(e) => return Err(lang(self.context(*r, what), e)),
            }
        }
        Ok((t, f))
    }

    fn eval(&mut self, e: &RExpr, region: NodeId) -> Result<Sym, WmcError> {
        if region == DdManager::FALSE {
            return Ok(Vec::new());
        }
        Ok(match e {
            RExpr::Lit(v) => vec![(v.clone(), region)],
            RExpr::Param(p) => vec![(Value::Real(Polynomial::var(p)), region)],
            RExpr::Var(i) => {
                let info = &self.model.vars[*i];
                let mut out = Vec::new();
                for (o, r) in self.partition(*i)? {
                    let r = self.mgr.and(r, region)?;
                    if r != DdManager::FALSE {
                        out.push((info.value(o), r));
                    }
                }
                out
            }
            RExpr::Unary(op, a) => {
                let a = self.eval(a, region)?;
                let mut out = Vec::new();
                for (v, r) in a {
                    let x = crate::lang::value::unary(*op, v).map_err(|err| lang(self.context(r, "expression"), err))?;
                    out.push((x, r));
                }
                self.merge(out)?
            }
            RExpr::Binary(op @ (BinOp::And | BinOp::Or | BinOp::Implies), a, b) => {
                let a = self.eval(a, region)?;
                let (t, f) = self.bool_regions(&a, "expression")?;
                let (short, short_value, rest) = match op {
                    BinOp::And => (f, false, t),
                    BinOp::Or => (t, true, f),
                    _ => (f, true, t),
                };
                let b = self.eval(b, rest)?;
                let (bt, bf) = self.bool_regions(&b, "expression")?;
                self.merge([(Value::Bool(short_value), short), (Value::Bool(true), bt), (Value::Bool(false), bf)])?
            }
            RExpr::Binary(op, a, b) => {
                let a = self.eval(a, region)?;
                let mut out = Vec::new();
                for (x, ra) in a {
                    let b = self.eval(b, ra)?;
                    for (y, rb) in b {
                        let v = crate::lang::value::binary(*op, &x, &y)
                            .map_err(|err| lang(self.context(rb, "expression"), err))?;
                        out.push((v, rb));
                    }
                }
                self.merge(out)?
            }
            RExpr::Ite(c, a, b) => {
                let c = self.eval(c, region)?;
                let (t, f) = self.bool_regions(&c, "condition")?;
                let mut out = self.eval(a, t)?;
                out.extend(self.eval(b, f)?);
                self.merge(out)?
            }
            RExpr::Call(func, args) => {
                let mut partial: Vec<(Vec<Value>, NodeId)> = vec![(Vec::new(), region)];
                for a in args {
                    let mut next = Vec::new();
                    for (vals, r) in partial {
                        for (v, rv) in self.eval(a, r)? {
                            let mut vs = vals.clone();
                            vs.push(v);
                            next.push((vs, rv));
                        }
                    }
                    partial = next;
                }
                let mut out = Vec::new();
                for (vals, r) in partial {
                    let v = crate::lang::value::call(*func, &vals).map_err(|err| lang(self.context(r, "expression"), err))?;
                    out.push((v, r));
                }
                self.merge(out)?
            }
        })
    }

    fn holds(&mut self, e: &RExpr, region: NodeId, what: &str) -> Result<NodeId, WmcError> {
        let s = self.eval(e, region)?;
        Ok(self.bool_regions(&s, what)?.0)
    }

    fn predicate(&mut self, p: &Predicate, region: NodeId) -> Result<NodeId, WmcError> {
        match p {
            Predicate::Expr(e) => self.holds(e, region, "target"),
            Predicate::Or(ps) => {
                let mut acc = DdManager::FALSE;
                for q in ps {
                    let r = self.predicate(q, region)?;
                    acc = self.mgr.or(acc, r)?;
                }
                Ok(acc)
            }
            Predicate::States(states) => {
                let parts: Vec<Vec<(u64, NodeId)>> =
                    (0..self.model.vars.len()).map(|i| self.partition(i)).collect::<Result<_, _>>()?;
                let mut acc = DdManager::FALSE;
                'states: for st in states {
                    let mut cube = region;
                    for (i, &o) in st.iter().enumerate() {
                        let Some(&(_, r)) = parts[i].iter().find(|(x, _)| *x == o) else {
                            continue 'states;
                        };
                        cube = self.mgr.and(cube, r)?;
                        if cube == DdManager::FALSE {
                            continue 'states;
                        }
                    }
                    acc = self.mgr.or(acc, cube)?;
                }
                Ok(acc)
            }
        }
    }

    fn new_coin(&mut self, name: String, site: String, weight: CoinWeight) -> VarId {
        let v = self.mgr.new_var(name);
        self.coins.push(Coin { step: self.step, site, weight });
        v
    }

    /// Splits each region among weighted items by a coin chain. Returns the
    /// region where each item is selected.
    fn select(
        &mut self,
        contexts: Vec<(Vec<(usize, Polynomial)>, NodeId)>,
        num_items: usize,
        site: &str,
    ) -> Result<Vec<NodeId>, WmcError> {
        let mut chosen = vec![DdManager::FALSE; num_items];
        for (k, (items, region)) in contexts.into_iter().enumerate() {
            let probs: Vec<Polynomial> = items.iter().map(|(_, p)| p.clone()).collect();
            let weights = coin_chain_weights(&probs)?;
            let mut vars = Vec::new();
            for (j, w) in weights.into_iter().enumerate() {
                let name = format!("{site}_{}_{k}_{j}", self.step);
                vars.push(self.new_coin(name, format!("{site} context {k} position {j}"), w));
            }
            let sels = chain_selectors(&mut self.mgr, &vars)?;
            for ((item, _), sel) in items.iter().zip(sels) {
                let r = self.mgr.and(region, sel)?;
                chosen[*item] = self.mgr.or(chosen[*item], r)?;
            }
        }
        Ok(chosen)
    }

    /// Refines `parts` by each indicator, tracking which indicators hold.
    fn split_by(
        &mut self,
        region: NodeId,
        indicators: &[NodeId],
    ) -> Result<Vec<(Vec<bool>, NodeId)>, WmcError> {
        let mut parts = vec![(Vec::new(), region)];
        for &g in indicators {
            let mut next = Vec::new();
            for (mask, r) in parts {
                let on = self.mgr.and(r, g)?;
                let ng = self.mgr.not(g)?;
                let off = self.mgr.and(r, ng)?;
                for (b, rr) in [(true, on), (false, off)] {
                    if rr != DdManager::FALSE {
                        let mut m: Vec<bool> = mask.clone();
                        m.push(b);
                        next.push((m, rr));
                    }
                }
            }
            parts = next;
        }
        Ok(parts)
    }

    fn transition(&mut self, live: NodeId) -> Result<(), WmcError> {
        let model = self.model;
        let n_cmds = model.commands.len();
        let mut guard = Vec::with_capacity(n_cmds);
        for c in &model.commands {
            let g = self.holds(&c.guard, live, &format!("guard at {}", c.pos))?;
            guard.push(g);
        }

        // Top-level alternatives with their per-module enabled commands.
        struct Alt {
            modules: Vec<Vec<usize>>,
            name: String,
        }
        let mut alts: Vec<Alt> = Vec::new();
        for (i, c) in model.commands.iter().enumerate() {
            if c.action.is_none() {
                alts.push(Alt { modules: vec![vec![i]], name: format!("{}#{}", model.modules[c.module].name, i) });
            }
        }
        for a in &model.actions {
            let modules = model
                .modules
                .iter()
                .filter(|m| m.alphabet.contains(a))
                .map(|m| m.commands.iter().copied().filter(|&c| model.commands[c].action.as_ref() == Some(a)).collect())
                .collect();
            alts.push(Alt { modules, name: a.clone() });
        }

        // Count of enabled combinations per alternative, as regions.
        let mut counts: Vec<Vec<(u64, NodeId)>> = Vec::with_capacity(alts.len());
        for alt in &alts {
            let mut acc: Vec<(u64, NodeId)> = vec![(1, live)];
            for cmds in &alt.modules {
                let gs: Vec<NodeId> = cmds.iter().map(|&c| guard[c]).collect();
                let parts = self.split_by(live, &gs)?;
                let mut next: BTreeMap<u64, NodeId> = BTreeMap::new();
                for (k, r) in &acc {
                    for (mask, rm) in &parts {
                        let n = mask.iter().filter(|&&b| b).count() as u64;
                        let rr = self.mgr.and(*r, *rm)?;
                        if rr != DdManager::FALSE {
                            let slot = next.entry(k * n).or_insert(DdManager::FALSE);
                            *slot = self.mgr.or(*slot, rr)?;
                        }
                    }
                }
                acc = next.into_iter().collect();
            }
            counts.push(acc);
        }

        // Selection among alternatives.
        let mut contexts: Vec<(Vec<u64>, NodeId)> = vec![(Vec::new(), live)];
        for cs in &counts {
            let mut next = Vec::new();
            for (vec, r) in contexts {
                for (k, rk) in cs {
                    let rr = self.mgr.and(r, *rk)?;
                    if rr != DdManager::FALSE {
                        let mut v = vec.clone();
                        v.push(*k);
                        next.push((v, rr));
                    }
                }
            }
            contexts = next;
        }
        let mut weighted = Vec::new();
        let mut alt_region = vec![DdManager::FALSE; alts.len()];
        for (vec, r) in contexts {
            let total: u64 = vec.iter().sum();
            let enabled: Vec<(usize, Polynomial)> = vec
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| (i, Polynomial::constant(rat(k as i64, total as i64))))
                .collect();
            match enabled.len() {
                0 => {}
                1 => alt_region[enabled[0].0] = self.mgr.or(alt_region[enabled[0].0], r)?,
                _ => weighted.push((enabled, r)),
            }
        }
        if !weighted.is_empty() {
            let chosen = self.select(weighted, alts.len(), "a")?;
            for (i, c) in chosen.into_iter().enumerate() {
                alt_region[i] = self.mgr.or(alt_region[i], c)?;
            }
        }

        // Per command: region where it fires.
        let mut fire = vec![DdManager::FALSE; n_cmds];
        for (ai, alt) in alts.iter().enumerate() {
            let region = alt_region[ai];
            if region == DdManager::FALSE {
                continue;
            }
            for (mi, cmds) in alt.modules.iter().enumerate() {
                let gs: Vec<NodeId> = cmds.iter().map(|&c| guard[c]).collect();
                let parts = self.split_by(region, &gs)?;
                let mut weighted = Vec::new();
                for (mask, r) in parts {
                    let on: Vec<usize> = (0..cmds.len()).filter(|&j| mask[j]).collect();
                    match on.len() {
                        0 => {}
                        1 => fire[cmds[on[0]]] = self.mgr.or(fire[cmds[on[0]]], r)?,
                        n => weighted.push((
                            on.iter().map(|&j| (j, Polynomial::constant(rat(1, n as i64)))).collect(),
                            r,
                        )),
                    }
                }
                if !weighted.is_empty() {
                    let site = format!("m_{}_{}_{mi}", alt.name, cmds.len());
                    let chosen = self.select(weighted, cmds.len(), &site)?;
                    for (j, c) in chosen.into_iter().enumerate() {
                        fire[cmds[j]] = self.mgr.or(fire[cmds[j]], c)?;
                    }
                }
            }
        }

        // Updates: per command and probability context, a coin chain.
        let mut writes: Vec<Vec<(usize, NodeId, &RExpr)>> = vec![Vec::new(); model.vars.len()];
        for (ci, cmd) in model.commands.iter().enumerate() {
            if fire[ci] == DdManager::FALSE {
                continue;
            }
            let mut ctxs: Vec<(Vec<Polynomial>, NodeId)> = vec![(Vec::new(), fire[ci])];
            for u in &cmd.updates {
                let mut next = Vec::new();
                for (ps, r) in ctxs {
                    for (v, rv) in self.eval(&u.prob, r)? {
                        let p = v.as_polynomial().map_err(|err| lang(self.context(rv, &format!("probability at {}", cmd.pos)), err))?;
                        let mut ps = ps.clone();
                        ps.push(p);
                        next.push((ps, rv));
                    }
                }
                ctxs = next;
            }
            let module = &model.modules[cmd.module].name;
            let local = model.modules[cmd.module].commands.iter().position(|&c| c == ci).unwrap_or(0);
            let multi_ctx = ctxs.len() > 1;
            for (k, (probs, region)) in ctxs.into_iter().enumerate() {
                self.check_distribution(&probs, region, &format!("command at {}", cmd.pos))?;
                let kept: Vec<usize> = (0..probs.len()).filter(|&j| !probs[j].is_zero()).collect();
                let kept_probs: Vec<Polynomial> = kept.iter().map(|&j| probs[j].clone()).collect();
                let weights = coin_chain_weights(&kept_probs)?;
                let multi = weights.len() > 1;
                let mut vars = Vec::new();
                for (j, w) in weights.into_iter().enumerate() {
                    let mut name = format!("c_{module}_{local}_{}", self.step);
                    if multi_ctx {
                        name.push_str(&format!("_k{k}"));
                    }
                    if multi {
                        name.push_str(&format!("_{j}"));
                    }
                    let site = format!("{module} command {local} context {k} position {j}");
                    vars.push(self.new_coin(name, site, w));
                }
                let sels = chain_selectors(&mut self.mgr, &vars)?;
                for (&j, sel) in kept.iter().zip(sels) {
                    let r = self.mgr.and(region, sel)?;
                    if r == DdManager::FALSE {
                        continue;
                    }
                    for (var, rhs) in &cmd.updates[j].assigns {
                        writes[*var].push((ci, r, rhs));
                    }
                }
            }
        }

        // Next state, computed from the current bits before replacing them.
        let mut new_bits = self.bits.clone();
        for (var, ws) in writes.iter().enumerate() {
            if ws.is_empty() {
                continue;
            }
            for (a, &(ca, ra, _)) in ws.iter().enumerate() {
                for &(cb, rb, _) in &ws[a + 1..] {
                    if ca != cb {
                        let both = self.mgr.and(ra, rb)?;
                        if both != DdManager::FALSE {
                            return Err(LangError::DataRace {
                                state: self.witness(both),
                                var: model.vars[var].name.clone(),
                            }
                            .into());
                        }
                    }
                }
            }
            let info = &model.vars[var];
            let width = self.bits[var].len();
            let mut acc = vec![DdManager::FALSE; width];
            let mut assigned = DdManager::FALSE;
            for &(_, r, rhs) in ws {
                assigned = self.mgr.or(assigned, r)?;
                for (v, rv) in self.eval(rhs, r)? {
                    let off = info
                        .offset(&v)
                        .map_err(|err| lang(self.context(rv, "assignment"), err))?
                        .ok_or_else(|| LangError::OutOfDomain {
                            state: self.witness(rv),
                            var: info.name.clone(),
                            value: v.to_string(),
                        })?;
                    for (k, slot) in acc.iter_mut().enumerate() {
                        if off >> k & 1 == 1 {
                            *slot = self.mgr.or(*slot, rv)?;
                        }
                    }
                }
            }
            let keep = self.mgr.not(assigned)?;
            for k in 0..width {
                let old = self.mgr.and(keep, self.bits[var][k])?;
                new_bits[var][k] = self.mgr.or(acc[k], old)?;
            }
        }
        self.bits = new_bits;
        self.partitions.iter_mut().for_each(|p| *p = None);
        Ok(())
    }

    fn check_distribution(&mut self, probs: &[Polynomial], region: NodeId, what: &str) -> Result<(), WmcError> {
        let mut sum = Polynomial::zero();
        for p in probs {
            if crate::lang::value::constant_out_of_range(p) {
                return Err(LangError::InvalidDistribution {
                    state: self.witness(region),
                    reason: format!("probability {p} of {what} outside [0,1]"),
                }
                .into());
            }
            sum = &sum + p;
        }
        match sum.as_constant() {
            Some(c) if !c.is_one() => Err(LangError::InvalidDistribution {
                state: self.witness(region),
                reason: format!("probabilities of {what} sum to {c}"),
            }
            .into()),
            Some(_) if probs.iter().all(Polynomial::is_constant) => Ok(()),
            _ => {
                if self.seen_constraints.insert(probs.to_vec()) {
                    self.constraints.push(Constraint { context: what.to_string(), probs: probs.to_vec() });
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::instantiate;
    use crate::explicit::bounded_reach_explicit;
    use crate::lang::{explore, parse_expr, OverlapPolicy};
    use crate::num::{parse_valuation, Valuation};

    const FACTORIES: &str = "const double p1, p2, p3, q1, q2, q3;
module F1
 c1 : bool init false;
 [a] !c1 -> p1:(c1'=1) + 1-p1:(c1'=0);
 [a] c1 -> q1:(c1'=0) + 1-q1:(c1'=1);
endmodule
module F2 = F1[c1=c2,p1=p2,q1=q2]
module F3 = F1[c1=c3,p1=p3,q1=q3]
label \"allStrike\" = c1 & c2 & c3;";

    fn check_against_explicit(src: &str, target: &str, u: &Valuation, hs: std::ops::RangeInclusive<usize>) {
        let m = Model::from_source(src).unwrap();
        let t = m.resolve_expr(&parse_expr(target).unwrap()).unwrap();
        let e = explore(&m, &t, OverlapPolicy::Weighted, 10_000).unwrap();
        let mc = instantiate(&e.chain, u).unwrap();
        for h in hs {
            let expected = bounded_reach_explicit(&mc, h)[0].clone();
            let un = unroll_program(&m, &t, h).unwrap();
            assert_eq!(un.wmc_at(u).unwrap(), expected, "h={h}");
        }
    }

    #[test]
    fn factories_single_step() {
        let m = Model::from_source(FACTORIES).unwrap();
        let t = m.label("allStrike").unwrap().clone();
        let u = unroll_program(&m, &t, 1).unwrap();
        assert_eq!(u.inner_nodes(), 3);
        let val = parse_valuation("p1=1/2,p2=1/3,p3=1/4,q1=0,q2=0,q3=0").unwrap();
        assert_eq!(u.solution_function().evaluate(&val).unwrap(), rat(1, 24));
        let bad = parse_valuation("p1=2,p2=1/3,p3=1/4,q1=0,q2=0,q3=0").unwrap();
        assert!(u.solution_function().evaluate(&bad).is_err());
    }

    #[test]
    fn factories_match_explicit() {
        let val = parse_valuation("p1=1/2,p2=1/3,p3=1/4,q1=1/5,q2=2/7,q3=3/8").unwrap();
        check_against_explicit(FACTORIES, "c1 & c2 & c3", &val, 0..=5);
    }

    #[test]
    fn listing_with_deadlock_and_symbolic_probabilities() {
        let src = "module main
 x : [0..1] init 0;
 y : [0..2] init 1;
 const double p, q, u;
 [] x=0&y<2 -> p:x'=1 + 1-p:y'=y+1;
 [] y=2 -> q*q:y'=y-1 + u:y'=y;
 [] x=1&y!=1 -> 1:x'=y & y'=x;
endmodule";
        for val in ["p=0.6,q=0.5,u=0.75", "p=0.3,q=0.1,u=0.99"] {
            let val = parse_valuation(val).unwrap();
            check_against_explicit(src, "x=1", &val, 0..=4);
        }
    }

    #[test]
    fn overlapping_anonymous_and_state_dependent_probabilities() {
        let src = "module m
 x : [0..3] init 0;
 [] x<3 -> x/4 : (x'=x+1) + 1 - x/4 : (x'=0);
 [] x<2 -> 0.5 : (x'=min(3, x+2)) + 0.5 : true;
 [] x=0 -> (x'=1);
endmodule";
        check_against_explicit(src, "x=3", &Valuation::new(), 0..=5);
    }

    #[test]
    fn synchronization_with_inner_choice() {
        let src = "module a
 x : [0..2] init 0;
 [s] x<2 -> 0.5:(x'=x+1) + 0.5:true;
 [s] x<1 -> (x'=2);
 [s] x=2 -> true;
endmodule
module b
 y : bool init false;
 [s] true -> 0.3:(y'=!y) + 0.7:true;
 [] y -> 0.1:(y'=false) + 0.9:true;
endmodule";
        check_against_explicit(src, "x=2 & y", &Valuation::new(), 0..=5);
    }

    #[test]
    fn deadlocked_start_and_initial_target() {
        let src = "module a x : bool init true; [] !x -> (x'=true); endmodule";
        let m = Model::from_source(src).unwrap();
        let t = m.resolve_expr(&parse_expr("x").unwrap()).unwrap();
        assert_eq!(unroll_program(&m, &t, 0).unwrap().root, DdManager::TRUE);
        let t = m.resolve_expr(&parse_expr("!x").unwrap()).unwrap();
        assert_eq!(unroll_program(&m, &t, 4).unwrap().root, DdManager::FALSE);
    }

    #[test]
    fn errors_carry_states() {
        let src = "module a x : [0..2] init 0; [] true -> 0.5:(x'=x+1) + 0.5:true; endmodule";
        let m = Model::from_source(src).unwrap();
        let t = m.resolve_expr(&parse_expr("false").unwrap()).unwrap();
        match unroll_program(&m, &t, 3) {
            Err(WmcError::Lang(LangError::OutOfDomain { state, var, .. })) => {
                assert_eq!(state, "x=2");
                assert_eq!(var, "x");
            }
            other => panic!("{other:?}"),
        }
        let race = "module a x : bool; [s] true -> (x'=true); endmodule module b y : bool; [s] true -> (x'=false); endmodule";
        let m = Model::from_source(race).unwrap();
        assert!(matches!(unroll_program(&m, &t, 1), Err(WmcError::Lang(LangError::DataRace { .. }))));
    }
}
