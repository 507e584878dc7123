//! Explicit-state semantics: successor distributions and reachable-state
//! exploration into a [`Pmc`].

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_traits::One;
use rand::Rng;

use super::model::{Model, RExpr};
use super::value::{self, EvalError, Value};
use super::LangError;
use crate::chain::{Distribution, Pmc};
use crate::num::{Polynomial, Valuation};

/// A state: one domain offset per model variable.
pub type State = Vec<u64>;

/// What to do when several transitions are enabled in one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapPolicy {
    /// Choose uniformly among the enabled combinations.
    #[default]
    Weighted,
    /// Fail with [`LangError::OverlappingGuards`].
    Reject,
}

/// Default bound on explored states.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Picks uniformly among the set entries and returns its 1-based index,
/// or `None` when nothing is set.
pub fn select_from<R: Rng + ?Sized>(enabled: &[bool], rng: &mut R) -> Option<usize> {
    let n = enabled.iter().filter(|&&b| b).count();
    if n == 0 {
        return None;
    }
    let mut k = rng.gen_range(0..n);
    for (i, &b) in enabled.iter().enumerate() {
        if b {
            if k == 0 {
                return Some(i + 1);
            }
            k -= 1;
        }
    }
    unreachable!()
}

pub fn eval_in(model: &Model, e: &RExpr, state: &[u64], params: Option<&Valuation>) -> Result<Value, EvalError> {
    e.eval(&|i| model.vars[i].value(state[i]), params)
}

fn eval_err(model: &Model, state: &[u64], what: &str, error: EvalError) -> LangError {
    LangError::Eval { context: format!("{what} in state ({})", model.state_label(state)), error }
}

/// Whether `e` holds in `state`.
pub fn holds(model: &Model, e: &RExpr, state: &[u64]) -> Result<bool, LangError> {
    eval_in(model, e, state, None)
        .and_then(|v| v.as_bool())
        .map_err(|err| eval_err(model, state, "predicate", err))
}

/// One enabled way of moving: the commands that fire together.
fn enabled_choices(model: &Model, state: &[u64], policy: OverlapPolicy) -> Result<Vec<Vec<usize>>, LangError> {
    let mut enabled = vec![false; model.commands.len()];
    for (i, c) in model.commands.iter().enumerate() {
        enabled[i] = holds(model, &c.guard, state)
            .map_err(|e| match e {
                LangError::Eval { error, .. } => eval_err(model, state, &format!("guard at {}", c.pos), error),
                e => e,
            })?;
    }
    let mut choices: Vec<Vec<usize>> = Vec::new();
    for (i, c) in model.commands.iter().enumerate() {
        if c.action.is_none() && enabled[i] {
            choices.push(vec![i]);
        }
    }
    for action in &model.actions {
        let mut per_module: Vec<Vec<usize>> = Vec::new();
        for m in model.modules.iter().filter(|m| m.alphabet.contains(action)) {
            let cmds: Vec<usize> = m
                .commands
                .iter()
                .copied()
                .filter(|&c| enabled[c] && model.commands[c].action.as_ref() == Some(action))
                .collect();
            if policy == OverlapPolicy::Reject && cmds.len() > 1 {
                return Err(LangError::OverlappingGuards {
                    module: m.name.clone(),
                    action: action.clone(),
                    state: model.state_label(state),
                });
            }
            per_module.push(cmds);
        }
        if per_module.iter().any(Vec::is_empty) {
            continue;
        }
        let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
        for cmds in &per_module {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    cmds.iter().map(move |&c| {
                        let mut v = prefix.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        choices.extend(combos);
    }
    if policy == OverlapPolicy::Reject && choices.len() > 1 {
        let first = &model.commands[choices[0][0]];
        return Err(LangError::OverlappingGuards {
            module: model.modules[first.module].name.clone(),
            action: first.action.clone().unwrap_or_default(),
            state: model.state_label(state),
        });
    }
    Ok(choices)
}

/// Successor distribution of `state`, merged by successor. Parameters stay
/// symbolic unless `params` is given. A state with nothing enabled loops.
pub fn successors(
    model: &Model,
    state: &[u64],
    params: Option<&Valuation>,
    policy: OverlapPolicy,
) -> Result<BTreeMap<State, Polynomial>, LangError> {
    let choices = enabled_choices(model, state, policy)?;
    let mut out: BTreeMap<State, Polynomial> = BTreeMap::new();
    if choices.is_empty() {
        out.insert(state.to_vec(), Polynomial::one());
        return Ok(out);
    }
    let share = Polynomial::constant(crate::num::rat(1, choices.len() as i64));
    let label = || model.state_label(state);
    for choice in &choices {
        // Per command: its update list as (probability, assignments).
        let mut branches: Vec<(Polynomial, Vec<(usize, u64)>)> = vec![(share.clone(), Vec::new())];
        for &ci in choice {
            let cmd = &model.commands[ci];
            let mut local = Vec::new();
            let mut total = Polynomial::zero();
            for u in &cmd.updates {
                let p = eval_in(model, &u.prob, state, params)
                    .and_then(|v| value::probability(&v))
                    .map_err(|e| eval_err(model, state, &format!("probability at {}", cmd.pos), e))?;
                if value::constant_out_of_range(&p) {
                    return Err(LangError::InvalidDistribution {
                        state: label(),
                        reason: format!("probability {p} of command at {} outside [0,1]", cmd.pos),
                    });
                }
                total = &total + &p;
                let mut assigns = Vec::new();
                for (var, rhs) in &u.assigns {
                    let v = eval_in(model, rhs, state, params)
                        .map_err(|e| eval_err(model, state, &format!("assignment at {}", cmd.pos), e))?;
                    let info = &model.vars[*var];
                    let off = info
                        .offset(&v)
                        .map_err(|e| eval_err(model, state, &format!("assignment at {}", cmd.pos), e))?
                        .ok_or_else(|| LangError::OutOfDomain {
                            state: label(),
                            var: info.name.clone(),
                            value: v.to_string(),
                        })?;
                    assigns.push((*var, off));
                }
                local.push((p, assigns));
            }
            if let Some(c) = total.as_constant() {
                if !c.is_one() {
                    return Err(LangError::InvalidDistribution {
                        state: label(),
                        reason: format!("probabilities of command at {} sum to {c}", cmd.pos),
                    });
                }
            }
            let mut next = Vec::with_capacity(branches.len() * local.len());
            for (p, a) in &branches {
                for (q, b) in &local {
                    let mut merged = a.clone();
                    for &(var, off) in b {
                        if merged.iter().any(|&(w, _)| w == var) {
                            return Err(LangError::DataRace { state: label(), var: model.vars[var].name.clone() });
                        }
                        merged.push((var, off));
                    }
                    next.push((p * q, merged));
                }
            }
            branches = next;
        }
        for (p, assigns) in branches {
            if p.is_zero() {
                continue;
            }
            let mut succ = state.to_vec();
            for (var, off) in assigns {
                succ[var] = off;
            }
            let slot = out.entry(succ).or_insert_with(Polynomial::zero);
            *slot = &*slot + &p;
        }
    }
    out.retain(|_, p| !p.is_zero());
    Ok(out)
}

/// Reachable part of a model as an explicit chain.
#[derive(Debug, Clone)]
pub struct Explored {
    pub chain: Pmc,
    /// State vector of each chain state.
    pub states: Vec<State>,
}

/// Breadth-first exploration from the initial state. Successors are visited
/// in state-vector order, so state numbering is deterministic.
pub fn explore(model: &Model, target: &RExpr, policy: OverlapPolicy, cap: usize) -> Result<Explored, LangError> {
    let init = model.initial_state();
    let mut index: HashMap<State, usize> = HashMap::new();
    let mut states = vec![init.clone()];
    index.insert(init, 0);
    let mut queue = VecDeque::from([0usize]);
    let mut rows: Vec<Vec<(usize, Polynomial)>> = vec![Vec::new()];
    while let Some(s) = queue.pop_front() {
        let succ = successors(model, &states[s].clone(), None, policy)?;
        let mut row = Vec::with_capacity(succ.len());
        for (t, p) in succ {
            let id = match index.get(&t) {
                Some(&id) => id,
                None => {
                    if states.len() >= cap {
                        return Err(LangError::StateCapExceeded(cap));
                    }
                    let id = states.len();
                    index.insert(t.clone(), id);
                    states.push(t);
                    rows.push(Vec::new());
                    queue.push_back(id);
                    id
                }
            };
            row.push((id, p));
        }
        rows[s] = row;
    }
    let mut targets = Vec::new();
    for (i, st) in states.iter().enumerate() {
        if holds(model, target, st)? {
            targets.push(i);
        }
    }
    let labels = states.iter().map(|s| model.state_label(s)).collect();
    let transitions = rows.into_iter().map(Distribution::new).collect();
    let chain = Pmc::with_labels(labels, 0, transitions, targets).map_err(|e| LangError::InvalidDistribution {
        state: "?".into(),
        reason: e.to_string(),
    })?;
    Ok(Explored { chain, states })
}

/// First reachable state where some module has two enabled commands for the
/// same named action, as `(module, action, state)`.
pub fn find_guard_overlap(model: &Model, cap: usize) -> Result<Option<(String, String, String)>, LangError> {
    let target = RExpr::Lit(Value::Bool(false));
    let explored = explore(model, &target, OverlapPolicy::Weighted, cap)?;
    for st in &explored.states {
        match enabled_choices(model, st, OverlapPolicy::Reject) {
            Err(LangError::OverlappingGuards { module, action, state }) if !action.is_empty() => {
                return Ok(Some((module, action, state)))
            }
            _ => {}
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{parse_valuation, rat};
    use rand::SeedableRng;

    const LISTING: &str = "module main
 x : [0..1] init 0;
 y : [0..2] init 1;
 const double p, q, u;
 [] x=0&y<2 -> p:x'=1 + 1-p:y'=y+1;
 [] y=2 -> q*q:y'=y-1 + u:y'=y;
 [] x=1&y!=1 -> 1:x'=y & y'=x;
endmodule";

    fn model(src: &str) -> Model {
        Model::from_source(src).unwrap()
    }

    #[test]
    fn listing_reachable_states() {
        let m = model(LISTING);
        let t = RExpr::Lit(Value::Bool(false));
        let e = explore(&m, &t, OverlapPolicy::Weighted, 100).unwrap();
        assert_eq!(e.chain.labels(), ["x=0,y=1", "x=0,y=2", "x=1,y=1"]);
        // (1,1) has nothing enabled and loops.
        assert_eq!(e.chain.distribution(2).support(), &[(2, Polynomial::one())]);
        assert_eq!(e.chain.parameters(), ["p", "q", "u"]);
        let u = parse_valuation("p=1/2,q=1/2,u=3/4").unwrap();
        let mc = crate::chain::instantiate(&e.chain, &u).unwrap();
        assert_eq!(mc.probability(1, 0), rat(1, 4));
    }

    #[test]
    fn synchronization_multiplies() {
        let src = "module a x : bool init false; [s] !x -> 1/2:(x'=true) + 1/2:(x'=false); [s] x -> (x'=x); endmodule
module b y : bool init false; [s] !y -> 1/3:(y'=true) + 2/3:(y'=false); [s] y -> (y'=y); endmodule";
        let m = model(src);
        let d = successors(&m, &[0, 0], None, OverlapPolicy::Weighted).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d[&vec![1, 1]], Polynomial::constant(rat(1, 6)));
        assert_eq!(d[&vec![0, 0]], Polynomial::constant(rat(1, 3)));
    }

    #[test]
    fn overlap_policies() {
        let src = "module a x : [0..2] init 0; [go] x=0 -> (x'=1); [go] x<2 -> (x'=2); [go] x=2 -> true; endmodule";
        let m = model(src);
        let d = successors(&m, &[0], None, OverlapPolicy::Weighted).unwrap();
        assert_eq!(d[&vec![1]], Polynomial::constant(rat(1, 2)));
        assert!(matches!(
            successors(&m, &[0], None, OverlapPolicy::Reject),
            Err(LangError::OverlappingGuards { .. })
        ));
        let found = find_guard_overlap(&m, 10).unwrap().unwrap();
        assert_eq!(found, ("a".to_string(), "go".to_string(), "x=0".to_string()));
    }

    #[test]
    fn races_and_domain_errors() {
        let race = "module a x : bool; [s] true -> (x'=true); endmodule module b y : bool; [s] true -> (x'=false); endmodule";
        let m = model(race);
        assert!(matches!(successors(&m, &[0, 0], None, OverlapPolicy::Weighted), Err(LangError::DataRace { .. })));
        let dom = "module a x : [0..2] init 2; [] true -> (x'=x+1); endmodule";
        let m = model(dom);
        assert!(matches!(successors(&m, &[2], None, OverlapPolicy::Weighted), Err(LangError::OutOfDomain { .. })));
        let sum = "module a x : bool; [] true -> 0.5:(x'=true) + 0.4:(x'=false); endmodule";
        let m = model(sum);
        assert!(matches!(
            successors(&m, &[0], None, OverlapPolicy::Weighted),
            Err(LangError::InvalidDistribution { .. })
        ));
    }

    #[test]
    fn state_cap() {
        let src = "module a x : [0..100]; [] x<100 -> (x'=x+1); endmodule";
        let m = model(src);
        let t = RExpr::Lit(Value::Bool(false));
        assert!(matches!(explore(&m, &t, OverlapPolicy::Weighted, 10), Err(LangError::StateCapExceeded(10))));
    }

    #[test]
    fn select_from_is_uniform_over_set_bits() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let bits = [false, true, false, true, true];
        let mut counts = [0usize; 6];
        for _ in 0..3000 {
            counts[select_from(&bits, &mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[0] + counts[1] + counts[3], 0);
        for i in [2, 4, 5] {
            assert!((800..1200).contains(&counts[i]), "{counts:?}");
        }
        assert_eq!(select_from(&[false, false], &mut rng), None);
    }
}
