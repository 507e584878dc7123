//! Bounds on unbounded reachability from horizon-`h` counts:
//! `Pr(◊≤h T) ≤ Pr(◊T) ≤ 1 - Pr(◊≤h Bad)`, where `Bad` holds the states that
//! cannot reach `T`.

use num_traits::One;

use super::{unroll_chain, unroll_chain_with, unroll_program, unroll_program_with, ChainQuery, Predicate, ProgramQuery, WmcError};
use crate::chain::bad_states;
use crate::chain::Mc;
use crate::lang::{explore, LangError, Model, OverlapPolicy, RExpr};
use crate::num::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub h: usize,
    pub lower: Rational,
    pub upper: Rational,
}

impl Bounds {
    pub fn gap(&self) -> Rational {
        &self.upper - &self.lower
    }
}

pub fn indefinite_bounds_chain(mc: &Mc, h: usize) -> Result<Bounds, WmcError> {
    let lower = unroll_chain(mc, h)?.wmc()?;
    let bad = bad_states(mc);
    let query = ChainQuery { count: bad.clone(), stop: bad.union(mc.targets()).copied().collect() };
    let upper = Rational::one() - unroll_chain_with(mc, h, &query)?.wmc()?;
    Ok(Bounds { h, lower, upper })
}

/// Program version: `Bad` comes from the explicit state space (at most
/// `cap` states) and enters the encoding as membership tests.
pub fn indefinite_bounds_program(model: &Model, target: &RExpr, h: usize, cap: usize) -> Result<Bounds, WmcError> {
    let explored = explore(model, target, OverlapPolicy::Weighted, cap)?;
    if !explored.chain.parameters().is_empty() {
        return Err(LangError::Type { pos: None, msg: "bounds need a model without parameters".into() }.into());
    }
    let bad: Vec<_> = bad_states(&explored.chain).into_iter().map(|s| explored.states[s].clone()).collect();
    let lower = unroll_program(model, target, h)?.wmc()?;
    let query = ProgramQuery {
        count: Predicate::States(bad.clone()),
        stop: Predicate::Or(vec![Predicate::Expr(target.clone()), Predicate::States(bad)]),
    };
    let upper = Rational::one() - unroll_program_with(model, &query, h, None)?.wmc()?;
    Ok(Bounds { h, lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::random::{random_chain, RandomChainConfig};
    use crate::chain::{toy_chain, Distribution};
    use crate::explicit::unbounded_reach;
    use crate::lang::parse_expr;
    use crate::num::rat;

    #[test]
    fn toy_has_no_bad_states() {
        let mc = toy_chain();
        let b = indefinite_bounds_chain(&mc, 3).unwrap();
        assert_eq!(b.lower, rat(21, 50));
        assert_eq!(b.upper, rat(1, 1));
    }

    #[test]
    fn sink_complement() {
        // 0 -> target 1 w.p. 7/10, sink 2 w.p. 3/10.
        let mc = Mc::new(
            0,
            vec![
                Distribution::new([(1, rat(7, 10)), (2, rat(3, 10))]),
                Distribution::dirac(1),
                Distribution::dirac(2),
            ],
            [1],
        )
        .unwrap();
        let b = indefinite_bounds_chain(&mc, 1).unwrap();
        assert_eq!((b.lower, b.upper), (rat(7, 10), rat(7, 10)));
        let b0 = indefinite_bounds_chain(&mc, 0).unwrap();
        assert_eq!((b0.lower, b0.upper), (rat(0, 1), rat(1, 1)));
    }

    #[test]
    fn nested_on_seeded_chains() {
        for seed in 0..10 {
            let mc = random_chain(seed, RandomChainConfig::default());
            let exact = unbounded_reach(&mc, 1000).unwrap()[mc.initial()].clone();
            let mut prev: Option<Bounds> = None;
            for h in 0..8 {
                let b = indefinite_bounds_chain(&mc, h).unwrap();
                assert!(b.lower <= exact && exact <= b.upper, "seed {seed} h {h}");
                if let Some(p) = prev {
                    assert!(p.lower <= b.lower && b.upper <= p.upper);
                }
                prev = Some(b);
            }
        }
    }

    #[test]
    fn program_bounds_match_chain_bounds() {
        let src = "module m x : [0..3] init 0;
 [] x=0 -> 0.5:(x'=1) + 0.3:(x'=2) + 0.2:(x'=0);
 [] x=1 -> 0.5:(x'=3) + 0.5:(x'=0);
 [] x>=2 -> true;
endmodule";
        let m = Model::from_source(src).unwrap();
        let t = m.resolve_expr(&parse_expr("x=3").unwrap()).unwrap();
        let e = explore(&m, &t, OverlapPolicy::Weighted, 100).unwrap();
        let mc = e.chain.to_mc().unwrap();
        for h in 0..6 {
            assert_eq!(indefinite_bounds_program(&m, &t, h, 100).unwrap(), indefinite_bounds_chain(&mc, h).unwrap());
        }
        let unreachable = m.resolve_expr(&parse_expr("x=3 & x=2").unwrap()).unwrap();
        let b = indefinite_bounds_program(&m, &unreachable, 3, 100).unwrap();
        assert_eq!((b.lower, b.upper), (rat(0, 1), rat(0, 1)));
    }
}
