//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p pathwise --test acceptance`.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pathwise::bench::{factories, weather};
use pathwise::chain::random::{random_chain, RandomChainConfig};
use pathwise::chain::{binarize, enumerate_reaching_paths, instantiate, toy_chain, Mc, DEFAULT_PATH_CAP};
use pathwise::dd::{DdManager, VarId};
use pathwise::explicit::{bounded_reach_explicit, bounded_reach_f64_at, bounded_reach_table, unbounded_reach};
use pathwise::lang::{explore, Model, OverlapPolicy, Value};
use pathwise::num::{rat, Rational, Valuation};
use pathwise::symbolic::{bounded_reach_add, AddModel, StateEncoding};
use pathwise::wmc::{indefinite_bounds_chain, unroll_chain, unroll_program, CoinWeight};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn model(src: &str) -> Model {
    Model::from_source(src).expect("generated model parses")
}

fn constant(m: &Model, name: &str) -> Rational {
    match &m.constants[name] {
        Value::Real(p) => p.as_constant().expect("constant"),
        other => panic!("{name} = {other}"),
    }
}

fn explicit_chain(m: &Model, label: &str) -> Mc {
    let e = explore(m, m.label(label).unwrap(), OverlapPolicy::Reject, 100_000).unwrap();
    e.chain.to_mc().unwrap()
}

fn c1_toy_chain() -> Check {
    let mc = toy_chain();
    let expected = rat(21, 50);
    let explicit = bounded_reach_explicit(&mc, 3)[mc.initial()].clone();
    let add = bounded_reach_add(&mc, 3).map_err(|e| e.to_string())?.rational_at_initial();
    let wmc = unroll_chain(&mc, 3).map_err(|e| e.to_string())?.wmc().map_err(|e| e.to_string())?;
    ensure(explicit == expected && add == expected && wmc == expected, || {
        format!("explicit {explicit}, add {add}, wmc {wmc}")
    })?;
    Ok("explicit = add = wmc = 21/50".into())
}

fn c2_table() -> Check {
    // Rows: <0,0>, <0,1>, <1,0>, <1,1>; columns h = 0..3.
    let table = [
        [rat(0, 1), rat(0, 1), rat(1, 5), rat(21, 50)],
        [rat(0, 1), rat(1, 2), rat(3, 4), rat(7, 8)],
        [rat(1, 1), rat(1, 1), rat(1, 1), rat(1, 1)],
        [rat(0, 1), rat(1, 2), rat(3, 4), rat(7, 8)],
    ];
    let got = bounded_reach_table(&toy_chain(), 3);
    let mut matched = 0;
    for (s, row) in table.iter().enumerate() {
        for (h, v) in row.iter().enumerate() {
            ensure(&got[h][s] == v, || format!("state {s}, h {h}: got {}, want {v}", got[h][s]))?;
            matched += 1;
        }
    }
    Ok(format!("{matched}/16 entries"))
}

fn c3_formula() -> Check {
    let mut u = unroll_chain(&toy_chain(), 3).map_err(|e| e.to_string())?;
    let coin = |name: &str| u.coin(name).ok_or_else(|| format!("missing coin {name}"));
    let (s0, s1, t1, t2, v2) =
        (coin("c_<0,0>_0")?, coin("c_<0,0>_1")?, coin("c_<0,1>_1")?, coin("c_<0,1>_2")?, coin("c_<1,1>_2")?);
    let m = &mut u.manager;
    let lit = |m: &mut DdManager, v: VarId, pos: bool| if pos { m.var(v).unwrap() } else { m.nvar(v).unwrap() };
    let cubes = [
        vec![lit(m, s0, true), lit(m, s1, false), lit(m, t2, true)],
        vec![lit(m, s0, false), lit(m, t1, true)],
        vec![lit(m, s0, false), lit(m, t1, false), lit(m, v2, true)],
    ];
    let mut phi = DdManager::FALSE;
    for c in cubes {
        let cube = m.and_all(c).unwrap();
        phi = m.or(phi, cube).unwrap();
    }
    ensure(phi == u.root, || format!("encoding {} differs from formula {phi}", u.root))?;
    let weight = |v: VarId| {
        if v == s0 || v == s1 {
            Some(rat(3, 5))
        } else if v == t1 || v == t2 || v == v2 {
            Some(rat(1, 2))
        } else {
            None
        }
    };
    let value = pathwise::wmc::wmc(&u.manager, phi, &weight).map_err(|e| e.to_string())?;
    ensure(value == rat(21, 50), || format!("WMC {value}"))?;
    Ok("same canonical node; WMC = 21/50".into())
}

fn c4_factory_product() -> Check {
    for n in 1..=8 {
        let m = model(&factories(n, false, n as u64).unwrap());
        let product = (1..=n).fold(Rational::one(), |acc, i| acc * constant(&m, &format!("p{i}")));
        let u = unroll_program(&m, m.label("allStrike").unwrap(), 1).map_err(|e| e.to_string())?;
        let got = u.wmc().map_err(|e| e.to_string())?;
        ensure(got == product, || format!("n={n}: WMC {got}, product {product}"))?;
    }
    Ok("n = 1..8".into())
}

fn c5_engines_vs_oracle() -> Check {
    let cfg = RandomChainConfig { min_states: 1, max_states: 8, max_degree: 4, max_weight: 9 };
    let mut checks = 0;
    for seed in 0..200 {
        let mc = random_chain(seed, cfg);
        let explicit = bounded_reach_table(&mc, 8);
        for h in 0..=8 {
            let oracle = enumerate_reaching_paths(&mc, h, DEFAULT_PATH_CAP).map_err(|e| e.to_string())?.mass;
            let e = &explicit[h][mc.initial()];
            let a = bounded_reach_add(&mc, h).map_err(|e| e.to_string())?.rational_at_initial();
            let w = unroll_chain(&mc, h).map_err(|e| e.to_string())?.wmc().map_err(|e| e.to_string())?;
            ensure(*e == oracle && a == oracle && w == oracle, || {
                format!("seed {seed} h {h}: oracle {oracle}, explicit {e}, add {a}, wmc {w}")
            })?;
            checks += 1;
        }
    }
    Ok(format!("{checks} (chain, h) pairs"))
}

fn c6_linear_growth() -> Check {
    let n = 4;
    let m = model(&factories(n, false, 6).unwrap());
    let target = m.label("allStrike").unwrap();
    let states = explicit_chain(&m, "allStrike").num_states();
    let mut counts = Vec::new();
    for h in 2..=20 {
        let u = unroll_program(&m, target, h).map_err(|e| e.to_string())?;
        let per_step = (0..h).map(|t| u.coins.iter().filter(|c| c.step == t).count()).max().unwrap_or(0);
        let bound = h as u128 * (states as u128 * 2) * per_step as u128 * (1u128 << per_step);
        ensure((u.node_count() as u128) <= bound, || format!("h={h}: {} nodes > bound {bound}", u.node_count()))?;
        counts.push(u.node_count());
    }
    let diffs: BTreeSet<i64> = counts.windows(2).map(|w| w[1] as i64 - w[0] as i64).collect();
    ensure(diffs.len() == 1, || format!("node counts {counts:?} have differences {diffs:?}"))?;
    Ok(format!("nodes {}..{} (+{} per step)", counts[0], counts[counts.len() - 1], diffs.iter().next().unwrap()))
}

fn c7_weights_vs_leaves() -> Check {
    let mut leaves = Vec::new();
    let mut weights = Vec::new();
    for n in 2..=7 {
        let m = model(&weather(n, 0).unwrap());
        let u = unroll_program(&m, m.label("allStrike").unwrap(), 3).map_err(|e| e.to_string())?;
        let distinct: BTreeSet<CoinWeight> = u.coins.iter().map(|c| c.weight.clone()).collect();
        ensure(distinct.len() <= 4 * n + 4, || format!("n={n}: {} distinct weights", distinct.len()))?;
        weights.push(distinct.len());
        let mc = explicit_chain(&m, "allStrike");
        let mut add = AddModel::new(StateEncoding::binary(mc.num_states()));
        let a = add.transition_add(&mc).map_err(|e| e.to_string())?;
        leaves.push(add.manager.terminal_set(a).len());
    }
    ensure(leaves.windows(2).all(|w| w[0] < w[1]), || format!("leaf counts {leaves:?} not increasing"))?;
    ensure(*leaves.last().unwrap() > 1 << 7, || format!("leaf count at n=7 is {}", leaves.last().unwrap()))?;
    Ok(format!("weights {weights:?}, ADD leaves {leaves:?}"))
}

fn c8_parametric_sampling() -> Check {
    let n = 6;
    let m = model(&factories(n, true, 0).unwrap());
    let target = m.label("allStrike").unwrap();
    let u = unroll_program(&m, target, 10).map_err(|e| e.to_string())?;
    let sf = u.solution_function();
    let pmc = explore(&m, target, OverlapPolicy::Reject, 1000).unwrap().chain;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut max_err = 0f64;
    for i in 0..1000 {
        let val: Valuation = m
            .parameters
            .iter()
            .map(|p| (p.clone(), rat(rng.gen_range(1..1000), 1000)))
            .collect();
        if i < 50 {
            let mc = instantiate(&pmc, &val).map_err(|e| e.to_string())?;
            let (got, stats) = sf.evaluate_with_stats(&val).map_err(|e| e.to_string())?;
            let want = bounded_reach_explicit(&mc, 10)[mc.initial()].clone();
            ensure(got == want, || format!("valuation {i}: {got} != {want}"))?;
            ensure(stats.node_visits <= stats.nodes, || format!("{} visits for {} nodes", stats.node_visits, stats.nodes))?;
        } else {
            let got = sf.evaluate_f64(&val).map_err(|e| e.to_string())?;
            let want = bounded_reach_f64_at(&pmc, &val, 10).map_err(|e| e.to_string())?[pmc.initial()];
            max_err = max_err.max((got - want).abs());
            ensure((got - want).abs() <= 1e-12, || format!("valuation {i}: {got} vs {want}"))?;
        }
    }
    Ok(format!("{} nodes, 50 exact + 950 float (max error {max_err:.1e})", sf.num_nodes()))
}

fn c9_sandwich() -> Check {
    for seed in 0..20 {
        let mc = random_chain(1000 + seed, RandomChainConfig::default());
        let exact = unbounded_reach(&mc, 1000).map_err(|e| e.to_string())?[mc.initial()].clone();
        let (mut low_gap, mut up_gap) = (Rational::one(), Rational::one());
        for h in 0..=12 {
            let b = indefinite_bounds_chain(&mc, h).map_err(|e| e.to_string())?;
            ensure(b.lower <= exact && exact <= b.upper, || {
                format!("seed {seed} h {h}: {} <= {exact} <= {} fails", b.lower, b.upper)
            })?;
            let (lg, ug) = (&exact - &b.lower, &b.upper - &exact);
            ensure(lg <= low_gap && ug <= up_gap, || format!("seed {seed} h {h}: gap grew"))?;
            low_gap = lg;
            up_gap = ug;
        }
    }
    Ok("20 chains, h = 0..12".into())
}

fn c10_binarization() -> Check {
    let cfg = RandomChainConfig { min_states: 2, max_states: 8, max_degree: 5, max_weight: 9 };
    let mut checks = 0;
    for seed in 0..50 {
        let mc = random_chain(2000 + seed, cfg);
        let b = binarize(&mc);
        ensure(b.chain.max_out_degree() <= 2, || format!("seed {seed}: out-degree {}", b.chain.max_out_degree()))?;
        let table = bounded_reach_table(&b.chain, b.horizon.map(6));
        for h in 0..=6 {
            let oracle = enumerate_reaching_paths(&mc, h, DEFAULT_PATH_CAP).map_err(|e| e.to_string())?.mass;
            let got = &table[b.horizon.map(h)][b.chain.initial()];
            ensure(*got == oracle, || format!("seed {seed} h {h}: {got} != {oracle}"))?;
            checks += 1;
        }
    }
    Ok(format!("{checks} (chain, h) pairs"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Check); 10] = [
        ("toy chain Pr(<>=3) = 21/50 on all engines", Duration::from_secs(1), c1_toy_chain),
        ("toy table, 16 values", Duration::from_secs(1), c2_table),
        ("h=3 encoding equals the three-cube formula", Duration::from_secs(1), c3_formula),
        ("factory product law at h=1", Duration::from_secs(5), c4_factory_product),
        ("engines equal path oracle on 200 chains", Duration::from_secs(120), c5_engines_vs_oracle),
        ("factories n=4 node counts affine in h", Duration::from_secs(30), c6_linear_growth),
        ("weather weights vs ADD leaves", Duration::from_secs(120), c7_weights_vs_leaves),
        ("parametric sampling, 1000 valuations", Duration::from_secs(180), c8_parametric_sampling),
        ("indefinite-horizon sandwich", Duration::from_secs(60), c9_sandwich),
        ("binarization preserves first-visit mass", Duration::from_secs(60), c10_binarization),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let (status, detail) = match result {
            Ok(d) if took <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; took {took:.2?}, budget {budget:?}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {status} {name} [{took:.2?}] {detail}", i + 1);
    }
    if failed == 0 {
        println!("acceptance: 10/10 passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 10 failed");
        ExitCode::FAILURE
    }
}
