use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pathwise::chain::random::{random_chain, RandomChainConfig};
use pathwise::chain::{instantiate, toy_chain, toy_pmc};
use pathwise::explicit::{bounded_reach_explicit, unbounded_reach};
use pathwise::num::{rat, Rational, Valuation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn pathwise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathwise"))
        .args(args)
        .env_remove("PATHWISE_MAX_STATES")
        .env_remove("PATHWISE_MAX_NODES")
        .env_remove("PATHWISE_MAX_PATHS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Rows of a CSV as maps from header to cell.
fn rows(csv: &str) -> Vec<std::collections::BTreeMap<String, String>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(str::to_string)).collect())
        .collect()
}

fn toy() -> String {
    models().join("toy.pm").display().to_string()
}

fn toy_param() -> String {
    models().join("toy_param.pm").display().to_string()
}

#[test]
fn toy_check_all_engines() {
    let o = pathwise(&["check", &toy(), "--label", "goal", "-H", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = rows(&stdout(&o));
    let engines: Vec<&str> = rows.iter().map(|r| r["engine"].as_str()).collect();
    assert_eq!(engines, ["explicit", "add", "wmc"]);
    for r in &rows {
        assert_eq!(r["value_fraction"], "21/50");
        assert_eq!(r["value_decimal"], "0.42");
    }
}

#[test]
fn oracle_engine_and_float_mode() {
    let o = pathwise(&["check", &toy(), "-l", "goal", "-H", "5", "-e", "oracle"]);
    assert!(o.status.success());
    let reference = toy_chain();
    assert_eq!(rows(&stdout(&o))[0]["value_fraction"], bounded_reach_explicit(&reference, 5)[reference.initial()].to_string());
    let o = pathwise(&["check", &toy(), "-l", "goal", "-H", "3", "--arith", "float"]);
    assert!(o.status.success());
    for r in rows(&stdout(&o)) {
        assert_eq!(r["value_decimal"], "0.420000000000");
        assert_eq!(r["value_fraction"], "");
    }
}

#[test]
fn initial_state_in_target_at_horizon_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("start.pm");
    std::fs::write(&path, "module m x : [0..2] init 1; [] true -> 0.5:(x'=0) + 0.5:(x'=2); endmodule\nlabel \"t\" = x=1;\n")
        .unwrap();
    let o = pathwise(&["check", path.to_str().unwrap(), "-l", "t", "-H", "0"]);
    assert!(o.status.success());
    for r in rows(&stdout(&o)) {
        assert_eq!(r["value_fraction"], "1");
    }
}

#[test]
fn parametric_check_with_values() {
    let o = pathwise(&["check", &toy_param(), "-l", "goal", "-H", "3", "--param", "p=0.4,q=1/2", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["agree"], true);
    for r in v["results"].as_array().unwrap() {
        assert_eq!(r["value_fraction"], "21/50");
    }
}

#[test]
fn exit_codes() {
    // Usage: missing parameter values, bad flags, unknown label.
    assert_eq!(pathwise(&["check", &toy_param(), "-l", "goal", "-H", "3"]).status.code(), Some(2));
    assert_eq!(pathwise(&["check", &toy(), "-l", "goal"]).status.code(), Some(2));
    assert_eq!(pathwise(&["check", &toy(), "-l", "nope", "-H", "1"]).status.code(), Some(2));
    assert_eq!(pathwise(&["bench", "gen", "--family", "herman", "--size", "4"]).status.code(), Some(2));

    // Model error with a source position.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pm");
    std::fs::write(&bad, "module m\n  x : [0..1] init 0;\n  [] x=0 -> (x'=1) +;\nendmodule\n").unwrap();
    let o = pathwise(&["check", bad.to_str().unwrap(), "-l", "t", "-H", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(&format!("{}:3:", bad.display())), "{}", stderr(&o));

    // Caps.
    let o = Command::new(env!("CARGO_BIN_EXE_pathwise"))
        .args(["check", &toy(), "-l", "goal", "-H", "3", "-e", "explicit"])
        .env("PATHWISE_MAX_STATES", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = pathwise(&["check", &toy(), "-l", "goal", "-H", "8", "-e", "wmc", "--max-nodes", "5"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = pathwise(&["check", &toy(), "-l", "goal", "-H", "12", "-e", "oracle", "--max-paths", "10"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn chain_json_input_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let mc = random_chain(5, RandomChainConfig::default());
    let path = dir.path().join("chain.json");
    std::fs::write(&path, mc.to_json().to_string()).unwrap();
    let dot = dir.path().join("phi.dot");
    let o = pathwise(&["check", path.to_str().unwrap(), "-H", "4", "--dot", dot.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let want = bounded_reach_explicit(&mc, 4)[mc.initial()].to_string();
    for r in rows(&stdout(&o)) {
        assert_eq!(r["value_fraction"], want);
    }
    assert!(std::fs::read_to_string(dot).unwrap().starts_with("digraph"));
}

fn write_valuations(dir: &Path, header: &[String], rows: &[Valuation]) -> PathBuf {
    let mut text = header.join(",") + "\n";
    for u in rows {
        let cells: Vec<String> = header.iter().map(|p| u[p].to_string()).collect();
        text += &(cells.join(",") + "\n");
    }
    let path = dir.join("valuations.csv");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn sample_factories_products() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("f3.pm");
    let o = pathwise(&["bench", "gen", "--family", "factories", "--size", "3", "--parametric", "-o", model.to_str().unwrap()]);
    assert!(o.status.success());
    let names: Vec<String> = ["p1", "q1", "p2", "q2", "p3", "q3"].map(String::from).to_vec();
    let us: Vec<Valuation> = [(1, 2, 3), (9, 5, 7), (4, 4, 1)]
        .iter()
        .map(|&(a, b, c)| {
            names
                .iter()
                .zip([a, 5, b, 5, c, 5])
                .map(|(n, k)| (n.clone(), rat(k, 10)))
                .collect()
        })
        .collect();
    let vals = write_valuations(dir.path(), &names, &us);
    let o = pathwise(&["sample", model.to_str().unwrap(), "-l", "allStrike", "-H", "1", "--valuations", vals.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("build_ms="));
    let got = rows(&stdout(&o));
    assert_eq!(got.len(), 3);
    for (r, u) in got.iter().zip(&us) {
        let product: Rational = ["p1", "p2", "p3"].iter().map(|p| u[*p].clone()).product();
        assert_eq!(r["value_fraction"], product.to_string());
        assert_eq!(r["status"], "ok");
    }
}

#[test]
fn sample_toy_matches_instantiated_chain() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let names = vec!["p".to_string(), "q".to_string()];
    let us: Vec<Valuation> = (0..100)
        .map(|_| names.iter().map(|n| (n.clone(), rat(rng.gen_range(1..1000), 1000))).collect())
        .collect();
    let vals = write_valuations(dir.path(), &names, &us);
    let o = pathwise(&["sample", &toy_param(), "-l", "goal", "-H", "6", "--valuations", vals.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let got = rows(&stdout(&o));
    assert_eq!(got.len(), 100);
    let pmc = toy_pmc();
    for (r, u) in got.iter().zip(&us) {
        let mc = instantiate(&pmc, u).unwrap();
        assert_eq!(r["value_fraction"], bounded_reach_explicit(&mc, 6)[mc.initial()].to_string());
    }
}

#[test]
fn sample_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = pathwise(&["sample", &toy_param(), "-l", "goal", "-H", "3", "--valuations", empty.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "row,value_decimal,value_fraction,status,eval_ms\n");
    assert!(stderr(&o).contains("evaluations=0"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "p,q\n1.5,0.5\n0.4,0.5\n").unwrap();
    let o = pathwise(&["sample", &toy_param(), "-l", "goal", "-H", "3", "--valuations", bad.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[1].starts_with("0,,,\"not-well-defined:"), "{}", lines[1]);
    assert!(lines[2].starts_with("1,0.42,21/50,ok,"));

    let o = pathwise(&["sample", &toy(), "-l", "goal", "-H", "3", "--random", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_sweeps() {
    let o = pathwise(&["bounds", &toy(), "-l", "goal", "-H", "5", "--sweep"]);
    assert!(o.status.success());
    let sweep = rows(&stdout(&o));
    assert_eq!(sweep.len(), 6);
    let mut last = Rational::from_integer(0.into());
    for r in &sweep {
        assert_eq!(r["upper_fraction"], "1");
        let lower: Rational = r["lower_fraction"].parse().unwrap();
        assert!(lower >= last);
        last = lower;
    }

    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("never.pm");
    std::fs::write(&m, "module m x : [0..1] init 0; [] true -> (x'=0); endmodule\nlabel \"t\" = x=1;\n").unwrap();
    let o = pathwise(&["bounds", m.to_str().unwrap(), "-l", "t", "-H", "3", "--sweep"]);
    for r in rows(&stdout(&o)) {
        assert_eq!((r["lower_fraction"].as_str(), r["upper_fraction"].as_str()), ("0", "0"));
    }

    let mc = random_chain(21, RandomChainConfig::default());
    let exact = unbounded_reach(&mc, 1000).unwrap()[mc.initial()].clone();
    let path = dir.path().join("chain.json");
    std::fs::write(&path, mc.to_json().to_string()).unwrap();
    let o = pathwise(&["bounds", path.to_str().unwrap(), "-H", "6"]);
    let r = &rows(&stdout(&o))[0];
    let lower: Rational = r["lower_fraction"].parse().unwrap();
    let upper: Rational = r["upper_fraction"].parse().unwrap();
    assert!(lower <= exact && exact <= upper);
}

fn without_time(csv: &str) -> String {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let t = header.iter().position(|h| *h == "time_ms").unwrap();
    csv.lines()
        .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != t).map(|(_, c)| c).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn stats_and_bench_run_are_deterministic() {
    let o = pathwise(&["stats", &toy(), "-l", "goal", "-H", "3"]);
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), "model,h,engine,status,time_ms,states,nodes,leaves,weights,value_decimal");
    assert_eq!(out.lines().count(), 1 + 4 * 3);
    let add = stdout(&pathwise(&["stats", &toy(), "-l", "goal", "-H", "2", "--kind", "add"]));
    assert_eq!(add.lines().next().unwrap(), "model,h,add-nodes,add-leaves,vector-nodes,vector-leaves");

    let args = ["bench", "run", "--family", "factories,herman", "--sizes", "2..3", "--horizons", "1,3", "--seed", "4"];
    let a = stdout(&pathwise(&args));
    let b = stdout(&pathwise(&args));
    assert_eq!(a.lines().next().unwrap(), "family,size,h,engine,status,time_ms,states,nodes,leaves,weights,value_decimal");
    assert_eq!(without_time(&a), without_time(&b));
    let table = rows(&a);
    // factories 2 and 3, herman 3 (2 is too small): 3 instances x 2 horizons x 3 engines.
    assert_eq!(table.len(), 18);
    for chunk in table.chunks(3) {
        assert!(chunk.iter().all(|r| r["status"] == "ok" && r["value_decimal"] == chunk[0]["value_decimal"]));
    }
}

#[test]
fn bench_gen_is_deterministic() {
    let args = ["bench", "gen", "--family", "herman", "--size", "5", "--herman-bias", "seeded", "--seed", "9"];
    let a = pathwise(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, pathwise(&args).stdout);
    assert!(stdout(&a).contains("label \"stable\""));
}
