use std::io::Write;
use std::path::Path;
use std::time::Instant;

use pathwise::explicit::{bounded_reach_table, table_csv};
use pathwise::num::{parse_rational, rat, to_decimal, Rational, Valuation};
use pathwise::symbolic::{bounded_reach_add, stats_csv};
use pathwise::wmc::{indefinite_bounds_chain, indefinite_bounds_program, Bounds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::engines::{agreement, run, Arith, Caps, Engine, Input, Prob, Run};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub const CHECK_HEADER: &str = "engine,h,value_decimal,value_fraction,time_ms,states,nodes,leaves,weights";

fn opt(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn millis(d: std::time::Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

fn run_json(r: &Run, h: usize) -> serde_json::Value {
    json!({
        "engine": r.engine,
        "h": h,
        "value_decimal": r.value.decimal(),
        "value_fraction": match &r.value { Prob::Exact(x) => json!(x.to_string()), Prob::Float(_) => json!(null) },
        "time_ms": r.time.as_secs_f64() * 1e3,
        "states": r.states,
        "nodes": r.nodes,
        "leaves": r.leaves,
        "weights": r.weights,
    })
}

pub struct CheckArgs<'a> {
    pub engines: Vec<Engine>,
    pub h: usize,
    pub arith: Arith,
    pub valuation: Valuation,
    pub format: Format,
    pub dot: Option<&'a Path>,
}

/// Runs the engines, prints one row per engine, and fails with a
/// disagreement when more than one engine ran and any two differ.
pub fn check(input: &Input, args: &CheckArgs, caps: &Caps, out: &mut dyn Write) -> Result<(), CliError> {
    let mut runs = Vec::new();
    for &e in &args.engines {
        runs.push(run(input, e, args.h, args.arith, &args.valuation, caps)?);
    }
    if let Some(path) = args.dot {
        let unrolled = input.unroll(args.h, caps)?;
        std::fs::write(path, unrolled.to_dot())?;
    }
    let verdict = agreement(&runs);
    match args.format {
        Format::Csv => {
            writeln!(out, "{CHECK_HEADER}")?;
            for r in &runs {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.engine,
                    args.h,
                    r.value.decimal(),
                    r.value.fraction(),
                    millis(r.time),
                    opt(r.states),
                    opt(r.nodes),
                    opt(r.leaves),
                    opt(r.weights)
                )?;
            }
        }
        Format::Json => {
            let doc = json!({
                "h": args.h,
                "arithmetic": match args.arith { Arith::Exact => "exact", Arith::Float => "float" },
                "agree": verdict.is_ok(),
                "results": runs.iter().map(|r| run_json(r, args.h)).collect::<Vec<_>>(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"))?;
        }
    }
    verdict
}

pub const SAMPLE_HEADER: &str = "row,value_decimal,value_fraction,status,eval_ms";

/// Valuations from CSV: a header of parameter names, one row per valuation.
pub fn read_valuations(path: &Path, parameters: &[String]) -> Result<Vec<Valuation>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    for name in &header {
        if !parameters.contains(name) {
            return Err(CliError::usage(format!("{}: `{name}` is not a parameter of the model", path.display())));
        }
    }
    for p in parameters {
        if !header.contains(p) {
            return Err(CliError::usage(format!("{}: no column for parameter `{p}`", path.display())));
        }
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut u = Valuation::new();
        for (name, cell) in header.iter().zip(record.iter()) {
            let v = parse_rational(cell)
                .map_err(|e| CliError::usage(format!("{}: row {}: {e}", path.display(), i + 1)))?;
            u.insert(name.clone(), v);
        }
        out.push(u);
    }
    Ok(out)
}

/// `count` valuations with every parameter drawn as `k/1000`, `1 ≤ k ≤ 999`.
pub fn random_valuations(parameters: &[String], count: usize, seed: u64) -> Vec<Valuation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| parameters.iter().map(|p| (p.clone(), rat(rng.gen_range(1..1000), 1000))).collect())
        .collect()
}

pub struct SampleArgs<'a> {
    pub h: usize,
    pub arith: Arith,
    pub valuations: Vec<Valuation>,
    pub dot: Option<&'a Path>,
}

/// Builds the diagram once and evaluates it per valuation. Build time goes
/// to `log`; rows that are not well defined get a status instead of a value.
pub fn sample(input: &Input, args: &SampleArgs, caps: &Caps, out: &mut dyn Write, log: &mut dyn Write) -> Result<(), CliError> {
    if input.parameters().is_empty() {
        return Err(CliError::usage("sample needs a parametric model"));
    }
    let start = Instant::now();
    let unrolled = input.unroll(args.h, caps)?;
    let sf = unrolled.solution_function();
    let build = start.elapsed();
    if let Some(path) = args.dot {
        std::fs::write(path, unrolled.to_dot())?;
    }
    writeln!(out, "{SAMPLE_HEADER}")?;
    let mut total = std::time::Duration::ZERO;
    for (i, u) in args.valuations.iter().enumerate() {
        let t = Instant::now();
        let value = match args.arith {
            Arith::Exact => sf.evaluate(u).map(Prob::Exact),
            Arith::Float => sf.evaluate_f64(u).map(Prob::Float),
        };
        let took = t.elapsed();
        total += took;
        match value {
            Ok(v) => writeln!(out, "{i},{},{},ok,{}", v.decimal(), v.fraction(), millis(took))?,
            Err(pathwise::wmc::WmcError::NotWellDefined(m)) => {
                writeln!(out, "{i},,,{},{}", csv_cell(&format!("not-well-defined: {m}")), millis(took))?
            }
            Err(e) => writeln!(out, "{i},,,{},{}", csv_cell(&format!("error: {e}")), millis(took))?,
        }
    }
    writeln!(
        log,
        "build_ms={} nodes={} evaluations={} eval_total_ms={}",
        millis(build),
        sf.num_nodes(),
        args.valuations.len(),
        millis(total)
    )?;
    Ok(())
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const BOUNDS_HEADER: &str = "h,lower_decimal,upper_decimal,gap_decimal,lower_fraction,upper_fraction,time_ms";

fn bounds_at(input: &Input, h: usize, caps: &Caps) -> Result<Bounds, CliError> {
    if !input.parameters().is_empty() {
        return Err(CliError::usage("bounds needs a model without parameters"));
    }
    match input {
        Input::Program { model, target, .. } => Ok(indefinite_bounds_program(model, target, h, caps.states)?),
        Input::Chain(c) => Ok(indefinite_bounds_chain(&c.to_mc()?, h)?),
    }
}

/// Lower and upper bounds on unbounded reachability for each horizon in `hs`.
pub fn bounds(input: &Input, hs: &[usize], format: Format, caps: &Caps, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for &h in hs {
        let start = Instant::now();
        let b = bounds_at(input, h, caps)?;
        rows.push((b, start.elapsed()));
    }
    let dec = |r: &Rational| to_decimal(r, 12);
    match format {
        Format::Csv => {
            writeln!(out, "{BOUNDS_HEADER}")?;
            for (b, t) in &rows {
                writeln!(out, "{},{},{},{},{},{},{}", b.h, dec(&b.lower), dec(&b.upper), dec(&b.gap()), b.lower, b.upper, millis(*t))?;
            }
        }
        Format::Json => {
            let doc: Vec<_> = rows
                .iter()
                .map(|(b, t)| {
                    json!({
                        "h": b.h,
                        "lower_decimal": dec(&b.lower),
                        "upper_decimal": dec(&b.upper),
                        "gap_decimal": dec(&b.gap()),
                        "lower_fraction": b.lower.to_string(),
                        "upper_fraction": b.upper.to_string(),
                        "time_ms": t.as_secs_f64() * 1e3,
                    })
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"))?;
        }
    }
    Ok(())
}

pub const STATS_HEADER: &str = "model,h,engine,status,time_ms,states,nodes,leaves,weights,value_decimal";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StatsKind {
    /// One row per horizon and engine.
    Engines,
    /// Sizes of the transition ADD and the value vector per iterate.
    Add,
    /// Explicit values of every state per horizon.
    Table,
}

pub struct StatsArgs<'a> {
    pub name: &'a str,
    pub max_h: usize,
    pub engines: Vec<Engine>,
    pub kind: StatsKind,
    pub valuation: Valuation,
}

pub fn stats(input: &Input, args: &StatsArgs, caps: &Caps, out: &mut dyn Write) -> Result<(), CliError> {
    match args.kind {
        StatsKind::Engines => {
            writeln!(out, "{STATS_HEADER}")?;
            for h in 0..=args.max_h {
                for &e in &args.engines {
                    let r = run(input, e, h, Arith::Exact, &args.valuation, caps)?;
                    writeln!(
                        out,
                        "{},{h},{e},ok,{},{},{},{},{},{}",
                        csv_cell(args.name),
                        millis(r.time),
                        opt(r.states),
                        opt(r.nodes),
                        opt(r.leaves),
                        opt(r.weights),
                        r.value.decimal()
                    )?;
                }
            }
        }
        StatsKind::Add => {
            let mc = explicit_mc(input, &args.valuation, caps)?;
            let reach = bounded_reach_add(&mc, args.max_h)?;
            write!(out, "{}", stats_csv(args.name, &reach.stats))?;
        }
        StatsKind::Table => {
            let mc = explicit_mc(input, &args.valuation, caps)?;
            write!(out, "{}", table_csv(&bounded_reach_table(&mc, args.max_h)))?;
        }
    }
    Ok(())
}

fn explicit_mc(input: &Input, u: &Valuation, caps: &Caps) -> Result<pathwise::chain::Mc, CliError> {
    let pmc = input.chain(caps)?;
    if pmc.parameters().is_empty() {
        return Ok(pmc.to_mc()?);
    }
    Ok(pathwise::chain::instantiate(&pmc, u)?)
}
