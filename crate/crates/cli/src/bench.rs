use std::collections::BTreeSet;
use std::io::Write;
use std::sync::{mpsc, Arc};
use std::time::Duration;

use pathwise::bench::{BenchSpec, Family};
use pathwise::lang::Model;
use pathwise::num::Valuation;

use crate::engines::{run, Arith, Caps, Engine, Input, Run};
use crate::error::CliError;

pub const RUN_HEADER: &str = "family,size,h,engine,status,time_ms,states,nodes,leaves,weights,value_decimal";

/// Parses `a..b` (inclusive), `a,b,c` or a single number.
pub fn parse_list(text: &str) -> Result<Vec<usize>, String> {
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("`{s}` is not a number"));
    let mut out = BTreeSet::new();
    for part in text.split(',') {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(format!("empty range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.insert(num(part)?);
        }
    }
    Ok(out.into_iter().collect())
}

pub fn generate(spec: &BenchSpec) -> Result<String, CliError> {
    spec.generate().map_err(|e| CliError::usage(e.to_string()))
}

pub struct RunArgs {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub horizons: Vec<usize>,
    pub engines: Vec<Engine>,
    pub seed: u64,
    pub timeout: Duration,
    pub arith: Arith,
}

enum Cell {
    Done(Result<Run, CliError>),
    Timeout,
    Skipped,
}

fn run_cell(input: &Arc<Input>, engine: Engine, h: usize, arith: Arith, caps: Caps, timeout: Duration) -> Cell {
    let (tx, rx) = mpsc::channel();
    let input = Arc::clone(input);
    // A cell that times out keeps its thread until it finishes; later cells
    // of the same series are skipped so abandoned work does not pile up.
    std::thread::spawn(move || {
        let _ = tx.send(run(&input, engine, h, arith, &Valuation::new(), &caps));
    });
    match rx.recv_timeout(timeout) {
        Ok(r) => Cell::Done(r),
        Err(_) => Cell::Timeout,
    }
}

/// One row per (family, size, h, engine), ordered by that key. Sizes a
/// family does not accept are reported on `log` and left out.
pub fn run_sweep(args: &RunArgs, caps: &Caps, out: &mut dyn Write, log: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "{RUN_HEADER}")?;
    for &family in &args.families {
        let mut timed_out: BTreeSet<(Engine, usize)> = BTreeSet::new();
        for &size in &args.sizes {
            let mut spec = BenchSpec::new(family, size);
            spec.seed = args.seed;
            let source = match spec.generate() {
                Ok(s) => s,
                Err(e) => {
                    writeln!(log, "{family} size {size}: {e}")?;
                    continue;
                }
            };
            let model = Model::from_source(&source)?;
            let target = model.label(family.label())?.clone();
            let input = Arc::new(Input::Program { model, target, path: format!("{family}-{size}.pm").into() });
            for &h in &args.horizons {
                for &engine in &args.engines {
                    let cell = if timed_out.contains(&(engine, h)) {
                        Cell::Skipped
                    } else {
                        run_cell(&input, engine, h, args.arith, *caps, args.timeout)
                    };
                    let prefix = format!("{family},{size},{h},{engine}");
                    match cell {
                        Cell::Done(Ok(r)) => writeln!(
                            out,
                            "{prefix},ok,{:.3},{},{},{},{},{}",
                            r.time.as_secs_f64() * 1e3,
                            opt(r.states),
                            opt(r.nodes),
                            opt(r.leaves),
                            opt(r.weights),
                            r.value.decimal()
                        )?,
                        Cell::Done(Err(e)) => {
                            let status = if e.exit_code() == 4 { "cap" } else { "error" };
                            writeln!(log, "{prefix}: {e}")?;
                            writeln!(out, "{prefix},{status},,,,,,")?;
                        }
                        Cell::Timeout => {
                            timed_out.insert((engine, h));
                            writeln!(out, "{prefix},timeout,,,,,,")?;
                        }
                        Cell::Skipped => writeln!(out, "{prefix},skipped,,,,,,")?,
                    }
                }
            }
        }
    }
    Ok(())
}

fn opt(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
