//! `pathwise`: bounded reachability for Markov chains from the command line.

mod bench;
mod commands;
mod engines;
mod error;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pathwise::bench::{BenchSpec, Family, HermanBias, HermanInit};
use pathwise::num::{parse_valuation, Valuation};

use crate::commands::{CheckArgs, Format, SampleArgs, StatsArgs, StatsKind};
use crate::engines::{Arith, Caps, Engine, Input};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "pathwise", version, about = "Finite-horizon reachability for Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute Pr(reach target within h steps) with one or more engines.
    Check(CheckCmd),
    /// Build the parametric diagram once and evaluate it per valuation.
    Sample(SampleCmd),
    /// Lower and upper bounds on unbounded reachability.
    Bounds(BoundsCmd),
    /// Size and timing tables for one model.
    Stats(StatsCmd),
    /// Benchmark families: generate models or run sweeps.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Args)]
struct ModelArgs {
    /// Model source (`.pm`) or explicit chain (`.json`).
    model: PathBuf,
    /// Label naming the target states (model sources only).
    #[arg(long, short)]
    label: Option<String>,
}

#[derive(Args, Clone, Copy)]
struct CapArgs {
    /// Reachable-state limit for explicit exploration.
    #[arg(long, env = "PATHWISE_MAX_STATES", default_value_t = pathwise::lang::DEFAULT_STATE_CAP)]
    max_states: usize,
    /// Decision-diagram node limit for unrolling (0 = none).
    #[arg(long, env = "PATHWISE_MAX_NODES", default_value_t = 0)]
    max_nodes: usize,
    /// Path limit for the oracle engine.
    #[arg(long, env = "PATHWISE_MAX_PATHS", default_value_t = pathwise::chain::DEFAULT_PATH_CAP)]
    max_paths: usize,
}

impl CapArgs {
    fn caps(self) -> Caps {
        Caps { states: self.max_states, nodes: (self.max_nodes > 0).then_some(self.max_nodes), paths: self.max_paths }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineChoice {
    Explicit,
    Add,
    Wmc,
    Oracle,
    /// explicit, add and wmc, checked for agreement
    All,
}

#[derive(Args)]
struct CheckCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// Horizon h.
    #[arg(long, short = 'H')]
    horizon: usize,
    #[arg(long, short, value_enum, default_value = "all")]
    engine: EngineChoice,
    #[arg(long, value_enum, default_value = "exact")]
    arith: Arith,
    /// Parameter values, e.g. `p=0.4,q=1/2`.
    #[arg(long)]
    param: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write the reachability BDD in DOT format.
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Args)]
struct SampleCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, short = 'H')]
    horizon: usize,
    /// CSV with a header of parameter names and one valuation per row.
    #[arg(long, conflicts_with = "random")]
    valuations: Option<PathBuf>,
    /// Draw this many valuations instead (each value k/1000).
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "exact")]
    arith: Arith,
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Args)]
struct BoundsCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, short = 'H')]
    horizon: usize,
    /// Report every horizon from 0 to h.
    #[arg(long)]
    sweep: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Args)]
struct StatsCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// Largest horizon; rows cover 0..=h.
    #[arg(long, short = 'H')]
    horizon: usize,
    #[arg(long, value_enum, default_value = "engines")]
    kind: StatsKind,
    /// Comma-separated engines for `--kind engines`.
    #[arg(long, default_value = "explicit,add,wmc", value_delimiter = ',')]
    engines: Vec<Engine>,
    #[arg(long)]
    param: Option<String>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Print the model source of one benchmark instance.
    Gen(GenCmd),
    /// Run engines over a grid of families, sizes and horizons.
    Run(RunCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum BiasChoice {
    Uniform,
    Seeded,
    Parametric,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitChoice {
    AllFalse,
    Stable,
}

#[derive(Args)]
struct GenCmd {
    #[arg(long)]
    family: Family,
    /// Number of factories, queues or processes.
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leave probabilities as parameters (factories, herman).
    #[arg(long)]
    parametric: bool,
    /// Queue capacity.
    #[arg(long, default_value_t = 5)]
    capacity: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    herman_bias: BiasChoice,
    #[arg(long, value_enum, default_value = "all-false")]
    herman_init: InitChoice,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunCmd {
    /// Comma-separated families.
    #[arg(long, value_delimiter = ',', default_value = "factories")]
    family: Vec<Family>,
    /// Sizes: `a..b`, `a,b,c` or a single value.
    #[arg(long, default_value = "2..4")]
    sizes: String,
    /// Horizons, same syntax as sizes.
    #[arg(long, default_value = "10")]
    horizons: String,
    #[arg(long, default_value = "explicit,add,wmc", value_delimiter = ',')]
    engines: Vec<Engine>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-cell wall-clock limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, value_enum, default_value = "exact")]
    arith: Arith,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn valuation(text: Option<&str>) -> Result<Valuation, CliError> {
    text.map_or(Ok(Valuation::new()), |t| parse_valuation(t).map_err(|e| CliError::usage(format!("--param: {e}"))))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Check(c) => {
            let input = Input::load(&c.model.model, c.model.label.as_deref())?;
            let engines = match c.engine {
                EngineChoice::Explicit => vec![Engine::Explicit],
                EngineChoice::Add => vec![Engine::Add],
                EngineChoice::Wmc => vec![Engine::Wmc],
                EngineChoice::Oracle => vec![Engine::Oracle],
                EngineChoice::All => Engine::CORE.to_vec(),
            };
            let args = CheckArgs {
                engines,
                h: c.horizon,
                arith: c.arith,
                valuation: valuation(c.param.as_deref())?,
                format: c.format,
                dot: c.dot.as_deref(),
            };
            let mut out = writer(c.output.as_deref())?;
            let result = commands::check(&input, &args, &c.caps.caps(), &mut out);
            out.flush()?;
            result
        }
        Command::Sample(c) => {
            let input = Input::load(&c.model.model, c.model.label.as_deref())?;
            let params = input.parameters();
            let valuations = match (&c.valuations, c.random) {
                (Some(path), _) => commands::read_valuations(path, &params)?,
                (None, Some(n)) => commands::random_valuations(&params, n, c.seed),
                (None, None) => return Err(CliError::usage("sample needs --valuations FILE or --random N")),
            };
            let args = SampleArgs { h: c.horizon, arith: c.arith, valuations, dot: c.dot.as_deref() };
            let mut out = writer(c.output.as_deref())?;
            commands::sample(&input, &args, &c.caps.caps(), &mut out, &mut io::stderr())?;
            Ok(out.flush()?)
        }
        Command::Bounds(c) => {
            let input = Input::load(&c.model.model, c.model.label.as_deref())?;
            let hs: Vec<usize> = if c.sweep { (0..=c.horizon).collect() } else { vec![c.horizon] };
            let mut out = writer(c.output.as_deref())?;
            commands::bounds(&input, &hs, c.format, &c.caps.caps(), &mut out)?;
            Ok(out.flush()?)
        }
        Command::Stats(c) => {
            let input = Input::load(&c.model.model, c.model.label.as_deref())?;
            let name = c.model.model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let args = StatsArgs {
                name: &name,
                max_h: c.horizon,
                engines: c.engines,
                kind: c.kind,
                valuation: valuation(c.param.as_deref())?,
            };
            let mut out = writer(c.output.as_deref())?;
            commands::stats(&input, &args, &c.caps.caps(), &mut out)?;
            Ok(out.flush()?)
        }
        Command::Bench(BenchCmd::Gen(g)) => {
            let mut spec = BenchSpec::new(g.family, g.size);
            spec.seed = g.seed;
            spec.parametric = g.parametric;
            spec.capacity = g.capacity;
            spec.herman_bias = match (g.herman_bias, g.parametric) {
                (_, true) | (BiasChoice::Parametric, _) => HermanBias::Parametric,
                (BiasChoice::Uniform, false) => HermanBias::Uniform,
                (BiasChoice::Seeded, false) => HermanBias::Seeded,
            };
            spec.herman_init = match g.herman_init {
                InitChoice::AllFalse => HermanInit::AllFalse,
                InitChoice::Stable => HermanInit::Stable,
            };
            let text = bench::generate(&spec)?;
            let mut out = writer(g.output.as_deref())?;
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
        Command::Bench(BenchCmd::Run(r)) => {
            if !(r.timeout > 0.0 && r.timeout.is_finite()) {
                return Err(CliError::usage("--timeout must be a positive number of seconds"));
            }
            let args = bench::RunArgs {
                families: r.family,
                sizes: bench::parse_list(&r.sizes).map_err(|e| CliError::usage(format!("--sizes: {e}")))?,
                horizons: bench::parse_list(&r.horizons).map_err(|e| CliError::usage(format!("--horizons: {e}")))?,
                engines: r.engines,
                seed: r.seed,
                timeout: Duration::from_secs_f64(r.timeout),
                arith: r.arith,
            };
            let mut out = writer(r.output.as_deref())?;
            bench::run_sweep(&args, &r.caps.caps(), &mut out, &mut io::stderr())?;
            Ok(out.flush()?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
