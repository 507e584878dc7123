//! Model loading and the three engines behind one interface.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use pathwise::chain::{enumerate_reaching_paths, instantiate, Mc, Pmc};
use pathwise::explicit::{bounded_reach_explicit, bounded_reach_f64_at};
use pathwise::lang::{explore, Model, OverlapPolicy, RExpr};
use pathwise::num::{to_decimal, to_f64, Rational, Valuation};
use pathwise::symbolic::bounded_reach_add;
use pathwise::wmc::{unroll_chain, unroll_program_with, ProgramQuery, Unrolled};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Explicit,
    Add,
    Wmc,
    Oracle,
}

impl Engine {
    pub const CORE: [Engine; 3] = [Engine::Explicit, Engine::Add, Engine::Wmc];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Explicit => "explicit",
            Engine::Add => "add",
            Engine::Wmc => "wmc",
            Engine::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "explicit" => Ok(Engine::Explicit),
            "add" => Ok(Engine::Add),
            "wmc" => Ok(Engine::Wmc),
            "oracle" => Ok(Engine::Oracle),
            _ => Err(format!("unknown engine `{s}` (expected explicit, add, wmc or oracle)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Arith {
    Exact,
    Float,
}

/// Resource limits shared by all commands.
#[derive(Debug, Clone, Copy)]
pub struct Caps {
    pub states: usize,
    pub nodes: Option<usize>,
    pub paths: usize,
}

/// A loaded model together with its target.
pub enum Input {
    Program { model: Model, target: RExpr, path: PathBuf },
    Chain(Pmc),
}

impl Input {
    /// `.json` files hold an explicit chain with its own targets; anything
    /// else is parsed as modeling-language source and needs a label.
    pub fn load(path: &Path, label: Option<&str>) -> Result<Input, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            if label.is_some() {
                return Err(CliError::usage("--label applies to model files; chain JSON lists its targets"));
            }
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Model(format!("{}: {e}", path.display())))?;
            // Rational weights first; polynomial weights for parametric chains.
            let chain = match Mc::from_json(&v) {
                Ok(mc) => mc.to_pmc(),
                Err(_) => Pmc::from_json(&v).map_err(|e| CliError::Model(format!("{}: {e}", path.display())))?,
            };
            return Ok(Input::Chain(chain));
        }
        let label = label.ok_or_else(|| CliError::usage("--label is required for model files"))?;
        let model = Model::from_source(&text).map_err(|e| CliError::lang(path, e))?;
        let target = model.label(label).map_err(|e| CliError::lang(path, e))?.clone();
        Ok(Input::Program { model, target, path: path.to_path_buf() })
    }

    pub fn parameters(&self) -> Vec<String> {
        match self {
            Input::Program { model, .. } => model.parameters.clone(),
            Input::Chain(c) => c.parameters().to_vec(),
        }
    }

    /// The explicit parametric chain (reachable states only for programs).
    pub fn chain(&self, caps: &Caps) -> Result<Pmc, CliError> {
        match self {
            Input::Program { model, target, path } => explore(model, target, OverlapPolicy::Weighted, caps.states)
                .map(|e| e.chain)
                .map_err(|e| CliError::lang(path, e)),
            Input::Chain(c) => Ok(c.clone()),
        }
    }

    pub fn unroll(&self, h: usize, caps: &Caps) -> Result<Unrolled, CliError> {
        match self {
            Input::Program { model, target, path } => {
                unroll_program_with(model, &ProgramQuery::reach(target), h, caps.nodes).map_err(|e| match e {
                    pathwise::wmc::WmcError::Lang(l) => CliError::lang(path, l),
                    e => e.into(),
                })
            }
            Input::Chain(c) => Ok(unroll_chain(c, h)?),
        }
    }
}

/// A probability in the requested arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum Prob {
    Exact(Rational),
    Float(f64),
}

impl Prob {
    pub fn as_f64(&self) -> f64 {
        match self {
            Prob::Exact(r) => to_f64(r),
            Prob::Float(x) => *x,
        }
    }

    pub fn decimal(&self) -> String {
        match self {
            Prob::Exact(r) => to_decimal(r, 12),
            Prob::Float(x) => format!("{x:.12}"),
        }
    }

    /// The exact fraction, empty in float mode.
    pub fn fraction(&self) -> String {
        match self {
            Prob::Exact(r) => r.to_string(),
            Prob::Float(_) => String::new(),
        }
    }
}

/// Result of one engine run. Sizes are absent when the engine has none.
#[derive(Debug, Clone)]
pub struct Run {
    pub engine: Engine,
    pub value: Prob,
    pub time: Duration,
    pub states: Option<usize>,
    pub nodes: Option<usize>,
    pub leaves: Option<usize>,
    pub weights: Option<usize>,
}

/// Absolute tolerance for comparing float results.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

fn instantiated(pmc: &Pmc, u: &Valuation) -> Result<Mc, CliError> {
    if pmc.parameters().is_empty() {
        return pmc.to_mc().map_err(Into::into);
    }
    Ok(instantiate(pmc, u)?)
}

/// Runs `engine` for horizon `h`. Parametric models need a full valuation.
/// The ADD engine always computes exactly; in float mode its value is
/// converted afterwards.
pub fn run(input: &Input, engine: Engine, h: usize, arith: Arith, u: &Valuation, caps: &Caps) -> Result<Run, CliError> {
    let missing: Vec<String> = input.parameters().into_iter().filter(|p| !u.contains_key(p)).collect();
    if !missing.is_empty() {
        return Err(CliError::usage(format!("model has parameters without values: {}", missing.join(", "))));
    }
    let start = Instant::now();
    let mut out = Run { engine, value: Prob::Float(0.0), time: Duration::ZERO, states: None, nodes: None, leaves: None, weights: None };
    match engine {
        Engine::Explicit => {
            let pmc = input.chain(caps)?;
            out.states = Some(pmc.num_states());
            out.value = match arith {
                Arith::Exact => {
                    let mc = instantiated(&pmc, u)?;
                    Prob::Exact(bounded_reach_explicit(&mc, h)[mc.initial()].clone())
                }
                Arith::Float => {
                    let x = bounded_reach_f64_at(&pmc, u, h).map_err(|e| CliError::Model(e.to_string()))?;
                    Prob::Float(x[pmc.initial()])
                }
            };
        }
        Engine::Add => {
            let mc = instantiated(&input.chain(caps)?, u)?;
            out.states = Some(mc.num_states());
            let reach = bounded_reach_add(&mc, h)?;
            let stats = reach.stats[0];
            out.nodes = Some(stats.matrix_nodes);
            out.leaves = Some(stats.matrix_leaves);
            let r = reach.rational_at_initial();
            out.value = match arith {
                Arith::Exact => Prob::Exact(r),
                Arith::Float => Prob::Float(to_f64(&r)),
            };
        }
        Engine::Wmc => {
            let unrolled = input.unroll(h, caps)?;
            out.nodes = Some(unrolled.node_count());
            out.weights = Some(unrolled.distinct_weights().len());
            let parametric = !unrolled.parameters.is_empty();
            out.value = match (arith, parametric) {
                (Arith::Exact, false) => Prob::Exact(unrolled.wmc()?),
                (Arith::Exact, true) => Prob::Exact(unrolled.wmc_at(u)?),
                (Arith::Float, false) => Prob::Float(unrolled.wmc_f64()?),
                (Arith::Float, true) => Prob::Float(unrolled.solution_function().evaluate_f64(u)?),
            };
        }
        Engine::Oracle => {
            let mc = instantiated(&input.chain(caps)?, u)?;
            out.states = Some(mc.num_states());
            let mass = enumerate_reaching_paths(&mc, h, caps.paths)?.mass;
            out.value = match arith {
                Arith::Exact => Prob::Exact(mass),
                Arith::Float => Prob::Float(to_f64(&mass)),
            };
        }
    }
    out.time = start.elapsed();
    Ok(out)
}

/// `Ok` when every pair of runs agrees (exactly, or within
/// [`FLOAT_TOLERANCE`] when any value is a float).
pub fn agreement(runs: &[Run]) -> Result<(), CliError> {
    let Some(first) = runs.first() else { return Ok(()) };
    let differs = |a: &Prob, b: &Prob| match (a, b) {
        (Prob::Exact(x), Prob::Exact(y)) => x != y,
        _ => (a.as_f64() - b.as_f64()).abs() > FLOAT_TOLERANCE,
    };
    if runs.iter().any(|r| differs(&r.value, &first.value)) {
        let listing: Vec<String> = runs
            .iter()
            .map(|r| format!("{} = {}", r.engine, if r.value.fraction().is_empty() { r.value.decimal() } else { r.value.fraction() }))
            .collect();
        return Err(CliError::Disagreement(format!("engines disagree: {}", listing.join(", "))));
    }
    Ok(())
}
