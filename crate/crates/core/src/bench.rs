//! Generators for the benchmark families, emitting model source text.
//!
//! Generation is deterministic: the same [`BenchSpec`] always yields the same
//! bytes. Randomized constants are multiples of `1/1000` drawn from a seeded
//! generator.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("herman needs an odd number of processes, got {0}")]
    EvenN(usize),
    #[error("{family} needs size at least {min}, got {got}")]
    TooSmall { family: Family, min: usize, got: usize },
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Factories,
    Weather,
    Weather2,
    Queues,
    Herman,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Factories, Family::Weather, Family::Weather2, Family::Queues, Family::Herman];

    pub fn name(self) -> &'static str {
        match self {
            Family::Factories => "factories",
            Family::Weather => "weather",
            Family::Weather2 => "weather2",
            Family::Queues => "queues",
            Family::Herman => "herman",
        }
    }

    /// Name of the target label in generated models.
    pub fn label(self) -> &'static str {
        match self {
            Family::Factories | Family::Weather | Family::Weather2 => "allStrike",
            Family::Queues => "target",
            Family::Herman => "stable",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Family, BenchError> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| BenchError::UnknownFamily(s.to_string()))
    }
}

/// Process biases for Herman's protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HermanBias {
    /// One shared fair coin.
    #[default]
    Uniform,
    /// Per-process biases drawn from the spec's seed.
    Seeded,
    /// Per-process biases left as parameters.
    Parametric,
}

/// Initial configuration for Herman's protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HermanInit {
    /// All bits false: every process holds a token.
    #[default]
    AllFalse,
    /// Alternating bits: exactly one token, already stable.
    Stable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchSpec {
    pub family: Family,
    /// Number of factories, queues or processes.
    pub n: usize,
    /// Queue capacity (queues only).
    pub capacity: usize,
    pub seed: u64,
    /// Leave probabilities as parameters (factories).
    pub parametric: bool,
    pub herman_bias: HermanBias,
    pub herman_init: HermanInit,
}

impl BenchSpec {
    pub fn new(family: Family, n: usize) -> BenchSpec {
        BenchSpec {
            family,
            n,
            capacity: 5,
            seed: 0,
            parametric: false,
            herman_bias: HermanBias::Uniform,
            herman_init: HermanInit::AllFalse,
        }
    }

    pub fn generate(&self) -> Result<String, BenchError> {
        match self.family {
            Family::Factories => factories(self.n, self.parametric, self.seed),
            Family::Weather => weather(self.n, self.seed),
            Family::Weather2 => weather2(self.n, self.seed),
            Family::Queues => queues(self.n, self.capacity, self.seed),
            Family::Herman => herman(self.n, self.herman_bias, self.herman_init, self.seed),
        }
    }
}

/// `k/1000` as a decimal literal.
fn milli(k: u32) -> String {
    let s = format!("{}.{:03}", k / 1000, k % 1000);
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').map(|t| format!("{t}.0")).unwrap_or_else(|| s.to_string())
}

fn draw(rng: &mut ChaCha8Rng) -> String {
    milli(rng.gen_range(1..1000))
}

fn too_small(family: Family, min: usize, got: usize) -> Result<(), BenchError> {
    if got < min {
        Err(BenchError::TooSmall { family, min, got })
    } else {
        Ok(())
    }
}

/// `n` independent factories that each go on strike (`p_i`) or return to
/// work (`q_i`) every step; target: all on strike.
pub fn factories(n: usize, parametric: bool, seed: u64) -> Result<String, BenchError> {
    too_small(Family::Factories, 1, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("dtmc\n\n");
    for i in 1..=n {
        if parametric {
            writeln!(s, "const double p{i};\nconst double q{i};").unwrap();
        } else {
            let (p, q) = (draw(&mut rng), draw(&mut rng));
            writeln!(s, "const double p{i} = {p};\nconst double q{i} = {q};").unwrap();
        }
    }
    s.push_str(
        "\nmodule F1\n    c1 : bool init false;\n    [a] !c1 -> p1:(c1'=1) + 1-p1:(c1'=0);\n    [a] c1 -> q1:(c1'=0) + 1-q1:(c1'=1);\nendmodule\n\n",
    );
    for i in 2..=n {
        writeln!(s, "module F{i} = F1[c1=c{i},p1=p{i},q1=q{i}] endmodule").unwrap();
    }
    let conj: Vec<String> = (1..=n).map(|i| format!("c{i}")).collect();
    writeln!(s, "\nlabel \"allStrike\" = {};", conj.join(" & ")).unwrap();
    Ok(s)
}

const WEATHER_CONSTANTS: [(&str, &str); 7] = [
    ("0.1", "0.2"),
    ("0.2", "0.3"),
    ("0.41", "0.45"),
    ("0.94", "0.243"),
    ("0.434", "0.293"),
    ("0.4341", "0.2934"),
    ("0.4345", "0.2939"),
];

fn weather_constants(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::new();
    for i in 1..=n {
        let (p, q) = match WEATHER_CONSTANTS.get(i - 1) {
            Some(&(p, q)) => (p.to_string(), q.to_string()),
            None => (draw(&mut rng), draw(&mut rng)),
        };
        writeln!(s, "const double p{i} = {p};\nconst double q{i} = {q};\n").unwrap();
    }
    s
}

fn weather_factories(n: usize, s: &mut String) {
    s.push_str(
        "module factory1
    state1 : bool init false;
    [act] state1 & sun  -> 0.3 * p1: (state1'=true) + 1-(0.3 * p1): (state1'=false);
    [act] !state1 & sun -> 0.7 * q1: (state1'=true) + 1-(0.7 * q1): (state1'=false);
    [act] state1 & !sun -> 0.6 * p1: (state1'=true) + 1-(0.6 * p1): (state1'=false);
    [act] !state1 & !sun -> 0.4 * q1: (state1'=true) + 1-(0.4 * q1): (state1'=false);
endmodule

",
    );
    for i in 2..=n {
        writeln!(s, "module factory{i} = factory1[state1=state{i},p1=p{i},q1=q{i}] endmodule").unwrap();
    }
    let conj: Vec<String> = (1..=n).map(|i| format!("state{i}")).collect();
    writeln!(s, "\nlabel \"allStrike\" = {};", conj.join(" & ")).unwrap();
}

/// Factories whose strike probabilities depend on a shared weather module.
/// Constants for the first seven factories are fixed; further ones are drawn
/// from `seed`.
pub fn weather(n: usize, seed: u64) -> Result<String, BenchError> {
    too_small(Family::Weather, 1, n)?;
    let mut s = String::from("dtmc\n\n");
    s.push_str(&weather_constants(n, seed));
    s.push_str(
        "
module weathermodule
    sun : bool init true;
    [act]  sun -> 0.7: (sun'=sun) + 0.3: (sun'=!sun);
    [act] !sun -> 0.4: (sun'=sun) + 0.6: (sun'=!sun);
endmodule

",
    );
    weather_factories(n, &mut s);
    Ok(s)
}

/// [`weather`] with a wind module that the weather depends on.
pub fn weather2(n: usize, seed: u64) -> Result<String, BenchError> {
    too_small(Family::Weather2, 1, n)?;
    let mut s = String::from("dtmc\n\n");
    s.push_str(&weather_constants(n, seed));
    s.push_str(
        "
module windmodule
    wind : bool init false;
    [act]  wind -> 0.6: (wind'=wind) + 0.4: (wind'=!wind);
    [act] !wind -> 0.8: (wind'=wind) + 0.2: (wind'=!wind);
endmodule

module weathermodule
    sun : bool init true;
    [act]  sun & !wind -> 0.7: (sun'=sun) + 0.3: (sun'=!sun);
    [act]  sun &  wind -> 0.5: (sun'=sun) + 0.5: (sun'=!sun);
    [act] !sun & !wind -> 0.4: (sun'=sun) + 0.6: (sun'=!sun);
    [act] !sun &  wind -> 0.2: (sun'=sun) + 0.8: (sun'=!sun);
endmodule

",
    );
    weather_factories(n, &mut s);
    Ok(s)
}

const QUEUE_CONSTANTS: [&str; 8] = ["0.4", "0.5", "0.65", "0.75", "0.85", "0.9", "0.92", "0.96"];

/// `k` queues of capacity `capacity` filling up in lockstep; target: the
/// first three full while some other queue is not.
pub fn queues(k: usize, capacity: usize, seed: u64) -> Result<String, BenchError> {
    too_small(Family::Queues, 4, k)?;
    too_small(Family::Queues, 1, capacity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("dtmc\n\n");
    for i in 1..=k {
        let p = match QUEUE_CONSTANTS.get(i - 1) {
            Some(p) => p.to_string(),
            None => draw(&mut rng),
        };
        writeln!(s, "const double p{i}={p};").unwrap();
    }
    writeln!(s, "\nconst int N = {capacity};").unwrap();
    for i in 1..=k {
        writeln!(s, "const int N{i} = N;").unwrap();
    }
    s.push_str(
        "
module queue1
    pos1 : [0..N1] init 0;
    [step] pos1 < N1 -> p1: (pos1'=pos1+1) + 1-p1: (pos1'=pos1);
    [step] pos1 = N1 -> 1: (pos1'=pos1);
endmodule

",
    );
    for i in 2..=k {
        writeln!(s, "module queue{i}=queue1[pos1=pos{i},p1=p{i},N1=N{i}] endmodule").unwrap();
    }
    let rest: Vec<String> = (4..=k).map(|i| format!("pos{i} < N{i}")).collect();
    writeln!(s, "\n\nlabel \"target\" = pos1=N1 & pos2=N2 & pos3=N3 & ({});", rest.join(" | ")).unwrap();
    Ok(s)
}

/// Herman's self-stabilizing ring of `n` processes. A process holds a token
/// when its bit equals its left neighbour's; token holders flip a biased
/// coin, the others copy their left neighbour. Target: exactly one token.
pub fn herman(n: usize, bias: HermanBias, init: HermanInit, seed: u64) -> Result<String, BenchError> {
    too_small(Family::Herman, 3, n)?;
    if n.is_multiple_of(2) {
        return Err(BenchError::EvenN(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("dtmc\n\n");
    let coin = |i: usize| match bias {
        HermanBias::Uniform => "bias".to_string(),
        _ => format!("b{i}"),
    };
    match bias {
        HermanBias::Uniform => s.push_str("const double bias = 0.5;\n"),
        HermanBias::Seeded => {
            for i in 1..=n {
                writeln!(s, "const double b{i} = {};", draw(&mut rng)).unwrap();
            }
        }
        HermanBias::Parametric => {
            for i in 1..=n {
                writeln!(s, "const double b{i};").unwrap();
            }
        }
    }
    let init_bit = |i: usize| match init {
        HermanInit::AllFalse => "false",
        // Alternating from process 1; with n odd, processes 1 and n agree, so
        // process 1 holds the only token.
        HermanInit::Stable if i % 2 == 1 => "false",
        HermanInit::Stable => "true",
    };
    for i in 1..=n {
        let left = if i == 1 { n } else { i - 1 };
        let b = coin(i);
        writeln!(
            s,
            "\nmodule process{i}
    x{i} : bool init {};
    [step] x{i} = x{left} -> {b} : (x{i}'=true) + 1-{b} : (x{i}'=false);
    [step] x{i} != x{left} -> (x{i}'=x{left});
endmodule",
            init_bit(i)
        )
        .unwrap();
    }
    let tokens: Vec<String> = (1..=n).map(|i| format!("x{i} = x{}", if i == 1 { n } else { i - 1 })).collect();
    writeln!(s, "\nlabel \"stable\" = ExactlyOneOf({});", tokens.join(", ")).unwrap();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{explore, Model, OverlapPolicy};

    fn model(src: &str) -> Model {
        Model::from_source(src).unwrap_or_else(|e| panic!("{e}\n{src}"))
    }

    #[test]
    fn decimals() {
        assert_eq!(milli(5), "0.005");
        assert_eq!(milli(120), "0.12");
        assert_eq!(milli(1000), "1.0");
    }

    #[test]
    fn every_family_parses_with_a_nonempty_target() {
        for family in Family::ALL {
            let n = match family {
                Family::Queues => 4,
                Family::Herman => 3,
                _ => 2,
            };
            let mut spec = BenchSpec::new(family, n);
            spec.capacity = 2;
            let m = model(&spec.generate().unwrap());
            let t = m.label(family.label()).unwrap();
            let e = explore(&m, t, OverlapPolicy::Reject, 10_000).unwrap();
            assert!(!e.chain.targets().is_empty(), "{family}");
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let mut spec = BenchSpec::new(Family::Herman, 5);
        spec.herman_bias = HermanBias::Seeded;
        spec.seed = 9;
        assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
        let other = BenchSpec { seed: 10, ..spec.clone() };
        assert_ne!(spec.generate().unwrap(), other.generate().unwrap());
    }

    #[test]
    fn herman_rejects_even_rings() {
        assert_eq!(herman(4, HermanBias::Uniform, HermanInit::AllFalse, 0), Err(BenchError::EvenN(4)));
    }

    #[test]
    fn weather_one_factory_has_four_states() {
        let m = model(&weather(1, 0).unwrap());
        let e = explore(&m, m.label("allStrike").unwrap(), OverlapPolicy::Reject, 100).unwrap();
        assert_eq!(e.chain.num_states(), 4);
    }
}
