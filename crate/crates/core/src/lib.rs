//! Finite-horizon reachability for discrete-time Markov chains.
//!
//! Three engines compute `Pr(◊≤h T)`: explicit Bellman iteration
//! ([`explicit`]), ADD matrix-vector iteration ([`symbolic`]) and weighted
//! model counting over a causally ordered BDD of coin flips ([`wmc`]). Models
//! come from [`chain`] directly or from the guarded-command language in
//! [`lang`]; [`bench`] generates the standard benchmark families.

pub mod bench;
pub mod chain;
pub mod dd;
pub mod explicit;
pub mod lang;
pub mod num;
pub mod symbolic;
pub mod wmc;

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/chains.md")]
    mod chains {}
    #[doc = include_str!("../../../book/src/language.md")]
    mod language {}
    #[doc = include_str!("../../../book/src/diagrams.md")]
    mod diagrams {}
    #[doc = include_str!("../../../book/src/unrolling.md")]
    mod unrolling {}
    #[doc = include_str!("../../../book/src/parameters.md")]
    mod parameters {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
