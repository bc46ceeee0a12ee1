//! Random sequential dimer placement on graphs.
//!
//! A dimer covers the two endpoints of an edge; edges wake in a uniformly
//! random order and a dimer is placed whenever both endpoints are still
//! free, which jams at a maximal matching. The crate provides
//!
//! - graph constructors with dense, reproducible edge ids ([`graphs`]),
//! - the seeded wakeup process and its localization diagnostics ([`engine`]),
//! - exact small-graph laws by dynamic programming ([`oracle`]),
//! - exact segment analytics: recurrences, generating functions, and the
//!   moment generating function series ([`exact1d`]),
//! - Monte Carlo estimators and hypothesis checks ([`stats`]),
//! - the `dimers` command line tool ([`cli`]).

pub mod cli;
pub mod engine;
pub mod exact1d;
pub mod graphs;
pub mod oracle;
pub mod report;
pub mod series;
pub mod stats;
