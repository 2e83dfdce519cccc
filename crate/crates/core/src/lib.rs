//! Symmetric property estimation from i.i.d. samples via pseudo profile
//! maximum likelihood.
//!
//! The pipeline splits a sample in two, uses the first half to pick the set
//! `S` of symbols whose frequency falls in a chosen frequency set `F`, fits an
//! approximate PML distribution to the `S`-restricted profile of the second
//! half, and plugs the empirical distribution (plus a bias correction) into
//! the remaining symbols.
//!
//! Modules:
//! - [`profiles`]: samples, histograms, profiles, pseudo profiles, partitioning.
//! - [`poly`]: best uniform polynomial approximation and unbiased
//!   falling-factorial estimators built on it.
//! - [`pml`]: exact profile likelihood oracle, surrogate likelihood, and the
//!   approximate PML solver (including the support-constrained variant).
//! - [`estimators`]: plug-in, bias-corrected empirical and per-symbol
//!   polynomial estimators.
//! - [`framework`]: the end-to-end estimator and its default configurations.
//! - [`bench`]: synthetic distributions, seeded sampling and the Monte Carlo
//!   harness.
//! - [`io`]: sample and histogram file formats.

#![forbid(unsafe_code)]

pub mod bench;
pub mod error;
pub mod estimators;
pub mod framework;
pub mod io;
pub mod pml;
pub mod poly;
pub mod profiles;

pub use error::{Error, Result};
pub use estimators::{Estimate, Property};
pub use framework::{estimate, support_estimate, FrameworkConfig};
pub use pml::{DiscreteDistribution, PmlResult, SolverOptions};
pub use profiles::{
    FrequencySet, Histogram, Profile, PseudoProfile, SampleSequence, Symbol, SymbolSet,
};
