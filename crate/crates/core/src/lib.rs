//! High-dimensional location tests built on sample means, spatial signs and
//! spatial ranks.
//!
//! The crate provides
//!
//! * the five U-statistics ([`ustat`]) with index-loop references ([`naive`]),
//! * unbiased nuisance estimators for their standardization ([`nuisance`]),
//! * three inference backends: plug-in asymptotics, randomization, and a
//!   simulation-only oracle for randomly scaled ρ-mixing models ([`inference`]),
//! * seeded generators for the simulation models ([`generators`]),
//! * a Monte Carlo size/power harness ([`montecarlo`]) and CSV I/O ([`csvio`]).

pub mod csvio;
pub mod error;
pub mod generators;
pub mod inference;
pub mod matrix;
pub mod montecarlo;
pub mod naive;
pub mod normal;
pub mod nuisance;
pub mod rng;
pub mod selftest;
pub mod ustat;

pub use error::{Error, Result};
pub use matrix::ObservationMatrix;
pub use nuisance::VarianceSnapshot;
pub use ustat::{StatKind, StatisticValue};
