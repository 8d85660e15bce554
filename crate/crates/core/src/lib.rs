//! Simulation and statistical certification for chained Bell inequality
//! experiments.
//!
//! The crate is organised around the data flow of an experiment:
//!
//! * [`chain`] holds the settings geometry, per-trial statistics and the
//!   estimators that only need a trial log.
//! * [`quantum`] and [`mixture`] produce outcome distributions: ideal or noisy
//!   two-qubit predictions, and local/nonlocal mixtures with a per-trial local
//!   weight.
//! * [`simulator`] turns a source into a reproducible stream of
//!   [`chain::TrialRecord`]s under the randomized-block protocol.
//! * [`certify`] computes the memory-robust upper confidence bound on the
//!   minimum local weight and the machinery used to validate it.
//! * [`io`] covers the on-disk formats, bundled reference tables, reports and
//!   the command implementations behind the `cbi` binary.

pub mod certify;
pub mod chain;
pub mod error;
pub mod exec;
pub mod io;
pub mod mixture;
pub mod quantum;
pub mod rng;
pub mod schedule;
pub mod simulator;

pub use chain::{
    chain_estimate, ChainEstimate, ChainParams, ChainTally, EstimatorMode, Outcome, SettingPair,
    TrialRecord,
};
pub use error::{Error, Result};
pub use exec::Execution;
