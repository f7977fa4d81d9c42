//! Benchmarking toolkit for local differential privacy frequency estimation.
//!
//! The crate is organised the way an experiment flows:
//!
//! * [`protocols`]: client perturbation and server estimation for GRR,
//!   RAPPOR, OUE, BLH, OLH and SS.
//! * [`postprocess`]: consistency methods turning raw estimates into
//!   (near-)distributions.
//! * [`metrics`]: distances between frequency vectors.
//! * [`engine`]: chunked multi-threaded execution of an experiment plan.
//! * [`cli`]: argument parsing, dataset loading, synthetic data and output.

pub mod cli;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod model;
pub mod postprocess;
pub mod protocols;
mod registry;

pub use error::{Error, Result};
pub use model::{
    derive_rng, true_frequencies, Dataset, Domain, FrequencyVector, PrivacyBudget, RandomSource,
    DEFAULT_SEED,
};
pub use protocols::{run_protocol, Protocol, ProtocolKind, ProtocolParams, Report, SupportCounts};
