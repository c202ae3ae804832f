//! Metropolis-Hastings kernels with reversible proposals — random-walk
//! Metropolis, preconditioned Crank-Nicolson (pCN), and mixed pCN (MpCN) —
//! together with executable ergodicity diagnostics: proposal reversibility
//! checks, the random-walk property of the MpCN kernel on the log
//! squared-radius scale, drift-ratio estimation with analytic limit oracles,
//! and the necessary-condition statistics that separate the three kernels on
//! heavy- and light-tailed targets.
//!
//! The crate is organized around five pieces:
//!
//! * [`rng`] — seeded, stream-indexed randomness; every run is reproducible
//!   from a `(seed, stream_id)` pair.
//! * [`targets`] — unnormalized target densities with declared tail classes.
//! * [`kernels`] — the three proposal kernels and the shared MH acceptance
//!   rule, all in log space.
//! * [`diagnostics`] — Monte Carlo estimators and verdicts for the
//!   ergodicity conditions, plus autocorrelation and hitting-time metrics.
//! * [`runner`] — seeded chain execution, burn-in/thinning, CSV + JSON trace
//!   persistence, and summary statistics.
//!
//! The `mpcn` binary (see `src/bin/mpcn.rs`) exposes sampling, diagnostics,
//! and benchmark experiments over INI-style config files.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod kernels;
pub mod numeric;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod targets;

pub use error::{Error, Result};
pub use kernels::{
    mpcn_proposal_log_density, propose_mpcn, propose_pcn, propose_rwm, IncrementLaw, MhKernel,
    MpcnDraw, ProposalKernel, ReferenceMeasure, DEFAULT_RHO,
};
pub use rng::{sample_gamma, sample_std_normal_vector, sample_xi, GammaParams, RngStream};
pub use targets::{BuiltinFamily, TailClass, TargetDensity};
