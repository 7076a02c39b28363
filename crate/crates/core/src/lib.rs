//! Simulation and analysis of a lossy N-pass interaction-free measurement
//! ("invisible tripwire").
//!
//! A horizontally polarized photon is rotated towards V a little on every
//! pass, loses part of its V amplitude to a tunable beam splitter and, if an
//! object blocks the V arm, has its V amplitude removed entirely. Tuning the
//! controlled loss to the transmission minimum (the partial Zeno point) makes
//! the object show up as a jump in transmission while rarely striking it.
//!
//! Modules:
//! - [`state_evolution`]: pass-by-pass photon amplitudes and probabilities.
//! - [`simple_mzi`]: the single-pass Mach-Zehnder baseline.
//! - [`hypothesis_stats`]: Chernoff bound/distance, two-outcome closed form,
//!   visibility distance and maximum-likelihood decisions.
//! - [`zeno_optimizer`]: operating-point search and distance sweeps.
//! - [`monte_carlo`]: event-level trial and campaign simulation with noise
//!   and feedback.
//! - [`cli`]: the `tripwire` command-line front end.

pub mod cli;
pub mod error;
pub mod hypothesis_stats;
pub mod minimize;
pub mod monte_carlo;
pub mod simple_mzi;
pub mod state_evolution;
pub mod zeno_optimizer;

pub use error::{Error, Result};
pub use hypothesis_stats::{Outcome, OutcomeDistribution, TrialScaling, TwoOutcomeModel};
pub use state_evolution::{Hypothesis, PassConfig, PhotonState, Polarization};
pub use zeno_optimizer::{DistanceReport, OperatingPoint};
