//! Repeated random averaging.
//!
//! Two uniformly chosen coordinates of a vector are replaced by their average,
//! over and over. This crate runs that chain in discrete and Poissonized time,
//! its θ-weighted variant, an exact dyadic version, and the fragmentation
//! particle model that is coupled to it, together with the estimators used to
//! check the chain's L² decay, its L¹ cutoff profile and its finite
//! termination behaviour.
//!
//! Every run is reproducible from a `u64` seed; see [`rng`].

pub mod chain;
pub mod error;
pub mod exact;
pub mod particles;
pub mod report;
pub mod rng;
pub mod stats;

pub use chain::{
    clamped_t_of_a, run_continuous, run_discrete, sample_pair, t_of_a, ChainParams, InitSpec,
    Metrics, State, TimeModel, Trajectory,
};
pub use error::{Error, Result};
pub use exact::{equalization_schedule, run_exact, Dyadic, DyadicState, TerminationReport};
pub use particles::{coupled_run, h_n, run_particles, CouplingReport, ParticleModel};
pub use stats::{
    cutoff_profile, l2_expectation_test, normal_cdf, ExpectationReport, ProfileReport,
};
