//! The repeated-averaging chain in discrete and Poissonized time.

mod metrics;
mod pair;
mod run;
mod state;

pub use metrics::{clamped_t_of_a, is_majorized_by, t_of_a, Metrics};
pub use pair::sample_pair;
pub use run::{
    advance_time, poisson_count, run, run_continuous, run_discrete, validate_theta, ChainParams,
    Clock, Record, TimeModel, Trajectory,
};
pub use state::{parse_values, InitSpec, State};
