//! Estimators, oracles and the Monte Carlo checks built on them.

mod dominance;
mod expectation;
mod normal;
mod oracle;
mod profile;

pub use dominance::{dominance_test, DominanceOutcome, MAX_DOMINANCE_N};
pub use expectation::{
    l2_expectation_test, l2_expectation_test_from, mean_stderr, tau, ExpectationReport, SIGMA_BAND,
};
pub use normal::normal_cdf;
pub use oracle::{brute_force_expectation, exact_init, exact_l2_sq, exact_tau, MAX_BRANCHES};
pub use profile::{cutoff_profile, ProfileReport};
