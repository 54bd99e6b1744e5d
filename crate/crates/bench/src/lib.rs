//! Fixtures shared by the benchmarks.

use repavg_core::{InitSpec, State};

pub fn delta_state(n: usize) -> State {
    State::init(n, &InitSpec::Delta).expect("n >= 2")
}
