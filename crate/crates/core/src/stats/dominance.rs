use crate::chain::{sample_pair, State};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Largest `n` accepted; the test runs `n + 1` chains side by side.
pub const MAX_DOMINANCE_N: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominanceOutcome {
    /// `T` of the chain started at `x0`.
    pub lhs: f64,
    /// `Σ x0_i · T` of the chain started at `e_i`, all driven by the same pairs.
    pub rhs: f64,
    pub holds: bool,
}

/// Runs the chain from `x0` together with the `n` chains from the basis
/// vectors under one shared pair sequence for `k` steps, and compares `T`
/// with the mixture of basis-start `T` values.
pub fn dominance_test(x0: &[f64], k: u64, seed: u64) -> Result<DominanceOutcome> {
    let n = x0.len();
    if n > MAX_DOMINANCE_N {
        return Err(Error::invalid(format!("n = {n} exceeds {MAX_DOMINANCE_N}")));
    }
    let mut mixed = State::new(x0.to_vec())?;
    if !mixed.is_in_simplex(1e-9) {
        return Err(Error::invalid("x0 must be nonnegative and sum to one"));
    }
    let mut basis: Vec<State> = (0..n)
        .map(|i| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            State::new(v)
        })
        .collect::<Result<_>>()?;

    let mut rng = seeded(seed);
    for _ in 0..k {
        let (i, j) = sample_pair(n, &mut rng);
        mixed.average_pair(i, j, 0.5);
        for b in &mut basis {
            b.average_pair(i, j, 0.5);
        }
    }
    let lhs = mixed.l1_distance();
    let rhs = x0
        .iter()
        .zip(&basis)
        .map(|(w, b)| w * b.l1_distance())
        .sum::<f64>();
    Ok(DominanceOutcome {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}
