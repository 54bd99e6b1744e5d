//! Exact expectation of `S(k)` by enumerating every pair sequence.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::chain::InitSpec;
use crate::error::{Error, Result};

/// Largest number of pair sequences `C(n,2)^k` the oracle will accept.
pub const MAX_BRANCHES: u128 = 10_000_000;

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact initial vector for the built-in init kinds. Custom inits are
/// converted from their `f64` values without rounding.
pub fn exact_init(n: usize, init: &InitSpec) -> Result<Vec<BigRational>> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let n_i = n as i64;
    Ok(match init {
        InitSpec::Delta => (0..n)
            .map(|i| {
                if i == 0 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect(),
        InitSpec::HalfMass => (0..n)
            .map(|i| {
                if i < n / 2 {
                    ratio(2, n_i)
                } else {
                    BigRational::zero()
                }
            })
            .collect(),
        InitSpec::Uniform => vec![ratio(1, n_i); n],
        InitSpec::Custom { values, .. } => {
            if values.len() != n {
                return Err(Error::invalid("custom init length differs from n"));
            }
            values
                .iter()
                .map(|&v| {
                    BigRational::from_float(v).ok_or_else(|| Error::invalid("non-finite value"))
                })
                .collect::<Result<_>>()?
        }
    })
}

/// `Σ (x_i - mean)^2` in exact arithmetic.
pub fn exact_l2_sq(x: &[BigRational]) -> BigRational {
    let n = BigRational::from_integer(BigInt::from(x.len()));
    let mean = x.iter().fold(BigRational::zero(), |acc, v| acc + v) / n;
    x.iter().fold(BigRational::zero(), |acc, v| {
        let d = v - &mean;
        acc + &d * &d
    })
}

/// `1 - 4θ(1-θ)/(n-1)` exactly.
pub fn exact_tau(n: usize, theta: &BigRational) -> BigRational {
    let one = BigRational::one();
    let four = BigRational::from_integer(BigInt::from(4));
    let nm1 = BigRational::from_integer(BigInt::from(n as i64 - 1));
    &one - four * theta * (&one - theta) / nm1
}

/// `E[S(k)]` for the θ-averaging chain from `x0`, as an exact rational.
///
/// Walks all `C(n,2)^k` equally likely pair sequences level by level,
/// merging identical intermediate vectors with their path counts.
pub fn brute_force_expectation(
    x0: &[BigRational],
    k: u32,
    theta: &BigRational,
) -> Result<BigRational> {
    let n = x0.len();
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    if !(theta > &BigRational::zero() && theta < &BigRational::one()) {
        return Err(Error::invalid("theta outside (0, 1)"));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let branches = (pairs.len() as u128).checked_pow(k);
    if branches.map_or(true, |b| b > MAX_BRANCHES) {
        return Err(Error::ResourceLimit(format!(
            "{} pairs to the power {k} exceeds {MAX_BRANCHES} branches",
            pairs.len()
        )));
    }
    let rest = BigRational::one() - theta;

    let mut level: HashMap<Vec<BigRational>, u64> = HashMap::from([(x0.to_vec(), 1)]);
    for _ in 0..k {
        let mut next: HashMap<Vec<BigRational>, u64> =
            HashMap::with_capacity(level.len() * pairs.len());
        for (x, count) in &level {
            for &(i, j) in &pairs {
                let mut y = x.clone();
                y[i] = theta * &x[i] + &rest * &x[j];
                y[j] = &rest * &x[i] + theta * &x[j];
                *next.entry(y).or_insert(0) += count;
            }
        }
        level = next;
    }

    let total = level.iter().fold(BigRational::zero(), |acc, (x, &count)| {
        acc + exact_l2_sq(x) * BigInt::from(count)
    });
    let paths = BigInt::from(pairs.len()).pow(k);
    Ok(total / BigRational::from_integer(paths))
}
