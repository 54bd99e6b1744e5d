use std::io::Write;

use rayon::prelude::*;

use crate::chain::{validate_theta, InitSpec, State};
use crate::error::{Error, Result};
use crate::report::{fmt_real, write_meta};
use crate::rng::replicate_rng;

/// Standard errors allowed between a Monte Carlo mean and its target.
pub const SIGMA_BAND: f64 = 4.0;

/// Per-step contraction of `E[S]`: `1 - 4θ(1-θ)/(n-1)`.
pub fn tau(n: usize, theta: f64) -> f64 {
    1.0 - 4.0 * theta * (1.0 - theta) / (n as f64 - 1.0)
}

/// Sample mean and standard error of the mean. Sums are taken around the
/// first sample, so a constant column gives its value back exactly.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let Some(&shift) = xs.first() else {
        return (f64::NAN, f64::NAN);
    };
    let r = xs.len() as f64;
    let offset = xs.iter().map(|x| x - shift).sum::<f64>() / r;
    let mean = shift + offset;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - shift - offset).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationReport {
    pub n: usize,
    pub theta: f64,
    pub ks: Vec<u64>,
    /// `mean S(k) / (τ^k S(0))`.
    pub ratio: Vec<f64>,
    pub stderr: Vec<f64>,
    pub tau: f64,
    pub replicates: u64,
}

impl ExpectationReport {
    pub fn point_passes(&self, idx: usize) -> bool {
        (self.ratio[idx] - 1.0).abs() <= SIGMA_BAND * self.stderr[idx]
    }

    pub fn passed(&self) -> bool {
        (0..self.ks.len()).all(|i| self.point_passes(i))
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, meta: &[(&str, String)]) -> Result<()> {
        write_meta(out, meta)?;
        writeln!(out, "n,theta,k,ratio,stderr,tau")?;
        for i in 0..self.ks.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                self.n,
                fmt_real(self.theta),
                self.ks[i],
                fmt_real(self.ratio[i]),
                fmt_real(self.stderr[i]),
                fmt_real(self.tau)
            )?;
        }
        Ok(())
    }
}

/// Monte Carlo check of `E[S(k)] = τ^k S(0)` from `e₁`.
pub fn l2_expectation_test(
    n: usize,
    theta: f64,
    ks: &[u64],
    replicates: u64,
    seed: u64,
) -> Result<ExpectationReport> {
    let x0 = State::init(n, &InitSpec::Delta)?;
    l2_expectation_test_from(&x0, theta, ks, replicates, seed)
}

pub fn l2_expectation_test_from(
    x0: &State,
    theta: f64,
    ks: &[u64],
    replicates: u64,
    seed: u64,
) -> Result<ExpectationReport> {
    validate_theta(theta)?;
    if replicates < 2 {
        return Err(Error::invalid("need at least two replicates"));
    }
    if ks.is_empty() || ks.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("k list must be nonempty and sorted"));
    }
    let n = x0.n();
    let tau = tau(n, theta);
    let s0 = x0.l2_sq_distance();

    let samples: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let mut state = x0.clone();
            let mut k_now = 0;
            ks.iter()
                .map(|&k| {
                    state.advance(theta, k - k_now, &mut rng);
                    k_now = k;
                    state.l2_sq_distance()
                })
                .collect()
        })
        .collect();

    let mut ratio = Vec::with_capacity(ks.len());
    let mut stderr = Vec::with_capacity(ks.len());
    for (idx, &k) in ks.iter().enumerate() {
        let column: Vec<f64> = samples.iter().map(|row| row[idx]).collect();
        let scale = tau.powi(k as i32) * s0;
        if scale == 0.0 {
            // τ = 0 (n = 2, θ = 1/2) or an absorbed start: the identity holds
            // exactly when every sample is zero.
            let all_zero = column.iter().all(|&s| s == 0.0);
            ratio.push(if all_zero { 1.0 } else { f64::INFINITY });
            stderr.push(0.0);
        } else {
            let (m, se) = mean_stderr(&column);
            ratio.push(m / scale);
            stderr.push(se / scale);
        }
    }
    Ok(ExpectationReport {
        n,
        theta,
        ks: ks.to_vec(),
        ratio,
        stderr,
        tau,
        replicates,
    })
}
