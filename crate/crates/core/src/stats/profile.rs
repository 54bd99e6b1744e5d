use std::io::Write;

use rayon::prelude::*;

use super::expectation::mean_stderr;
use super::normal::normal_cdf;
use crate::chain::{advance_time, clamped_t_of_a, InitSpec, State};
use crate::error::{Error, Result};
use crate::report::{fmt_real, write_meta};
use crate::rng::replicate_rng;

/// Mean `T'(t(a))` across replicates against the limiting profile `2Φ(-a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileReport {
    pub n: usize,
    pub a_values: Vec<f64>,
    /// Probe times `t(a)`, clamped at zero.
    pub t_values: Vec<f64>,
    /// Whether `t(a)` was negative and clamped.
    pub clamped: Vec<bool>,
    pub mean_t: Vec<f64>,
    pub stderr_t: Vec<f64>,
    pub target: Vec<f64>,
    pub replicates: u64,
}

impl ProfileReport {
    /// Mean `T` never rises by more than `slack` standard errors as `a` grows.
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.mean_t
            .windows(2)
            .zip(self.stderr_t.windows(2))
            .all(|(m, s)| {
                let noise = slack * (s[0] * s[0] + s[1] * s[1]).sqrt();
                m[1] <= m[0] + noise
            })
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, meta: &[(&str, String)]) -> Result<()> {
        write_meta(out, meta)?;
        writeln!(out, "n,a,t,mean_T,stderr_T,target,replicates")?;
        for i in 0..self.a_values.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.n,
                fmt_real(self.a_values[i]),
                fmt_real(self.t_values[i]),
                fmt_real(self.mean_t[i]),
                fmt_real(self.stderr_t[i]),
                fmt_real(self.target[i]),
                self.replicates
            )?;
        }
        Ok(())
    }
}

/// Runs the Poissonized chain from `e₁` once per replicate, reading `T'` at
/// every `t(a)` along one trajectory.
pub fn cutoff_profile(
    n: usize,
    a_values: &[f64],
    replicates: u64,
    seed: u64,
) -> Result<ProfileReport> {
    if a_values.is_empty()
        || a_values
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]).map_or(true, |o| o.is_gt()))
    {
        return Err(Error::invalid(
            "a values must be nonempty and sorted ascending",
        ));
    }
    if a_values.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid("a values must be finite"));
    }
    if replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    let x0 = State::init(n, &InitSpec::Delta)?;
    let (t_values, clamped): (Vec<f64>, Vec<bool>) =
        a_values.iter().map(|&a| clamped_t_of_a(n, a)).unzip();

    let samples: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let mut state = x0.clone();
            let mut now = 0.0;
            t_values
                .iter()
                .map(|&t| {
                    advance_time(&mut state, 0.5, t - now, &mut rng);
                    now = t;
                    state.l1_distance()
                })
                .collect()
        })
        .collect();

    let (mean_t, stderr_t) = (0..a_values.len())
        .map(|i| {
            let col: Vec<f64> = samples.iter().map(|row| row[i]).collect();
            let (m, se) = mean_stderr(&col);
            (m, if replicates < 2 { 0.0 } else { se })
        })
        .unzip();

    Ok(ProfileReport {
        n,
        a_values: a_values.to_vec(),
        t_values,
        clamped,
        mean_t,
        stderr_t,
        target: a_values.iter().map(|&a| 2.0 * normal_cdf(-a)).collect(),
        replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets() {
        let r = cutoff_profile(16, &[-2.0, 0.0, 2.0], 2, 1).unwrap();
        assert_eq!(r.target[1], 1.0);
        assert!((r.target[0] - 1.954_499_736_103_641_6).abs() < 1e-12);
        assert!((r.target[2] - 0.045_500_263_896_358_41).abs() < 1e-12);
    }

    #[test]
    fn negative_probe_times_are_clamped() {
        // n = 4: t(a) < 0 once a < -√2
        let r = cutoff_profile(4, &[-5.0, 0.0], 3, 1).unwrap();
        assert_eq!(r.clamped, vec![true, false]);
        assert_eq!(r.t_values[0], 0.0);
        assert_eq!(r.mean_t[0], 1.5);
    }

    #[test]
    fn values_bounded_and_decreasing() {
        let r = cutoff_profile(1 << 10, &[-3.0, -1.0, 0.0, 1.0, 3.0], 50, 7).unwrap();
        assert!(r.mean_t.iter().all(|&m| (0.0..=2.0).contains(&m)));
        assert!(r.is_non_increasing(2.0), "{:?}", r.mean_t);
    }

    #[test]
    fn bad_inputs() {
        assert!(cutoff_profile(16, &[], 2, 1).is_err());
        assert!(cutoff_profile(16, &[1.0, 0.0], 2, 1).is_err());
        assert!(cutoff_profile(16, &[0.0], 0, 1).is_err());
        assert!(cutoff_profile(1, &[0.0], 2, 1).is_err());
    }
}
