use std::fmt;
use std::path::Path;

use rand::Rng;

use super::metrics::Metrics;
use super::pair::sample_pair;
use crate::error::{Error, Result};

/// How the initial vector is built.
#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    /// All mass on coordinate 0: `(1, 0, ..., 0)`.
    Delta,
    /// The first `n/2` coordinates equal to `2/n`, the rest zero.
    HalfMass,
    /// Every coordinate `1/n` (already absorbed).
    Uniform,
    /// Values supplied by the caller; `source` is only used for labelling.
    Custom { source: String, values: Vec<f64> },
}

impl InitSpec {
    /// Parses `delta`, `half-mass`, `uniform` or `custom:<path>`. The custom
    /// form reads the file immediately.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "delta" => Ok(InitSpec::Delta),
            "half-mass" | "half_mass" => Ok(InitSpec::HalfMass),
            "uniform" => Ok(InitSpec::Uniform),
            other => match other.strip_prefix("custom:") {
                Some(path) => InitSpec::from_file(path),
                None => Err(Error::invalid(format!(
                    "unknown init '{other}' (expected delta, half-mass, uniform or custom:<path>)"
                ))),
            },
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Ok(InitSpec::Custom {
            source: path.display().to_string(),
            values: parse_values(&text)?,
        })
    }

    /// True for the kinds that always produce a point of the probability simplex.
    pub fn is_simplex_kind(&self) -> bool {
        !matches!(self, InitSpec::Custom { .. })
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::Delta => f.write_str("delta"),
            InitSpec::HalfMass => f.write_str("half-mass"),
            InitSpec::Uniform => f.write_str("uniform"),
            InitSpec::Custom { source, .. } => write!(f, "custom:{source}"),
        }
    }
}

/// Parses one decimal real per line. Line numbers in errors are 1-based.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .map(|(idx, line)| {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "empty line".into(),
                });
            }
            let v: f64 = trimmed.parse().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("'{trimmed}': {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("'{trimmed}' is not finite"),
                });
            }
            Ok(v)
        })
        .collect()
}

/// The chain configuration: raw (uncentered) values plus the mean fixed at
/// construction. All metrics are measured against that stored mean.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    values: Vec<f64>,
    target_mean: f64,
}

impl State {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidDimension(values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "value at index {pos} is not finite"
            )));
        }
        let target_mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(State {
            values,
            target_mean,
        })
    }

    pub fn init(n: usize, init: &InitSpec) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let values = match init {
            InitSpec::Delta => {
                let mut v = vec![0.0; n];
                v[0] = 1.0;
                v
            }
            InitSpec::HalfMass => {
                let mut v = vec![0.0; n];
                let w = 2.0 / n as f64;
                v[..n / 2].iter_mut().for_each(|x| *x = w);
                v
            }
            InitSpec::Uniform => vec![1.0 / n as f64; n],
            InitSpec::Custom { values, .. } => {
                if values.len() != n {
                    return Err(Error::invalid(format!(
                        "custom init has {} values, expected n = {n}",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        State::new(values)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    /// Nonnegative entries summing to one (within `tol`).
    pub fn is_in_simplex(&self, tol: f64) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
            && (self.values.iter().sum::<f64>() - 1.0).abs() <= tol
    }

    /// Replaces `x_i, x_j` by `θx_i + (1-θ)x_j, (1-θ)x_i + θx_j`.
    pub fn apply_average(&mut self, i: usize, j: usize, theta: f64) -> Result<()> {
        let n = self.n();
        if i == j || i >= n || j >= n {
            return Err(Error::InvalidPair(i, j));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid(format!("theta = {theta} outside (0, 1)")));
        }
        self.average_pair(i, j, theta);
        Ok(())
    }

    /// Unchecked update used by the hot loops; `i != j` is the caller's job.
    #[inline]
    pub(crate) fn average_pair(&mut self, i: usize, j: usize, theta: f64) {
        let (a, b) = (self.values[i], self.values[j]);
        if theta == 0.5 {
            // one rounding, identical bits in both slots
            let m = (a + b) * 0.5;
            self.values[i] = m;
            self.values[j] = m;
        } else {
            let rest = 1.0 - theta;
            self.values[i] = theta * a + rest * b;
            self.values[j] = rest * a + theta * b;
        }
    }

    /// One step of the chain: a uniform pair, then an average. Returns the pair.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, theta: f64, rng: &mut R) -> (usize, usize) {
        let (i, j) = sample_pair(self.n(), rng);
        self.average_pair(i, j, theta);
        (i, j)
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, theta: f64, steps: u64, rng: &mut R) {
        for _ in 0..steps {
            self.step(theta, rng);
        }
    }

    pub fn metrics(&self) -> Metrics {
        Metrics::of(&self.values, self.target_mean)
    }

    /// Σ|x_i - x̄|^p against the stored mean.
    pub fn centered_power_sum(&self, p: f64) -> f64 {
        self.values
            .iter()
            .map(|v| (v - self.target_mean).abs().powf(p))
            .sum()
    }

    /// `T = Σ|x_i - x̄|` alone, without the other metrics.
    pub fn l1_distance(&self) -> f64 {
        let m = self.target_mean;
        self.values.iter().map(|v| (v - m).abs()).sum()
    }

    /// `S = Σ(x_i - x̄)^2` alone.
    pub fn l2_sq_distance(&self) -> f64 {
        let m = self.target_mean;
        self.values.iter().map(|v| (v - m) * (v - m)).sum()
    }
}
