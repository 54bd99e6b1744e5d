//! Exact dyadic dynamics for the plain (θ = 1/2) chain.
//!
//! Started from `e₁`, every coordinate stays a dyadic rational `m/2^l` with
//! `m` odd or zero. A vector with all entries `1/n` therefore exists in the
//! orbit only when `n` is a power of two, and then it is reached almost surely.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::chain::sample_pair;
use crate::error::{Error, Result};
use crate::report::write_meta;
use crate::rng::seeded;

/// Default cap on the denominator exponent of any coordinate.
pub const DEFAULT_EXP_CAP: u64 = 1_000_000;

/// `num / 2^exp` in lowest terms: `num` is odd unless `exp == 0`, and zero is
/// stored as `0 / 2^0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u64,
}

impl Dyadic {
    /// Builds and reduces `num / 2^exp`.
    pub fn new(num: impl Into<BigInt>, exp: u64) -> Dyadic {
        let mut num = num.into();
        let mut exp = exp;
        match num.trailing_zeros() {
            None => exp = 0,
            Some(tz) => {
                let shift = tz.min(exp);
                num >>= shift;
                exp -= shift;
            }
        }
        Dyadic { num, exp }
    }

    /// Accepts only parts that are already in lowest terms.
    pub fn from_parts(num: impl Into<BigInt>, exp: u64) -> Result<Dyadic> {
        let num = num.into();
        let reduced = if num.is_zero() {
            exp == 0
        } else {
            exp == 0 || num.is_odd()
        };
        if reduced {
            Ok(Dyadic { num, exp })
        } else {
            Err(Error::invalid(format!(
                "{num}/2^{exp} is not in lowest terms"
            )))
        }
    }

    pub fn zero() -> Dyadic {
        Dyadic {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Dyadic {
        Dyadic {
            num: BigInt::one(),
            exp: 0,
        }
    }

    pub fn num(&self) -> &BigInt {
        &self.num
    }

    pub fn exp(&self) -> u64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Exact `(self + other) / 2`.
    pub fn average(&self, other: &Dyadic) -> Dyadic {
        let sum = self + other;
        Dyadic::new(sum.num, sum.exp + 1)
    }

    pub fn to_ratio(&self) -> BigRational {
        BigRational::new(self.num.clone(), BigInt::one() << self.exp)
    }

    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.to_ratio().to_f64().unwrap_or(f64::NAN)
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, other: &Dyadic) -> Dyadic {
        let exp = self.exp.max(other.exp);
        let num = (&self.num << (exp - self.exp)) + (&other.num << (exp - other.exp));
        Dyadic::new(num, exp)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let exp = self.exp.max(other.exp);
        (&self.num << (exp - self.exp)).cmp(&(&other.num << (exp - other.exp)))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicState {
    values: Vec<Dyadic>,
}

impl DyadicState {
    pub fn new(values: Vec<Dyadic>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidDimension(values.len()));
        }
        Ok(DyadicState { values })
    }

    /// `e₁` in dimension `n`.
    pub fn delta(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let mut values = vec![Dyadic::zero(); n];
        values[0] = Dyadic::one();
        Ok(DyadicState { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Dyadic] {
        &self.values
    }

    /// Averages coordinates `i` and `j` exactly.
    pub fn apply_average(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j || i >= self.n() || j >= self.n() {
            return Err(Error::InvalidPair(i, j));
        }
        let m = self.values[i].average(&self.values[j]);
        self.values[j] = m.clone();
        self.values[i] = m;
        Ok(())
    }

    pub fn sum(&self) -> Dyadic {
        self.values.iter().fold(Dyadic::zero(), |acc, v| &acc + v)
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub fn max_exp(&self) -> u64 {
        self.values.iter().map(Dyadic::exp).max().unwrap_or(0)
    }
}

/// True iff every entry has an odd or zero numerator in lowest terms and lies
/// in `[0, 1]`.
pub fn check_odd_invariant(state: &DyadicState) -> bool {
    state.values.iter().all(|v| {
        let odd_or_zero = v.num.is_zero() || v.num.is_odd();
        let in_unit = !v.num.is_negative() && v.num <= (BigInt::one() << v.exp);
        odd_or_zero && in_unit
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminationReport {
    pub n: usize,
    pub seed: u64,
    pub absorbed: bool,
    /// Step after which every coordinate equals `1/n`.
    pub absorb_step: Option<u64>,
    /// Steps after which the odd-numerator invariant failed.
    pub invariant_violations: u64,
    /// Steps after which the total mass differed from one.
    pub mass_violations: u64,
    pub steps_run: u64,
    pub max_exp: u64,
}

/// Exact θ = 1/2 chain from `e₁` with uniformly random pairs, stopping at
/// absorption or after `max_steps`.
pub fn run_exact(n: usize, max_steps: u64, seed: u64) -> Result<TerminationReport> {
    run_exact_with_cap(n, max_steps, seed, DEFAULT_EXP_CAP)
}

pub fn run_exact_with_cap(
    n: usize,
    max_steps: u64,
    seed: u64,
    exp_cap: u64,
) -> Result<TerminationReport> {
    if max_steps == 0 {
        return Err(Error::invalid("max_steps must be at least 1"));
    }
    let mut state = DyadicState::delta(n)?;
    let mut rng = seeded(seed);
    let one = Dyadic::one();
    let mut report = TerminationReport {
        n,
        seed,
        absorbed: false,
        absorb_step: None,
        invariant_violations: 0,
        mass_violations: 0,
        steps_run: 0,
        max_exp: 0,
    };
    for step in 1..=max_steps {
        let (i, j) = sample_pair(n, &mut rng);
        state.apply_average(i, j)?;
        report.steps_run = step;
        let exp = state.values[i].exp();
        report.max_exp = report.max_exp.max(exp);
        if exp > exp_cap {
            return Err(Error::ResourceLimit(format!(
                "denominator exponent {exp} exceeds cap {exp_cap} at step {step}"
            )));
        }
        if !check_odd_invariant(&state) {
            report.invariant_violations += 1;
        }
        if state.sum() != one {
            report.mass_violations += 1;
        }
        if state.is_constant() {
            report.absorbed = true;
            report.absorb_step = Some(step);
            break;
        }
    }
    Ok(report)
}

/// Fixed pair schedule that makes any vector of length `n = 2^m` constant:
/// at level `l = 1..=m`, inside each block of `2^l` coordinates, position `r`
/// of the lower half is averaged with position `r` of the upper half.
pub fn equalization_schedule(n: usize) -> Result<Vec<(usize, usize)>> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "n = {n} is not a power of two >= 2"
        )));
    }
    let mut pairs = Vec::with_capacity(n * n.trailing_zeros() as usize / 2);
    let mut block = 2;
    while block <= n {
        let half = block / 2;
        for start in (0..n).step_by(block) {
            for r in 0..half {
                pairs.push((start + r, start + half + r));
            }
        }
        block *= 2;
    }
    Ok(pairs)
}

pub fn write_termination_csv<W: Write>(
    out: &mut W,
    meta: &[(&str, String)],
    reports: &[TerminationReport],
) -> Result<()> {
    write_meta(out, meta)?;
    writeln!(out, "n,seed,absorbed,absorb_step,invariant_violations")?;
    for r in reports {
        let step = r.absorb_step.map(|s| s.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n, r.seed, r.absorbed, step, r.invariant_violations
        )?;
    }
    Ok(())
}
