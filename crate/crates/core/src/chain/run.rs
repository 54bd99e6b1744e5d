use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::metrics::Metrics;
use super::state::{InitSpec, State};
use crate::error::{Error, Result};
use crate::report::{fmt_real, write_meta};
use crate::rng::{seeded, RNG_ALGORITHM};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeModel {
    Discrete,
    Poissonized,
}

impl fmt::Display for TimeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeModel::Discrete => "discrete",
            TimeModel::Poissonized => "poissonized",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainParams {
    pub n: usize,
    /// Weight kept by the first coordinate of the pair; `1/2` is plain averaging.
    pub theta: f64,
    pub time_model: TimeModel,
    pub seed: u64,
    pub init: InitSpec,
}

impl ChainParams {
    pub fn new(n: usize, init: InitSpec) -> Self {
        ChainParams {
            n,
            theta: 0.5,
            time_model: TimeModel::Discrete,
            seed: crate::rng::DEFAULT_SEED,
            init,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidDimension(self.n));
        }
        validate_theta(self.theta)
    }

    /// The `# params:` metadata pairs, in output order.
    pub fn meta(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n", self.n.to_string()),
            ("theta", self.theta.to_string()),
            ("model", self.time_model.to_string()),
            ("seed", self.seed.to_string()),
            ("init", self.init.to_string()),
            ("rng", RNG_ALGORITHM.to_string()),
        ]
    }
}

pub fn validate_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("theta = {theta} outside (0, 1)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Clock {
    Step(u64),
    Time(f64),
}

impl fmt::Display for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clock::Step(k) => write!(f, "{k}"),
            Clock::Time(t) => f.write_str(&fmt_real(*t)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub clock: Clock,
    /// Averaging events performed so far (equals the step for discrete runs).
    pub events: u64,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub params: ChainParams,
    pub records: Vec<Record>,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, out: &mut W, extra_meta: &[(&str, String)]) -> Result<()> {
        let mut meta = self.params.meta();
        meta.extend(extra_meta.iter().map(|(k, v)| (*k, v.clone())));
        write_meta(out, &meta)?;
        writeln!(out, "k_or_t,T,S,hoover,nonzero,max_entry")?;
        for r in &self.records {
            let m = &r.metrics;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.clock,
                fmt_real(m.l1),
                fmt_real(m.l2_sq),
                fmt_real(m.hoover),
                m.nonzero_count,
                fmt_real(m.max_entry)
            )?;
        }
        Ok(())
    }
}

/// Number of rate-1 clock rings in an interval of length `dt`.
pub fn poisson_count<R: Rng + ?Sized>(dt: f64, rng: &mut R) -> u64 {
    if dt <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite rates.
    let dist = Poisson::new(dt).expect("finite positive rate");
    dist.sample(rng) as u64
}

/// Advances the Poissonized chain by `dt` time units; returns the number of events.
pub fn advance_time<R: Rng + ?Sized>(state: &mut State, theta: f64, dt: f64, rng: &mut R) -> u64 {
    let events = poisson_count(dt, rng);
    state.advance(theta, events, rng);
    events
}

fn check_sorted<T: PartialOrd + Copy>(xs: &[T], zero: T, what: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    if xs[0] < zero {
        return Err(Error::invalid(format!("{what} contains negative entries")));
    }
    if xs
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]).map_or(true, |o| o.is_gt()))
    {
        return Err(Error::invalid(format!("{what} must be sorted ascending")));
    }
    Ok(())
}

/// Runs `max(record_ks)` steps of the discrete chain, recording metrics at
/// every requested step. Repeated entries are recorded once.
pub fn run_discrete(params: &ChainParams, record_ks: &[u64]) -> Result<Trajectory> {
    params.validate()?;
    check_sorted(record_ks, 0, "record_ks")?;
    let mut state = State::init(params.n, &params.init)?;
    let mut rng = seeded(params.seed);
    let mut records = Vec::with_capacity(record_ks.len());
    let mut k = 0u64;
    for &target in record_ks {
        if records
            .last()
            .is_some_and(|r: &Record| r.clock == Clock::Step(target))
        {
            continue;
        }
        state.advance(params.theta, target - k, &mut rng);
        k = target;
        records.push(Record {
            clock: Clock::Step(k),
            events: k,
            metrics: state.metrics(),
        });
    }
    Ok(Trajectory {
        params: params.clone(),
        records,
    })
}

/// Runs the Poissonized chain: over each interval between consecutive record
/// times a Poisson number of steps is performed.
pub fn run_continuous(params: &ChainParams, record_ts: &[f64]) -> Result<Trajectory> {
    params.validate()?;
    if record_ts.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("record_ts contains non-finite entries"));
    }
    check_sorted(record_ts, 0.0, "record_ts")?;
    let mut state = State::init(params.n, &params.init)?;
    let mut rng = seeded(params.seed);
    let mut records = Vec::with_capacity(record_ts.len());
    let mut now = 0.0;
    let mut events = 0u64;
    for &t in record_ts {
        if records
            .last()
            .is_some_and(|r: &Record| r.clock == Clock::Time(t))
        {
            continue;
        }
        events += advance_time(&mut state, params.theta, t - now, &mut rng);
        now = t;
        records.push(Record {
            clock: Clock::Time(t),
            events,
            metrics: state.metrics(),
        });
    }
    let mut params = params.clone();
    params.time_model = TimeModel::Poissonized;
    Ok(Trajectory { params, records })
}

/// Dispatches on `params.time_model`; `schedule` holds steps (discrete) or
/// times (Poissonized).
pub fn run(params: &ChainParams, schedule: &[f64]) -> Result<Trajectory> {
    match params.time_model {
        TimeModel::Poissonized => run_continuous(params, schedule),
        TimeModel::Discrete => {
            if schedule.iter().any(|k| *k < 0.0 || k.fract() != 0.0) {
                return Err(Error::invalid(
                    "discrete schedule needs nonnegative integer steps",
                ));
            }
            let ks: Vec<u64> = schedule.iter().map(|&k| k as u64).collect();
            run_discrete(params, &ks)
        }
    }
}
