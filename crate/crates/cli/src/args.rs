use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use repavg_core::rng::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(
    name = "repavg",
    version,
    about = "Repeated random averaging simulations",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One chain trajectory: T, S, Hoover index, support size and max entry per record.
    Simulate(SimulateArgs),
    /// Mean T at the probe times t(a), across replicates, against 2Φ(-a).
    Profile(ProfileArgs),
    /// Weighted mass of the standalone particle model at t(a), per replicate.
    Particles(ParticlesArgs),
    /// Couple the particle model to the chain and check w ≤ x' + 1/n (exit 2 on failure).
    Couple(CoupleArgs),
    /// Exact dyadic chain from e₁: absorption and odd-numerator checks per seed.
    Terminate(TerminateArgs),
    /// Monte Carlo E[S(k)] against τ^k S(0) (exit 2 if any k is off by more than 4 stderr).
    Expect(ExpectArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Number of coordinates.
    #[arg(long, value_parser = parse_n)]
    pub n: usize,
    /// Master seed; replicate r uses stream r of it.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "REPAVG_THREADS", default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("schedule").required(true).args(["record_every_steps", "record_steps", "record_times", "record_every_time"])))]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.5, value_parser = parse_theta)]
    pub theta: f64,
    /// delta, half-mass, uniform or custom:PATH (one value per line).
    #[arg(long, default_value = "delta")]
    pub init: String,
    /// Record every N steps up to --max-steps.
    #[arg(long, requires = "max_steps")]
    pub record_every_steps: Option<u64>,
    #[arg(long, requires = "record_every_steps")]
    pub max_steps: Option<u64>,
    /// Explicit step counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub record_steps: Option<Vec<u64>>,
    /// Explicit times (Poissonized clock), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub record_times: Option<Vec<f64>>,
    /// Record every DT time units up to --max-time (Poissonized clock).
    #[arg(long, requires = "max_time")]
    pub record_every_time: Option<f64>,
    #[arg(long, requires = "record_every_time")]
    pub max_time: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub common: Common,
    /// Window offsets a, comma separated and increasing.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub a: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub replicates: u64,
}

#[derive(Debug, Args)]
pub struct ParticlesArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub a: Vec<f64>,
    /// Cutoff offsets δ ≥ 0; the cutoff is log₂n - δ√log₂n.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub replicates: u64,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("schedule").required(true).args(["a", "record_times"])))]
pub struct CoupleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Record at t(a) for these a.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub record_times: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
}

#[derive(Debug, Args)]
pub struct TerminateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: u64,
    /// Number of seeds; run r uses seed + r.
    #[arg(long, default_value_t = 100)]
    pub replicates: u64,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("schedule").required(true).args(["record_steps", "record_every_steps"])))]
pub struct ExpectArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.5, value_parser = parse_theta)]
    pub theta: f64,
    #[arg(long, default_value = "delta")]
    pub init: String,
    #[arg(long, value_delimiter = ',')]
    pub record_steps: Option<Vec<u64>>,
    #[arg(long, requires = "max_steps")]
    pub record_every_steps: Option<u64>,
    #[arg(long, requires = "record_every_steps")]
    pub max_steps: Option<u64>,
    #[arg(long, default_value_t = 20_000)]
    pub replicates: u64,
}

fn parse_theta(s: &str) -> Result<f64, String> {
    let theta: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if theta > 0.0 && theta < 1.0 {
        Ok(theta)
    } else {
        Err(format!(
            "theta must lie strictly between 0 and 1, got {theta}"
        ))
    }
}

fn parse_n(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n >= 2 {
        Ok(n)
    } else {
        Err(format!("n must be at least 2, got {n}"))
    }
}

/// `0, every, 2·every, ...` up to and including `max`.
pub fn every_steps(every: u64, max: u64) -> Result<Vec<u64>, String> {
    if every == 0 {
        return Err("--record-every-steps must be positive".into());
    }
    let mut ks: Vec<u64> = (0..=max / every).map(|i| i * every).collect();
    if ks.last() != Some(&max) {
        ks.push(max);
    }
    Ok(ks)
}

pub fn every_time(dt: f64, max: f64) -> Result<Vec<f64>, String> {
    if !(dt > 0.0 && dt.is_finite()) || !(max >= 0.0 && max.is_finite()) {
        return Err("--record-every-time must be positive and --max-time nonnegative".into());
    }
    let count = (max / dt).floor() as u64;
    let mut ts: Vec<f64> = (0..=count).map(|i| i as f64 * dt).collect();
    if ts.last().is_some_and(|&t| t < max) {
        ts.push(max);
    }
    Ok(ts)
}
