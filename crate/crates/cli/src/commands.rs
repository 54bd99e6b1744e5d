use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use repavg_core::chain::{run, ChainParams, InitSpec, State, TimeModel};
use repavg_core::exact::write_termination_csv;
use repavg_core::particles::{coupled_run_with, weighted_estimate, write_weighted_csv};
use repavg_core::rng::{replicate_rng, RNG_ALGORITHM};
use repavg_core::stats::{l2_expectation_test_from, ExpectationReport};
use repavg_core::{clamped_t_of_a, cutoff_profile, run_exact, CouplingReport, Error};

use crate::args::{
    every_steps, every_time, Command, Common, CoupleArgs, ExpectArgs, ParticlesArgs, ProfileArgs,
    SimulateArgs, TerminateArgs,
};

/// How a command finished when nothing went wrong at the process level.
#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    CheckFailed(String),
}

pub fn threads(cmd: &Command) -> usize {
    common(cmd).threads
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Simulate(a) => &a.common,
        Command::Profile(a) => &a.common,
        Command::Particles(a) => &a.common,
        Command::Couple(a) => &a.common,
        Command::Terminate(a) => &a.common,
        Command::Expect(a) => &a.common,
    }
}

pub fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Profile(a) => profile(a),
        Command::Particles(a) => particles(a),
        Command::Couple(a) => couple(a),
        Command::Terminate(a) => terminate(a),
        Command::Expect(a) => expect(a),
    }
}

/// Metadata common to every output: version, subcommand and shared flags.
/// Thread count is left out so output does not depend on it.
fn base_meta(command: &str, c: &Common) -> Vec<(&'static str, String)> {
    vec![
        ("version", env!("CARGO_PKG_VERSION").to_string()),
        ("command", command.to_string()),
        ("n", c.n.to_string()),
        ("seed", c.seed.to_string()),
    ]
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn open_output(c: &Common) -> Result<Box<dyn Write>> {
    Ok(match &c.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Renders into memory first so a failing run never leaves a partial file.
fn emit(c: &Common, render: impl FnOnce(&mut Vec<u8>) -> repavg_core::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    render(&mut buf)?;
    let mut out = open_output(c)?;
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

fn parse_init(spec: &str) -> Result<InitSpec> {
    InitSpec::parse(spec).with_context(|| format!("bad --init '{spec}'"))
}

fn simulate(a: &SimulateArgs) -> Result<Outcome> {
    let c = &a.common;
    let (schedule, model): (Vec<f64>, _) = if let Some(every) = a.record_every_steps {
        let ks = every_steps(every, a.max_steps.unwrap_or(0)).map_err(anyhow::Error::msg)?;
        (
            ks.into_iter().map(|k| k as f64).collect(),
            TimeModel::Discrete,
        )
    } else if let Some(ks) = &a.record_steps {
        (ks.iter().map(|&k| k as f64).collect(), TimeModel::Discrete)
    } else if let Some(ts) = &a.record_times {
        (ts.clone(), TimeModel::Poissonized)
    } else if let Some(dt) = a.record_every_time {
        (
            every_time(dt, a.max_time.unwrap_or(0.0)).map_err(anyhow::Error::msg)?,
            TimeModel::Poissonized,
        )
    } else {
        bail!("no record schedule given");
    };
    let params = ChainParams {
        n: c.n,
        theta: a.theta,
        time_model: model,
        seed: c.seed,
        init: parse_init(&a.init)?,
    };
    let tr = run(&params, &schedule)?;
    let meta = [
        ("version", env!("CARGO_PKG_VERSION").to_string()),
        ("command", "simulate".to_string()),
    ];
    emit(c, |out| tr.write_csv(out, &meta))?;
    Ok(Outcome::Ok)
}

fn profile(a: &ProfileArgs) -> Result<Outcome> {
    let c = &a.common;
    let report = cutoff_profile(c.n, &a.a, a.replicates, c.seed)?;
    let mut meta = base_meta("profile", c);
    meta.extend([
        ("a", join(&a.a)),
        ("replicates", a.replicates.to_string()),
        ("model", "poissonized".to_string()),
        ("init", "delta".to_string()),
        ("rng", RNG_ALGORITHM.to_string()),
    ]);
    emit(c, |out| report.write_csv(out, &meta))?;
    Ok(Outcome::Ok)
}

fn particles(a: &ParticlesArgs) -> Result<Outcome> {
    let c = &a.common;
    let rows = weighted_estimate(c.n, &a.a, &a.delta, a.replicates, c.seed)?;
    let mut meta = base_meta("particles", c);
    meta.extend([
        ("h", repavg_core::h_n(c.n).to_string()),
        ("a", join(&a.a)),
        ("delta", join(&a.delta)),
        ("replicates", a.replicates.to_string()),
        ("rng", RNG_ALGORITHM.to_string()),
    ]);
    emit(c, |out| write_weighted_csv(out, &meta, &rows))?;
    Ok(Outcome::Ok)
}

fn couple(a: &CoupleArgs) -> Result<Outcome> {
    let c = &a.common;
    if a.replicates == 0 {
        bail!("--replicates must be positive");
    }
    let times: Vec<f64> = match (&a.a, &a.record_times) {
        (Some(avals), None) => avals.iter().map(|&x| clamped_t_of_a(c.n, x).0).collect(),
        (None, Some(ts)) => ts.clone(),
        _ => bail!("give exactly one of --a or --record-times"),
    };
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let runs: Vec<repavg_core::Result<CouplingReport>> = (0..a.replicates)
        .into_par_iter()
        .map(|r| coupled_run_with(c.n, t_end, &times, &mut replicate_rng(c.seed, r)))
        .collect();
    let mut reports = Vec::with_capacity(runs.len());
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok(rep) => reports.push(rep),
            Err(e @ Error::CouplingFailure { .. }) => {
                return Ok(Outcome::CheckFailed(format!("replicate {r}: {e}")));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let combined = CouplingReport::combine(&reports)?;
    let mut meta = base_meta("couple", c);
    meta.extend([
        ("times", join(&times)),
        ("replicates", a.replicates.to_string()),
        ("rng", RNG_ALGORITHM.to_string()),
    ]);
    emit(c, |out| combined.write_csv(out, &meta))?;
    if combined.max_dominance_violation > repavg_core::particles::DOMINANCE_TOLERANCE {
        return Ok(Outcome::CheckFailed(format!(
            "dominance violated by {:e}",
            combined.max_dominance_violation
        )));
    }
    Ok(Outcome::Ok)
}

fn terminate(a: &TerminateArgs) -> Result<Outcome> {
    let c = &a.common;
    if a.replicates == 0 {
        bail!("--replicates must be positive");
    }
    let reports = (0..a.replicates)
        .into_par_iter()
        .map(|r| run_exact(c.n, a.max_steps, c.seed.wrapping_add(r)))
        .collect::<repavg_core::Result<Vec<_>>>()?;
    let mut meta = base_meta("terminate", c);
    meta.extend([
        ("max_steps", a.max_steps.to_string()),
        ("replicates", a.replicates.to_string()),
        ("rng", "ChaCha8(seed_from_u64(seed+r))".to_string()),
    ]);
    emit(c, |out| write_termination_csv(out, &meta, &reports))?;
    let violations: u64 = reports
        .iter()
        .map(|r| r.invariant_violations + r.mass_violations)
        .sum();
    if violations > 0 {
        return Ok(Outcome::CheckFailed(format!(
            "{violations} invariant violations"
        )));
    }
    Ok(Outcome::Ok)
}

fn expect(a: &ExpectArgs) -> Result<Outcome> {
    let c = &a.common;
    let ks = match (&a.record_steps, a.record_every_steps) {
        (Some(ks), None) => ks.clone(),
        (None, Some(every)) => {
            every_steps(every, a.max_steps.unwrap_or(0)).map_err(anyhow::Error::msg)?
        }
        _ => bail!("give exactly one step schedule"),
    };
    let init = parse_init(&a.init)?;
    let x0 = State::init(c.n, &init)?;
    let report: ExpectationReport =
        l2_expectation_test_from(&x0, a.theta, &ks, a.replicates, c.seed)?;
    let mut meta = base_meta("expect", c);
    meta.extend([
        ("theta", a.theta.to_string()),
        ("init", init.to_string()),
        ("replicates", a.replicates.to_string()),
        ("rng", RNG_ALGORITHM.to_string()),
    ]);
    emit(c, |out| report.write_csv(out, &meta))?;
    if !report.passed() {
        let bad: Vec<u64> = (0..ks.len())
            .filter(|&i| !report.point_passes(i))
            .map(|i| ks[i])
            .collect();
        return Ok(Outcome::CheckFailed(format!(
            "ratio outside 4 stderr at k = {}",
            join(&bad)
        )));
    }
    Ok(Outcome::Ok)
}
