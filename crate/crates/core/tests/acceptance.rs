//! Acceptance suite, run as a plain binary so every criterion prints its
//! `ACn PASS|FAIL ...` line under `cargo test`. Criteria run one after
//! another, which keeps the wall-clock limits meaningful. Arguments that do
//! not start with `-` select criteria by substring, e.g. `ac3`.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;

use repavg_core::chain::{is_majorized_by, run_discrete, ChainParams, InitSpec, State};
use repavg_core::exact::{equalization_schedule, run_exact, Dyadic, DyadicState};
use repavg_core::particles::{coupled_run_with, weighted_estimate, DOMINANCE_TOLERANCE};
use repavg_core::rng::{replicate_rng, seeded};
use repavg_core::stats::{
    brute_force_expectation, cutoff_profile, exact_init, exact_l2_sq, l2_expectation_test,
    mean_stderr, normal_cdf, tau,
};
use repavg_core::{t_of_a, TimeModel};

struct Verdict {
    ok: bool,
    limit: Option<Duration>,
    detail: String,
}

fn verdict(ok: bool, limit: Option<Duration>, detail: String) -> Verdict {
    Verdict { ok, limit, detail }
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 10] = [
    (
        "AC1",
        "ac1_exact_oracle_equality",
        ac1_exact_oracle_equality,
    ),
    ("AC2", "ac2_monte_carlo_l2_decay", ac2_monte_carlo_l2_decay),
    ("AC3", "ac3_cutoff_profile", ac3_cutoff_profile),
    ("AC4", "ac4_coarse_cutoff_bounds", ac4_coarse_cutoff_bounds),
    ("AC5", "ac5_bounded_start_decay", ac5_bounded_start_decay),
    ("AC6", "ac6_coupling_dominance", ac6_coupling_dominance),
    ("AC7", "ac7_weighted_estimate", ac7_weighted_estimate),
    ("AC8", "ac8_finite_termination", ac8_finite_termination),
    ("AC9", "ac9_per_step_invariants", ac9_per_step_invariants),
    ("AC10", "ac10_determinism", ac10_determinism),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    if std::env::args().any(|a| a == "--list") {
        for (_, name, _) in CRITERIA {
            println!("{name}: test");
        }
        return ExitCode::SUCCESS;
    }
    let mut failed = Vec::new();
    let mut ran = 0;
    for (id, name, run) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let v = result.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, None, format!("panicked: {msg}"))
        });
        let in_time = v.limit.map_or(true, |l| elapsed < l);
        let pass = v.ok && in_time;
        let limit = v
            .limit
            .map_or("none".to_string(), |l| format!("{:.0}s", l.as_secs_f64()));
        println!(
            "{id} {} [{:.2}s, limit {limit}] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            v.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    println!(
        "acceptance: {} of {ran} criteria passed{}",
        ran - failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failed.join(", "))
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn ac1_exact_oracle_equality() -> Verdict {
    let half = rational(1, 2);
    let mut mismatches = Vec::new();
    for (n, max_k, tau) in [(3usize, 6u32, rational(1, 2)), (4, 5, rational(2, 3))] {
        let x0 = exact_init(n, &InitSpec::Delta).unwrap();
        let s0 = exact_l2_sq(&x0);
        assert_eq!(s0, rational(n as i64 - 1, n as i64));
        for k in 0..=max_k {
            let expected = &s0 * num_traits::pow(tau.clone(), k as usize);
            let got = brute_force_expectation(&x0, k, &half).unwrap();
            if got != expected {
                mismatches.push(format!("n={n} k={k}: {got} != {expected}"));
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        Some(Duration::from_secs(10)),
        format!(
            "E[S(k)] = tau^k S(0) exactly for n=3 (k<=6), n=4 (k<=5); mismatches: {mismatches:?}"
        ),
    )
}

fn ac2_monte_carlo_l2_decay() -> Verdict {
    let ks: Vec<u64> = (0..=10).map(|i| i * 50).collect();
    let mut lines = Vec::new();
    let mut ok = true;
    for (theta, seed) in [(0.5, 201u64), (0.25, 202)] {
        let r = l2_expectation_test(50, theta, &ks, 20_000, seed).unwrap();
        assert_eq!(r.tau, tau(50, theta));
        ok &= r.passed();
        let worst = (0..ks.len())
            .filter(|&i| r.stderr[i] > 0.0)
            .map(|i| (r.ratio[i] - 1.0).abs() / r.stderr[i])
            .fold(0.0, f64::max);
        lines.push(format!(
            "theta={theta} tau={:.6} worst |ratio-1|/se={worst:.2}",
            r.tau
        ));
    }
    verdict(
        ok,
        Some(Duration::from_secs(60)),
        format!("n=50 R=2e4 k=0..500: {}", lines.join("; ")),
    )
}

fn ac3_cutoff_profile() -> Verdict {
    let a = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let r = cutoff_profile(1 << 20, &a, 20, 301).unwrap();
    let within: Vec<bool> = r
        .mean_t
        .iter()
        .zip(&r.target)
        .map(|(m, t)| (m - t).abs() <= 0.25)
        .collect();
    let monotone = r.mean_t.windows(2).all(|w| w[1] <= w[0]);
    let detail = a
        .iter()
        .enumerate()
        .map(|(i, a)| {
            format!(
                "a={a}: mean_T={:.4}±{:.4} target={:.4}",
                r.mean_t[i], r.stderr_t[i], r.target[i]
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    verdict(
        within.iter().all(|&b| b) && monotone,
        None,
        format!("n=2^20 R=20, tolerance 0.25, monotone={monotone}: {detail}"),
    )
}

fn ac4_coarse_cutoff_bounds() -> Verdict {
    let n = 1_000_000usize;
    let ln_n = (n as f64).ln();
    let early = (0.4 * n as f64 * ln_n).floor() as u64;
    let late = (1.2 * n as f64 * ln_n).floor() as u64;
    let params = ChainParams {
        seed: 401,
        ..ChainParams::new(n, InitSpec::Delta)
    };
    let tr = run_discrete(&params, &[early, late]).unwrap();
    let (t_early, t_late) = (tr.records[0].metrics.l1, tr.records[1].metrics.l1);
    verdict(
        t_early >= 1.8 && t_late <= 0.1,
        Some(Duration::from_secs(120)),
        format!("n=1e6: T({early}) = {t_early:.4} (>= 1.8), T({late}) = {t_late:.4} (<= 0.1)"),
    )
}

fn ac5_bounded_start_decay() -> Verdict {
    let n = 100_000usize;
    let k = 10 * n as u64;
    let params = ChainParams {
        seed: 501,
        ..ChainParams::new(n, InitSpec::HalfMass)
    };
    let tr = run_discrete(&params, &[0, k]).unwrap();
    let x0 = State::init(n, &InitSpec::HalfMass).unwrap();
    let c = x0.values().iter().cloned().fold(0.0, f64::max) * n as f64;
    let bound = c.sqrt() * (-(k as f64) / (2.0 * n as f64)).exp();
    let t = tr.records[1].metrics.l1;
    verdict(
        t <= 0.05 && (c - 2.0).abs() < 1e-12,
        Some(Duration::from_secs(30)),
        format!("n=1e5 half-mass C={c}: T(10n) = {t:.6} (<= 0.05); expectation bound sqrt(C)e^(-k/2n) = {bound:.5}"),
    )
}

fn ac6_coupling_dominance() -> Verdict {
    let n = 4096;
    let t_end = t_of_a(n, 1.0);
    let times: Vec<f64> = (1..=20).map(|i| t_end * i as f64 / 20.0).collect();
    let mut failures = 0;
    let mut worst = 0.0f64;
    for seed in 0..100 {
        match coupled_run_with(n, t_end, &times, &mut replicate_rng(601, seed)) {
            Ok(r) => worst = worst.max(r.max_dominance_violation),
            Err(e) => {
                failures += 1;
                println!("seed {seed}: {e}");
            }
        }
    }
    verdict(
        failures == 0 && worst <= DOMINANCE_TOLERANCE,
        Some(Duration::from_secs(60)),
        format!("n=4096, 100 seeds, 20 times to t(1) = {t_end:.1}: failures {failures}, max violation {worst:e}"),
    )
}

fn ac7_weighted_estimate() -> Verdict {
    let rows = weighted_estimate(1 << 20, &[0.0], &[0.0], 20, 701).unwrap();
    let masses: Vec<f64> = rows.iter().map(|r| r.weighted_mass).collect();
    let (mean, se) = mean_stderr(&masses);
    let target = normal_cdf(0.0);
    verdict(
        (mean - target).abs() <= 0.15,
        Some(Duration::from_secs(120)),
        format!(
            "n=2^20 a=0 delta=0 R=20: mean weighted mass {mean:.4}±{se:.4}, target {target} ± 0.15"
        ),
    )
}

fn random_dyadic_start<R: Rng>(n: usize, rng: &mut R) -> DyadicState {
    DyadicState::new(
        (0..n)
            .map(|_| {
                Dyadic::new(
                    rng.random_range(-1_000_000i64..1_000_000),
                    rng.random_range(0..30),
                )
            })
            .collect(),
    )
    .unwrap()
}

fn ac8_finite_termination() -> Verdict {
    let four: Vec<_> = (0..100)
        .map(|s| run_exact(4, 100_000, s).unwrap())
        .collect();
    let four_absorbed = four.iter().filter(|r| r.absorbed).count();
    let four_latest = four.iter().filter_map(|r| r.absorb_step).max().unwrap_or(0);

    let three: Vec<_> = (0..100).map(|s| run_exact(3, 10_000, s).unwrap()).collect();
    let three_absorbed = three.iter().filter(|r| r.absorbed).count();
    let three_violations: u64 = three
        .iter()
        .map(|r| r.invariant_violations + r.mass_violations)
        .sum();

    let mut rng = seeded(801);
    let mut schedule_failures = 0;
    for n in [2usize, 4, 8, 16] {
        let schedule = equalization_schedule(n).unwrap();
        for _ in 0..100 {
            let mut s = random_dyadic_start(n, &mut rng);
            for &(i, j) in &schedule {
                s.apply_average(i, j).unwrap();
            }
            if !s.is_constant() {
                schedule_failures += 1;
            }
        }
    }
    // exact mass survives a full schedule
    let mut s = DyadicState::delta(16).unwrap();
    for (i, j) in equalization_schedule(16).unwrap() {
        s.apply_average(i, j).unwrap();
    }
    let sum_ok = s.sum().to_ratio() == BigRational::one() && !s.values()[0].is_zero();

    verdict(
        four_absorbed == 100 && three_absorbed == 0 && three_violations == 0 && schedule_failures == 0 && sum_ok,
        Some(Duration::from_secs(30)),
        format!(
            "n=4 absorbed {four_absorbed}/100 (latest step {four_latest}); n=3 absorbed {three_absorbed}/100, \
             violations {three_violations}; schedule failures {schedule_failures}/400"
        ),
    )
}

fn ac9_per_step_invariants() -> Verdict {
    let n = 100;
    let mut rng = seeded(901);
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut state = State::new(raw.iter().map(|v| v / total).collect()).unwrap();
    let mass0 = n as f64 * state.target_mean();
    let slack = 1e-12;
    let mut breaks = Vec::new();
    for step in 0..10_000 {
        let before = state.clone();
        let (p1, p2, p4) = (
            before.centered_power_sum(1.0),
            before.centered_power_sum(2.0),
            before.centered_power_sum(4.0),
        );
        state.step(0.5, &mut rng);
        let mass = state.values().iter().sum::<f64>();
        if (mass - mass0).abs() > 1e-9 * n as f64 {
            breaks.push(format!("mass at {step}"));
        }
        if state.centered_power_sum(1.0) > p1 + slack
            || state.centered_power_sum(2.0) > p2 + slack
            || state.centered_power_sum(4.0) > p4 + slack
        {
            breaks.push(format!("monotonicity at {step}"));
        }
        if !is_majorized_by(state.values(), before.values(), state.target_mean(), slack) {
            breaks.push(format!("majorization at {step}"));
        }
    }
    verdict(
        breaks.is_empty(),
        Some(Duration::from_secs(5)),
        format!("n=100, 1e4 steps: mass, T/S/p=4 monotone, majorization; breaks {breaks:?}"),
    )
}

fn trajectory_csv(seed: u64) -> Vec<u8> {
    let params = ChainParams {
        seed,
        time_model: TimeModel::Poissonized,
        ..ChainParams::new(500, InitSpec::Delta)
    };
    let tr = repavg_core::chain::run(&params, &[0.0, 500.0, 1500.0, 3000.0]).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf, &[]).unwrap();
    buf
}

fn aggregates_csv(threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        let mut buf = Vec::new();
        cutoff_profile(256, &[-1.0, 0.0, 1.0], 64, 1001)
            .unwrap()
            .write_csv(&mut buf, &[])
            .unwrap();
        l2_expectation_test(20, 0.25, &[0, 10, 40], 200, 1002)
            .unwrap()
            .write_csv(&mut buf, &[])
            .unwrap();
        let rows = weighted_estimate(4096, &[-1.0, 0.0], &[0.0, 0.5], 16, 1003).unwrap();
        repavg_core::particles::write_weighted_csv(&mut buf, &[], &rows).unwrap();
        buf
    })
}

fn ac10_determinism() -> Verdict {
    let same_seed = trajectory_csv(77) == trajectory_csv(77);
    let different_seed = trajectory_csv(77) != trajectory_csv(78);
    let one = aggregates_csv(1);
    let four = aggregates_csv(4);
    let threads_agree = one == four && one == aggregates_csv(1);
    verdict(
        same_seed && different_seed && threads_agree,
        Some(Duration::from_secs(60)),
        format!(
            "byte-identical trajectory CSV on repeat: {same_seed}; seed changes output: {different_seed}; \
             aggregates identical for 1 vs 4 threads: {threads_agree} ({} bytes)",
            one.len()
        ),
    )
}
