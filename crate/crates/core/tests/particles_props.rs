use proptest::prelude::*;
use rayon::prelude::*;

use repavg_core::particles::{coupled_run, run_particles, run_particles_with, ParticleModel};
use repavg_core::rng::replicate_rng;
use repavg_core::stats::mean_stderr;
use repavg_core::{h_n, t_of_a};

fn check_model(model: &ParticleModel) -> Result<(), TestCaseError> {
    let total = 1u64 << model.h();
    prop_assert_eq!(model.alive_particles() + model.graveyard_particles(), total);
    for p in model.piles() {
        prop_assert!(p.size.is_power_of_two());
        prop_assert!(p.alpha <= model.h());
        prop_assert_eq!(p.size, 1u64 << (model.h() - p.alpha));
        prop_assert_eq!(model.weight(p.site), (-(p.alpha as f64)).exp2());
    }
    prop_assert!(model.check_invariants().is_ok());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_events_keep_invariants(
        n in 2usize..300,
        pairs in prop::collection::vec((any::<u32>(), any::<u32>()), 1..400),
        cutoff in 0.0f64..12.0,
    ) {
        let mut model = ParticleModel::new(n).unwrap();
        let mut last_mass = model.weighted_mass(cutoff);
        let mut last_sum = model.sum_w();
        for (a, b) in pairs {
            let i = a as usize % n;
            let j = b as usize % n;
            if i == j {
                prop_assert!(model.event(i, j).is_err());
                continue;
            }
            model.event(i, j).unwrap();
            check_model(&model)?;
            let mass = model.weighted_mass(cutoff);
            prop_assert!(mass <= last_mass + 1e-15);
            prop_assert!(model.sum_w() <= last_sum + 1e-15);
            last_mass = mass;
            last_sum = model.sum_w();
        }
    }
}

#[test]
fn thinned_stream_matches_full_stream() {
    let n = 4096;
    let t = t_of_a(n, 0.0);
    let reps = 200u64;
    let thinned: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| run_particles_with(n, t, &[t], &mut replicate_rng(11, r)).unwrap()[0].sum_w())
        .collect();
    let full: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| coupled_run(n, t, 10_000 + r, &[t]).unwrap().sum_w[0])
        .collect();
    let (m1, s1) = mean_stderr(&thinned);
    let (m2, s2) = mean_stderr(&full);
    let se = (s1 * s1 + s2 * s2).sqrt();
    println!("thinned {m1:.4}±{s1:.4}, full {m2:.4}±{s2:.4}");
    assert!(
        (m1 - m2).abs() <= 4.0 * se,
        "thinned {m1} vs full {m2}, se {se}"
    );
}

/// P(X = k) for X ~ Poisson(lambda), k = 0..=h.
fn poisson_head(lambda: f64, h: u32) -> Vec<f64> {
    let mut p = vec![(-lambda).exp()];
    for k in 1..=h {
        p.push(p[k as usize - 1] * lambda / k as f64);
    }
    p
}

#[test]
fn surviving_alpha_follows_truncated_touch_count() {
    // Survivors carry alpha <= H, so the mean is that of the touch count
    // Poisson(2t/n) conditioned on staying at or below H.
    let n = 1024;
    let h = h_n(n);
    let t = t_of_a(n, 0.0);
    let means: Vec<f64> = (0..200u64)
        .into_par_iter()
        .filter_map(|r| run_particles(n, t, 500 + r, &[t]).unwrap()[0].mean_alive_alpha())
        .collect();
    let (mean, se) = mean_stderr(&means);
    let head = poisson_head(2.0 * t / n as f64, h);
    let expected = head
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * p)
        .sum::<f64>()
        / head.iter().sum::<f64>();
    println!("mean alive alpha {mean:.3}±{se:.3}, truncated Poisson {expected:.3}, H={h}");
    assert!(means.len() > 150);
    assert!((mean - expected).abs() <= 1.0);
    assert!(means.iter().all(|&m| m <= h as f64));
}

#[test]
fn little_is_discarded_well_before_cutoff() {
    let n = 1 << 20;
    let t = t_of_a(n, -3.0);
    let fractions: Vec<f64> = (0..5u64)
        .into_par_iter()
        .map(|r| coupled_run(n, t, 900 + r, &[t]).unwrap().discarded_fraction[0])
        .collect();
    println!("discarded fraction at t(-3): {fractions:?}");
    assert!(fractions.iter().all(|&f| f <= 0.2));
}

#[test]
fn coupling_holds_across_seeds() {
    let n = 4096;
    let t_end = t_of_a(n, 1.0);
    let times: Vec<f64> = (0..=10).map(|i| t_end * i as f64 / 10.0).collect();
    (0..100u64).into_par_iter().for_each(|seed| {
        let r = coupled_run(n, t_end, seed, &times).unwrap();
        assert!(r.max_dominance_violation <= 1e-12);
        assert!(r.sum_w.windows(2).all(|w| w[1] <= w[0]));
        assert!(r
            .beta_discard_fraction
            .iter()
            .zip(&r.discarded_fraction)
            .all(|(b, d)| b <= d));
    });
}

#[test]
fn standalone_runs_are_reproducible() {
    let t = t_of_a(2048, 0.5);
    let a = run_particles(2048, t, 3, &[0.0, t / 2.0, t]).unwrap();
    let b = run_particles(2048, t, 3, &[0.0, t / 2.0, t]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].sum_w(), 1.0);
}
