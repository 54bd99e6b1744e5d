//! Fragmentation model coupled to the Poissonized chain.
//!
//! `2^H` unit particles start in one pile on site 0. A pile paired with an
//! empty site splits in half and both halves take one more averaging count
//! (`alpha`). Size-one piles paired with an empty site, and any two occupied
//! sites paired together, are sent to the graveyard. While alive, a pile on
//! site `i` carries weight `w_i = size / 2^H = 2^-alpha`, and under the shared
//! clock `w_i <= x'_i + 1/n` at all times.
//!
//! Piles are the unit of state. All particles of a pile have been together
//! since time zero (piles never merge), so they share one `alpha`, and the
//! random choice of which half moves on a split never affects any statistic
//! here. Particle identities are therefore not tracked.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::chain::{poisson_count, sample_pair, t_of_a, InitSpec, State};
use crate::error::{Error, Result};
use crate::report::{fmt_real, write_meta};
use crate::rng::{replicate_rng, seeded};
use crate::stats::normal_cdf;

/// Slack allowed in `w_i <= x'_i + 1/n` for floating-point rounding in the chain.
pub const DOMINANCE_TOLERANCE: f64 = 1e-12;

const EMPTY: u32 = u32::MAX;

/// `⌊log₂n - (log₂n)^{1/3}⌋`, floored at zero.
pub fn h_n(n: usize) -> u32 {
    assert!(n >= 2, "h_n needs n >= 2");
    let lg = (n as f64).log2();
    // h <= lg - lg^{1/3}  <=>  (lg - h)^3 >= lg; exact for powers of two
    let fits = |h: f64| (lg - h).powi(3) >= lg;
    let mut h = (lg - lg.cbrt()).floor().max(0.0);
    while fits(h + 1.0) {
        h += 1.0;
    }
    while h > 0.0 && !fits(h) {
        h -= 1.0;
    }
    h as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pile {
    pub site: usize,
    pub size: u64,
    pub alpha: u32,
}

/// Particles sent to the graveyard, keyed by the `alpha` counter they carried.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiscardHistogram {
    /// Discarded because a further split would drop below weight `2^-H`;
    /// keyed by the incremented counter `H + 1`.
    pub alpha: BTreeMap<u32, u64>,
    /// Discarded in a collision of two occupied sites.
    pub beta: BTreeMap<u32, u64>,
}

impl DiscardHistogram {
    pub fn alpha_total(&self) -> u64 {
        self.alpha.values().sum()
    }

    pub fn beta_total(&self) -> u64 {
        self.beta.values().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// Neither site held particles.
    Idle,
    Split,
    /// A size-one pile met an empty site.
    SingletonDiscard,
    /// Both sites were occupied.
    CollisionDiscard,
}

#[derive(Clone, Debug)]
pub struct ParticleModel {
    n: usize,
    h: u32,
    piles: Vec<Pile>,
    /// Index into `piles` for each site, or `EMPTY`.
    slot: Vec<u32>,
    graveyard: u64,
    discards: DiscardHistogram,
}

impl ParticleModel {
    /// One pile of `2^H` particles on site 0.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        if n >= EMPTY as usize {
            return Err(Error::invalid(format!(
                "n = {n} too large for the site index"
            )));
        }
        let h = h_n(n);
        let mut slot = vec![EMPTY; n];
        slot[0] = 0;
        Ok(ParticleModel {
            n,
            h,
            piles: vec![Pile {
                site: 0,
                size: 1u64 << h,
                alpha: 0,
            }],
            slot,
            graveyard: 0,
            discards: DiscardHistogram::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn total_particles(&self) -> u64 {
        1u64 << self.h
    }

    pub fn piles(&self) -> &[Pile] {
        &self.piles
    }

    pub fn pile_at(&self, site: usize) -> Option<&Pile> {
        match self.slot[site] {
            EMPTY => None,
            idx => Some(&self.piles[idx as usize]),
        }
    }

    /// `w_i = |P_i| / 2^H`.
    pub fn weight(&self, site: usize) -> f64 {
        self.pile_at(site)
            .map_or(0.0, |p| p.size as f64 / self.total_particles() as f64)
    }

    pub fn graveyard_particles(&self) -> u64 {
        self.graveyard
    }

    pub fn discards(&self) -> &DiscardHistogram {
        &self.discards
    }

    pub fn alive_particles(&self) -> u64 {
        self.total_particles() - self.graveyard
    }

    /// `Σ w_i`.
    pub fn sum_w(&self) -> f64 {
        self.alive_particles() as f64 / self.total_particles() as f64
    }

    pub fn discarded_fraction(&self) -> f64 {
        self.graveyard as f64 / self.total_particles() as f64
    }

    pub fn beta_discard_fraction(&self) -> f64 {
        self.discards.beta_total() as f64 / self.total_particles() as f64
    }

    /// `Σ_i w_i·1[p_i <= cutoff]`, where `w_i = 2^-p_i` for occupied sites.
    pub fn weighted_mass(&self, alpha_cutoff: f64) -> f64 {
        let hit: u64 = self
            .piles
            .iter()
            .filter(|p| p.alpha as f64 <= alpha_cutoff && p.alpha <= self.h)
            .map(|p| p.size)
            .sum();
        hit as f64 / self.total_particles() as f64
    }

    fn push_pile(&mut self, pile: Pile) {
        debug_assert_eq!(self.slot[pile.site], EMPTY);
        self.slot[pile.site] = self.piles.len() as u32;
        self.piles.push(pile);
    }

    fn take_pile(&mut self, site: usize) -> Pile {
        let idx = self.slot[site] as usize;
        let pile = self.piles.swap_remove(idx);
        self.slot[site] = EMPTY;
        if let Some(moved) = self.piles.get(idx) {
            self.slot[moved.site] = idx as u32;
        }
        pile
    }

    fn bury(&mut self, pile: Pile, collision: bool) {
        self.graveyard += pile.size;
        let (hist, key) = if collision {
            (&mut self.discards.beta, pile.alpha)
        } else {
            (&mut self.discards.alpha, pile.alpha + 1)
        };
        *hist.entry(key).or_insert(0) += pile.size;
    }

    /// Applies the clock ring for pair `(i, j)`.
    pub fn event(&mut self, i: usize, j: usize) -> Result<EventKind> {
        if i == j || i >= self.n || j >= self.n {
            return Err(Error::InvalidPair(i, j));
        }
        Ok(self.event_unchecked(i, j))
    }

    pub(crate) fn event_unchecked(&mut self, i: usize, j: usize) -> EventKind {
        let (occ_i, occ_j) = (self.slot[i] != EMPTY, self.slot[j] != EMPTY);
        match (occ_i, occ_j) {
            (false, false) => EventKind::Idle,
            (true, true) => {
                let a = self.take_pile(i);
                let b = self.take_pile(j);
                self.bury(a, true);
                self.bury(b, true);
                EventKind::CollisionDiscard
            }
            (true, false) | (false, true) => {
                let (from, to) = if occ_i { (i, j) } else { (j, i) };
                let pile = self.take_pile(from);
                let child_alpha = pile.alpha + 1;
                if pile.size == 1 || child_alpha > self.h {
                    self.bury(pile, false);
                    return EventKind::SingletonDiscard;
                }
                let size = pile.size / 2;
                for site in [from, to] {
                    self.push_pile(Pile {
                        site,
                        size,
                        alpha: child_alpha,
                    });
                }
                EventKind::Split
            }
        }
    }

    /// Verifies conservation, power-of-two sizes, `size = 2^(H - alpha)`,
    /// the pile count bound and the site index.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let alive: u64 = self.piles.iter().map(|p| p.size).sum();
        if alive + self.graveyard != self.total_particles() {
            return Err(format!(
                "alive {alive} + graveyard {} != 2^{}",
                self.graveyard, self.h
            ));
        }
        if self.discards.alpha_total() + self.discards.beta_total() != self.graveyard {
            return Err("discard histogram does not add up to the graveyard".into());
        }
        if self.piles.len() as u64 > self.total_particles() {
            return Err(format!("{} piles exceed 2^H", self.piles.len()));
        }
        for (idx, p) in self.piles.iter().enumerate() {
            if !p.size.is_power_of_two() {
                return Err(format!("pile at {} has size {}", p.site, p.size));
            }
            if p.alpha > self.h || p.size != 1u64 << (self.h - p.alpha) {
                return Err(format!(
                    "pile at {} has size {} but alpha {}",
                    p.site, p.size, p.alpha
                ));
            }
            if self.slot[p.site] as usize != idx {
                return Err(format!("site index out of sync at {}", p.site));
            }
        }
        let indexed = self.slot.iter().filter(|&&s| s != EMPTY).count();
        if indexed != self.piles.len() {
            return Err("stale site index entries".into());
        }
        Ok(())
    }

    pub fn summary(&self, time: f64) -> ParticleSummary {
        let mut alive_by_alpha = vec![0u64; self.h as usize + 1];
        for p in &self.piles {
            alive_by_alpha[p.alpha as usize] += p.size;
        }
        ParticleSummary {
            time,
            h: self.h,
            piles: self.piles.len(),
            graveyard_particles: self.graveyard,
            beta_discarded: self.discards.beta_total(),
            alive_by_alpha,
        }
    }

    /// Rate of clock rings touching at least one occupied site:
    /// `1 - C(n-m, 2) / C(n, 2)` with `m` occupied sites.
    fn touching_rate(&self) -> f64 {
        let (n, m) = (self.n as f64, self.piles.len() as f64);
        (m * (n - m) + m * (m - 1.0) / 2.0) / (n * (n - 1.0) / 2.0)
    }

    /// Uniform pair among those touching an occupied site. Needs `m >= 1`.
    fn sample_touching_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let n = self.n as u64;
        let m = self.piles.len() as u64;
        let mixed = m * (n - m);
        let both = m * (m - 1) / 2;
        let u = rng.random_range(0..mixed + both);
        if u < mixed {
            let occupied = self.piles[(u / (n - m)) as usize].site;
            loop {
                let site = rng.random_range(0..n) as usize;
                if self.slot[site] == EMPTY {
                    return (occupied, site);
                }
            }
        } else {
            let a = rng.random_range(0..m);
            let mut b = rng.random_range(0..m - 1);
            if b >= a {
                b += 1;
            }
            (self.piles[a as usize].site, self.piles[b as usize].site)
        }
    }
}

/// Aggregate view of a model at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSummary {
    pub time: f64,
    pub h: u32,
    pub piles: usize,
    pub graveyard_particles: u64,
    pub beta_discarded: u64,
    /// Alive particles per `alpha` value, `0..=H`.
    pub alive_by_alpha: Vec<u64>,
}

impl ParticleSummary {
    fn total(&self) -> f64 {
        (1u64 << self.h) as f64
    }

    pub fn sum_w(&self) -> f64 {
        self.alive_by_alpha.iter().sum::<u64>() as f64 / self.total()
    }

    pub fn discarded_fraction(&self) -> f64 {
        self.graveyard_particles as f64 / self.total()
    }

    pub fn beta_discard_fraction(&self) -> f64 {
        self.beta_discarded as f64 / self.total()
    }

    pub fn weighted_mass(&self, alpha_cutoff: f64) -> f64 {
        let hit: u64 = self
            .alive_by_alpha
            .iter()
            .enumerate()
            .filter(|(alpha, _)| *alpha as f64 <= alpha_cutoff)
            .map(|(_, c)| c)
            .sum();
        hit as f64 / self.total()
    }

    /// Particle-weighted mean `alpha` of alive particles; `None` if all are discarded.
    pub fn mean_alive_alpha(&self) -> Option<f64> {
        let alive: u64 = self.alive_by_alpha.iter().sum();
        if alive == 0 {
            return None;
        }
        let weighted: f64 = self
            .alive_by_alpha
            .iter()
            .enumerate()
            .map(|(a, &c)| a as f64 * c as f64)
            .sum();
        Some(weighted / alive as f64)
    }
}

fn check_record_times(t_end: f64, record_ts: &[f64]) -> Result<()> {
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::invalid(format!(
            "t_end = {t_end} must be finite and nonnegative"
        )));
    }
    if record_ts.iter().any(|t| !(0.0..=t_end).contains(t)) {
        return Err(Error::invalid("record times must lie in [0, t_end]"));
    }
    if record_ts
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]).map_or(true, |o| o.is_gt()))
    {
        return Err(Error::invalid("record times must be sorted ascending"));
    }
    Ok(())
}

/// Standalone particle run on the thinned clock: only rings touching an
/// occupied site are generated, at rate `1 - C(n-m,2)/C(n,2)`, which has the
/// same law as filtering the full stream. Summaries are taken at each record
/// time, plus `t_end` when it is past the last one.
pub fn run_particles(
    n: usize,
    t_end: f64,
    seed: u64,
    record_ts: &[f64],
) -> Result<Vec<ParticleSummary>> {
    run_particles_with(n, t_end, record_ts, &mut seeded(seed))
}

pub fn run_particles_with<R: Rng + ?Sized>(
    n: usize,
    t_end: f64,
    record_ts: &[f64],
    rng: &mut R,
) -> Result<Vec<ParticleSummary>> {
    check_record_times(t_end, record_ts)?;
    let mut times = record_ts.to_vec();
    if times.last().map_or(true, |&t| t < t_end) {
        times.push(t_end);
    }
    let mut model = ParticleModel::new(n)?;
    let mut out = Vec::with_capacity(times.len());
    let mut pending = times.iter().copied().peekable();
    let mut now = 0.0;
    while pending.peek().is_some() {
        if model.piles.is_empty() {
            out.extend(pending.by_ref().map(|t| model.summary(t)));
            break;
        }
        let wait: f64 = Exp1.sample(rng);
        let next = now + wait / model.touching_rate();
        while let Some(t) = pending.next_if(|&t| t < next) {
            out.push(model.summary(t));
        }
        if pending.peek().is_none() {
            break;
        }
        now = next;
        let (i, j) = model.sample_touching_pair(rng);
        model.event_unchecked(i, j);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CouplingReport {
    pub times: Vec<f64>,
    pub sum_w: Vec<f64>,
    pub discarded_fraction: Vec<f64>,
    pub beta_discard_fraction: Vec<f64>,
    /// Largest `w_i - (x'_i + 1/n)` seen up to each record time, floored at 0.
    pub max_violation: Vec<f64>,
    /// `T'` of the chain at each record time.
    pub chain_l1: Vec<f64>,
    pub max_dominance_violation: f64,
}

impl CouplingReport {
    /// Pointwise means across runs with identical record times; violations
    /// are combined by maximum.
    pub fn combine(reports: &[CouplingReport]) -> Result<CouplingReport> {
        let first = reports
            .first()
            .ok_or_else(|| Error::invalid("no reports to combine"))?;
        if reports.iter().any(|r| r.times != first.times) {
            return Err(Error::invalid("reports have different record times"));
        }
        let k = reports.len() as f64;
        let mean = |f: fn(&CouplingReport) -> &Vec<f64>| -> Vec<f64> {
            (0..first.times.len())
                .map(|i| reports.iter().map(|r| f(r)[i]).sum::<f64>() / k)
                .collect()
        };
        Ok(CouplingReport {
            times: first.times.clone(),
            sum_w: mean(|r| &r.sum_w),
            discarded_fraction: mean(|r| &r.discarded_fraction),
            beta_discard_fraction: mean(|r| &r.beta_discard_fraction),
            chain_l1: mean(|r| &r.chain_l1),
            max_violation: (0..first.times.len())
                .map(|i| {
                    reports
                        .iter()
                        .map(|r| r.max_violation[i])
                        .fold(0.0, f64::max)
                })
                .collect(),
            max_dominance_violation: reports
                .iter()
                .map(|r| r.max_dominance_violation)
                .fold(0.0, f64::max),
        })
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, meta: &[(&str, String)]) -> Result<()> {
        write_meta(out, meta)?;
        writeln!(
            out,
            "t,sum_w,discarded_fraction,beta_discard_fraction,max_violation"
        )?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_real(self.times[i]),
                fmt_real(self.sum_w[i]),
                fmt_real(self.discarded_fraction[i]),
                fmt_real(self.beta_discard_fraction[i]),
                fmt_real(self.max_violation[i])
            )?;
        }
        Ok(())
    }
}

/// Excess of `w_i` over `x'_i + 1/n` on `site`. The chain starts at `e₁`
/// with mean `1/n`, so `x'_i + 1/n` is the raw coordinate.
fn excess(model: &ParticleModel, state: &State, site: usize) -> f64 {
    model.weight(site) - state.values()[site]
}

/// Drives the chain from `e₁` and the particle model with the same (full)
/// Poisson clock and checks `w_i <= x'_i + 1/n` after every event.
pub fn coupled_run(n: usize, t_end: f64, seed: u64, record_ts: &[f64]) -> Result<CouplingReport> {
    coupled_run_with(n, t_end, record_ts, &mut seeded(seed))
}

pub fn coupled_run_with<R: Rng + ?Sized>(
    n: usize,
    t_end: f64,
    record_ts: &[f64],
    rng: &mut R,
) -> Result<CouplingReport> {
    check_record_times(t_end, record_ts)?;
    let mut state = State::init(n, &InitSpec::Delta)?;
    let mut model = ParticleModel::new(n)?;
    let mut report = CouplingReport::default();
    let mut worst = 0.0f64;
    let mut now = 0.0;

    let fail =
        |time: f64, model: &ParticleModel, state: &State, site: usize| Error::CouplingFailure {
            time,
            site,
            w: model.weight(site),
            x: state.values()[site],
        };

    for &t in record_ts {
        let events = poisson_count(t - now, rng);
        for _ in 0..events {
            let (i, j) = sample_pair(n, rng);
            state.average_pair(i, j, 0.5);
            model.event_unchecked(i, j);
            for site in [i, j] {
                let e = excess(&model, &state, site);
                worst = worst.max(e);
                if e > DOMINANCE_TOLERANCE {
                    return Err(fail(t, &model, &state, site));
                }
            }
        }
        now = t;
        for p in model.piles() {
            let e = excess(&model, &state, p.site);
            worst = worst.max(e);
            if e > DOMINANCE_TOLERANCE {
                return Err(fail(t, &model, &state, p.site));
            }
        }
        report.times.push(t);
        report.sum_w.push(model.sum_w());
        report.discarded_fraction.push(model.discarded_fraction());
        report
            .beta_discard_fraction
            .push(model.beta_discard_fraction());
        report.max_violation.push(worst);
        report.chain_l1.push(state.l1_distance());
    }
    report.max_dominance_violation = worst;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEstimateRow {
    pub n: usize,
    pub a: f64,
    pub delta: f64,
    pub replicate: u64,
    pub weighted_mass: f64,
    /// `Φ(-a - δ)`.
    pub target_phi: f64,
}

/// For each replicate, runs the standalone particle model to every `t(a)` and
/// evaluates the weighted mass at cutoff `log₂n - δ√log₂n` for each `δ`.
/// Rows come out ordered by replicate, then `a`, then `δ`.
pub fn weighted_estimate(
    n: usize,
    a_values: &[f64],
    deltas: &[f64],
    replicates: u64,
    seed: u64,
) -> Result<Vec<WeightedEstimateRow>> {
    if a_values.is_empty() || deltas.is_empty() || replicates == 0 {
        return Err(Error::invalid(
            "need at least one a, one delta and one replicate",
        ));
    }
    if deltas.iter().any(|d| d.is_nan() || *d < 0.0) {
        return Err(Error::invalid("delta must be nonnegative"));
    }
    if a_values
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]).map_or(true, |o| o.is_ge()))
    {
        return Err(Error::invalid("a values must be strictly increasing"));
    }
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let times: Vec<f64> = a_values.iter().map(|&a| t_of_a(n, a).max(0.0)).collect();
    let t_end = *times.last().unwrap();
    let lg = (n as f64).log2();
    let per_rep: Vec<Vec<WeightedEstimateRow>> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<WeightedEstimateRow>> {
            let summaries = run_particles_with(n, t_end, &times, &mut replicate_rng(seed, r))?;
            let mut rows = Vec::with_capacity(a_values.len() * deltas.len());
            for (&a, s) in a_values.iter().zip(&summaries) {
                for &delta in deltas {
                    rows.push(WeightedEstimateRow {
                        n,
                        a,
                        delta,
                        replicate: r,
                        weighted_mass: s.weighted_mass(lg - delta * lg.sqrt()),
                        target_phi: normal_cdf(-a - delta),
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

pub fn write_weighted_csv<W: Write>(
    out: &mut W,
    meta: &[(&str, String)],
    rows: &[WeightedEstimateRow],
) -> Result<()> {
    write_meta(out, meta)?;
    writeln!(out, "n,a,delta,replicate,weighted_mass,target_phi")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            fmt_real(r.a),
            fmt_real(r.delta),
            r.replicate,
            fmt_real(r.weighted_mass),
            fmt_real(r.target_phi)
        )?;
    }
    Ok(())
}
