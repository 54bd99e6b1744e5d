/// Distance-to-equilibrium measurements of one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    /// `T`: L¹ distance to the constant vector at the stored mean.
    pub l1: f64,
    /// `S`: squared L² distance to the same vector.
    pub l2_sq: f64,
    /// Hoover index, `T / 2`. Meaningful for nonnegative unit-mass states.
    pub hoover: f64,
    /// Entries of the raw state that are exactly nonzero.
    pub nonzero_count: usize,
    pub max_entry: f64,
}

impl Metrics {
    pub fn of(values: &[f64], mean: f64) -> Metrics {
        let mut l1 = 0.0;
        let mut l2_sq = 0.0;
        let mut nonzero_count = 0;
        let mut max_entry = f64::NEG_INFINITY;
        for &v in values {
            let d = v - mean;
            l1 += d.abs();
            l2_sq += d * d;
            if v != 0.0 {
                nonzero_count += 1;
            }
            max_entry = max_entry.max(v);
        }
        Metrics {
            l1,
            l2_sq,
            hoover: l1 / 2.0,
            nonzero_count,
            max_entry,
        }
    }
}

/// Probe time `n(log₂n + a·√log₂n)/2` of the cutoff window. Negative for very
/// negative `a`; see [`clamped_t_of_a`].
pub fn t_of_a(n: usize, a: f64) -> f64 {
    let lg = (n as f64).log2();
    n as f64 * (lg + a * lg.sqrt()) / 2.0
}

/// [`t_of_a`] clamped at zero, with a flag telling whether clamping happened.
pub fn clamped_t_of_a(n: usize, a: f64) -> (f64, bool) {
    let t = t_of_a(n, a);
    if t < 0.0 {
        (0.0, true)
    } else {
        (t, false)
    }
}

fn sorted_centered_desc(values: &[f64], mean: f64) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().map(|x| x - mean).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Checks that `after` lies below `before` in the majorization order: every
/// prefix sum of the decreasingly sorted centered vector of `after` is at most
/// the matching prefix sum for `before`, plus `tol`.
pub fn is_majorized_by(after: &[f64], before: &[f64], mean: f64, tol: f64) -> bool {
    assert_eq!(after.len(), before.len());
    let a = sorted_centered_desc(after, mean);
    let b = sorted_centered_desc(before, mean);
    let (mut sa, mut sb) = (0.0, 0.0);
    for (x, y) in a.iter().zip(&b) {
        sa += x;
        sb += y;
        if sa > sb + tol {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let m = Metrics::of(&[1.0, 0.0, 0.0, 0.0], 0.25);
        assert_eq!(m.l1, 1.5);
        assert_eq!(m.l2_sq, 0.75);
        assert_eq!(m.hoover, 0.75);
        assert_eq!(m.nonzero_count, 1);
        assert_eq!(m.max_entry, 1.0);

        let m = Metrics::of(&[0.5, 0.5, 0.0, 0.0], 0.25);
        assert_eq!(m.l1, 1.0);
        assert_eq!(m.l2_sq, 0.25);

        let m = Metrics::of(&[0.25; 4], 0.25);
        assert_eq!(m.l1, 0.0);
        assert_eq!(m.l2_sq, 0.0);
        assert_eq!(m.nonzero_count, 4);
    }

    #[test]
    fn probe_times() {
        assert_eq!(t_of_a(1024, 0.0), 5120.0);
        // 512·(10 + √10), 30-digit evaluation: 6739.08616200621021798...
        assert!((t_of_a(1024, 1.0) - 6_739.086_162_006_210_2).abs() < 1e-9);
        assert_eq!(t_of_a(2, 0.0), 1.0);
        assert!(t_of_a(4, -10.0) < 0.0);
        assert_eq!(clamped_t_of_a(4, -10.0), (0.0, true));
        assert_eq!(clamped_t_of_a(1024, 0.0), (5120.0, false));
    }

    #[test]
    fn averaging_moves_down_the_order() {
        let before = [1.0, 0.0, 0.0, 0.0];
        let after = [0.5, 0.5, 0.0, 0.0];
        assert!(is_majorized_by(&after, &before, 0.25, 0.0));
        assert!(!is_majorized_by(&before, &after, 0.25, 0.0));
    }
}
