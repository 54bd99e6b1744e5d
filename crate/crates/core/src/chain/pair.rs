use rand::Rng;

/// Uniform unordered pair of distinct indices in `[0, n)`, returned as `(i, j)`
/// with `i < j`. Needs `n >= 2`.
///
/// Draws `i` from `[0, n)` and `j` from `[0, n-1)`, shifting `j` past `i`.
/// Each ordered pair has probability `1/(n(n-1))`, so each unordered pair
/// has `2/(n(n-1))`. No rejection loop.
#[inline]
pub fn sample_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    debug_assert!(n >= 2);
    let n = n as u64;
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let (i, j) = (i as usize, j as usize);
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}
