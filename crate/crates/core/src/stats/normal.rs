/// Standard normal CDF, `Φ(x) = erfc(-x/√2) / 2`.
///
/// `erfc` is the `libm` port of the FreeBSD/musl implementation (piecewise
/// rational approximations, error below 1 ulp), so the lower tail keeps full
/// relative precision; there is no `1 - erf` cancellation for negative `x`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
