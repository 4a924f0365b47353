use crate::error::{domain, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF, `N(x) = erfc(-x/√2) / 2`.
///
/// `erfc` is the rational-approximation implementation from the FreeBSD/Sun
/// libm (via the `libm` crate), accurate to about one ulp. Going through
/// `erfc` instead of `1 + erf` keeps full relative accuracy in the lower
/// tail, where the put forward rate spends most of its time.
pub fn norm_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("norm_cdf argument must be finite, got {x}"));
    }
    Ok(std_normal_cdf(x))
}

/// Infallible variant of [`norm_cdf`]; infinities map to 0 and 1.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}
