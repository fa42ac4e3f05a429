//! Standard normal density, distribution and quantile functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use statrs::function::erf;

/// `1 / sqrt(2 pi)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Inverse of [`cdf`]; `0` and `1` map to the infinities.
///
/// A rational `erfc` inverse seeds two Newton steps against [`cdf`], which
/// brings `cdf(quantile(u))` to within a few ulps of `u`.
pub fn quantile(u: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&u));
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let mut z = -SQRT_2 * erf::erfc_inv(2.0 * u);
    for _ in 0..2 {
        let dens = pdf(z);
        if dens > 0.0 {
            z -= (cdf(z) - u) / dens;
        }
    }
    z
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erf_inv(x: f64) -> f64 {
    quantile(0.5 * (x + 1.0)) * FRAC_1_SQRT_2
}

/// Density of `N(0, 1)` written the way the aggregation formulas use it.
pub fn gaussian_kernel(gamma: f64) -> f64 {
    (-0.5 * gamma * gamma).exp() / (2.0 * PI).sqrt()
}
