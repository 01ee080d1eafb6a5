//! Univariate and bivariate normal distribution functions.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use super::quad::integrate_adaptive;

/// Standard normal cdf.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile, polished with one Halley step.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    let e = norm_cdf(x) - p;
    let u = e / norm_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Bivariate standard normal cdf `P(X ≤ x, Y ≤ y)` with correlation `rho`.
///
/// Uses the one-dimensional reduction
/// `Φ(x)Φ(y) + (2π)⁻¹ ∫₀^{asin ρ} exp(−(x² + y² − 2xy sin θ) / (2 cos² θ)) dθ`.
pub fn bvn_cdf(x: f64, y: f64, rho: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return norm_cdf(y);
    }
    if y == f64::INFINITY {
        return norm_cdf(x);
    }
    let base = norm_cdf(x) * norm_cdf(y);
    if rho == 0.0 {
        return base;
    }
    let upper = rho.clamp(-1.0, 1.0).asin();
    let (sx, sy) = (x * x + y * y, 2.0 * x * y);
    let integrand = |t: f64| {
        let c = t.cos();
        let c2 = c * c;
        if c2 <= 0.0 {
            return 0.0;
        }
        (-(sx - sy * t.sin()) / (2.0 * c2)).exp()
    };
    let r = integrate_adaptive(integrand, 0.0, upper, &[], 1e-13, 1e-12);
    (base + r.value / (2.0 * PI)).clamp(0.0, 1.0)
}
