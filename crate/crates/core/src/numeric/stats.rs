//! Goodness-of-fit statistics and small descriptive helpers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::normal::norm_cdf;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with denominator `n - 1`.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Kolmogorov–Smirnov distance between the empirical cdf and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// KS distance from the uniform distribution on [0, 1].
pub fn ks_uniform(samples: &[f64]) -> f64 {
    ks_distance(samples, |x| x.clamp(0.0, 1.0))
}

/// Upper-tail probability of a chi-square statistic.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    ChiSquared::new(df).map(|d| d.sf(stat)).unwrap_or(f64::NAN)
}

/// Anderson–Darling normality test with estimated mean and variance.
///
/// Returns the small-sample corrected statistic `A*²` and its approximate
/// p-value (D'Agostino & Stephens).
pub fn anderson_darling_normal(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let m = mean(x);
    let sd = variance(x).sqrt();
    let mut z: Vec<f64> = x.iter().map(|v| norm_cdf((v - m) / sd)).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let eps = 1e-300;
    let s: f64 = (0..n)
        .map(|i| {
            let w = (2 * i + 1) as f64;
            w * (z[i].max(eps).ln() + (1.0 - z[n - 1 - i]).max(eps).ln())
        })
        .sum();
    let a2 = -nf - s / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    (a, p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_perfect_grid() {
        let s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform(&s) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn chi_square_tail() {
        // P(χ²₁ > 3.841459) = 0.05
        assert!((chi_square_sf(3.841_458_820_694_124, 1.0) - 0.05).abs() < 1e-10);
    }

    #[test]
    fn anderson_darling_on_normal_quantiles() {
        let x: Vec<f64> = (1..=200)
            .map(|i| crate::numeric::normal::norm_quantile(i as f64 / 201.0))
            .collect();
        let (_, p) = anderson_darling_normal(&x);
        assert!(p > 0.5);
        let skewed: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let (_, p) = anderson_darling_normal(&skewed);
        assert!(p < 1e-3);
    }

    #[test]
    fn pearson_perfect() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(pearson(&x, &[2.0, 4.0, 6.0]), 1.0);
        assert_eq!(pearson(&x, &[3.0, 2.0, 1.0]), -1.0);
    }
}
