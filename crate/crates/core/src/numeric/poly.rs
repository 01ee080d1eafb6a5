//! Real polynomial roots via companion-matrix eigenvalues.

use nalgebra::DMatrix;

/// Evaluates a polynomial with ascending coefficients.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Real roots of `Σ c_i x^i` that fall inside `(lo, hi)`, ascending.
///
/// Eigenvalues of the companion matrix are used as estimates; each real
/// estimate is refined with Brent on a bracket where the polynomial changes
/// sign.
pub fn real_roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c.last().is_some_and(|&x| x == 0.0) {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let eig = comp.complex_eigenvalues();
    let span = hi - lo;
    let mut est: Vec<f64> = eig
        .iter()
        .filter(|z| z.im.abs() < 1e-6 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .filter(|&x| x > lo - 1e-9 * span && x < hi + 1e-9 * span)
        .collect();
    est.sort_by(f64::total_cmp);
    let p = |x: f64| horner(&c, x);
    let mut out: Vec<f64> = Vec::with_capacity(est.len());
    for (i, &x) in est.iter().enumerate() {
        let left = if i == 0 { lo } else { 0.5 * (est[i - 1] + x) };
        let right = if i + 1 == est.len() {
            hi
        } else {
            0.5 * (x + est[i + 1])
        };
        let root = if p(left) * p(right) <= 0.0 {
            super::roots::brent(p, left, right, 1e-16)
        } else {
            x
        };
        if root > lo && root < hi {
            out.push(root);
        }
    }
    out
}
