//! Legendre, cosine and Fourier correlation bases on [0, 1].
//!
//! Every basis has `B_0 ≡ 1` and orthonormal `B_j` for `j ≥ 1`. Legendre and
//! cosine are natural bases: `B_j` has `j − 1` turning points, increases near
//! 1 and satisfies `B_j(1 − u) = (−1)^j B_j(u)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::{poly, quad, roots};

/// Highest supported basis order.
pub const MAX_ORDER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Legendre,
    Cosine,
    Fourier,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::Legendre => "legendre",
            BasisKind::Cosine => "cosine",
            BasisKind::Fourier => "fourier",
        })
    }
}

impl FromStr for BasisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "legendre" => Ok(BasisKind::Legendre),
            "cosine" => Ok(BasisKind::Cosine),
            "fourier" => Ok(BasisKind::Fourier),
            other => Err(Error::param(format!("unknown basis '{other}'"))),
        }
    }
}

/// A correlation basis of a given kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrelationBasis {
    pub kind: BasisKind,
}

impl From<BasisKind> for CorrelationBasis {
    fn from(kind: BasisKind) -> Self {
        CorrelationBasis { kind }
    }
}

fn check_order(j: usize) -> Result<()> {
    if j > MAX_ORDER {
        Err(Error::UnsupportedOrder {
            order: j,
            max: MAX_ORDER,
        })
    } else {
        Ok(())
    }
}

fn check_unit(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::domain("u", u, "[0, 1]"))
    }
}

/// `P_n(t)` and `P_{n-1}(t)` by the Bonnet recurrence.
fn legendre_pair(n: usize, t: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, t);
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * t * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// `P'_n(t)` via `P'_{k+1} = P'_{k-1} + (2k + 1) P_k`.
fn legendre_derivative(n: usize, t: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (mut p_prev, mut p) = (1.0, t);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for k in 1..n {
        let p_next = ((2 * k + 1) as f64 * t * p - k as f64 * p_prev) / (k + 1) as f64;
        let d_next = d_prev + (2 * k + 1) as f64 * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    d
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Ascending coefficients in `u` of `L'_j(u)`, the derivative of the shifted
/// Legendre polynomial, from its closed binomial sum.
pub fn shifted_legendre_derivative_coeffs(j: usize) -> Vec<f64> {
    if j == 0 {
        return vec![0.0];
    }
    let sign = if (j - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let scale = sign * (j * (j + 1)) as f64;
    (0..j)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            scale * binomial(j - 1, i) * binomial(j + 1 + i, i) / (i + 1) as f64 * s
        })
        .collect()
}

impl CorrelationBasis {
    pub const LEGENDRE: CorrelationBasis = CorrelationBasis {
        kind: BasisKind::Legendre,
    };
    pub const COSINE: CorrelationBasis = CorrelationBasis {
        kind: BasisKind::Cosine,
    };
    pub const FOURIER: CorrelationBasis = CorrelationBasis {
        kind: BasisKind::Fourier,
    };

    /// Legendre and cosine bases are natural; Fourier is not.
    pub fn is_natural(&self) -> bool {
        !matches!(self.kind, BasisKind::Fourier)
    }

    /// `B_j(u)`.
    pub fn eval(&self, j: usize, u: f64) -> Result<f64> {
        check_order(j)?;
        check_unit(u)?;
        Ok(self.value(j, u))
    }

    /// `B'_j(u)`; zero for `j = 0`.
    pub fn derivative(&self, j: usize, u: f64) -> Result<f64> {
        check_order(j)?;
        check_unit(u)?;
        Ok(self.slope(j, u))
    }

    /// `I_j(x) = ∫₀ˣ B_j`.
    pub fn integral(&self, j: usize, x: f64) -> Result<f64> {
        check_order(j)?;
        check_unit(x)?;
        Ok(self.antiderivative(j, x))
    }

    /// Unchecked `B_j(u)`.
    pub(crate) fn value(&self, j: usize, u: f64) -> f64 {
        if j == 0 {
            return 1.0;
        }
        let jf = j as f64;
        match self.kind {
            BasisKind::Legendre => (2.0 * jf + 1.0).sqrt() * legendre_pair(j, 2.0 * u - 1.0).0,
            BasisKind::Cosine => parity(j) * SQRT_2 * (jf * PI * u).cos(),
            BasisKind::Fourier => {
                if j % 2 == 1 {
                    SQRT_2 * ((jf + 1.0) * PI * u).cos()
                } else {
                    SQRT_2 * (jf * PI * u).sin()
                }
            }
        }
    }

    /// Unchecked `B'_j(u)`.
    pub(crate) fn slope(&self, j: usize, u: f64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        let jf = j as f64;
        match self.kind {
            BasisKind::Legendre => {
                2.0 * (2.0 * jf + 1.0).sqrt() * legendre_derivative(j, 2.0 * u - 1.0)
            }
            BasisKind::Cosine => -parity(j) * jf * PI * SQRT_2 * (jf * PI * u).sin(),
            BasisKind::Fourier => {
                if j % 2 == 1 {
                    -SQRT_2 * (jf + 1.0) * PI * ((jf + 1.0) * PI * u).sin()
                } else {
                    SQRT_2 * jf * PI * (jf * PI * u).cos()
                }
            }
        }
    }

    /// Unchecked `∫₀ˣ B_j`.
    pub(crate) fn antiderivative(&self, j: usize, x: f64) -> f64 {
        if j == 0 {
            return x;
        }
        let jf = j as f64;
        match self.kind {
            BasisKind::Legendre => {
                let up = self.value(j + 1, x) / (2.0 * jf + 3.0).sqrt();
                let down = self.value(j - 1, x) / (2.0 * jf - 1.0).sqrt();
                (up - down) / (2.0 * (2.0 * jf + 1.0).sqrt())
            }
            BasisKind::Cosine => parity(j) * SQRT_2 * (jf * PI * x).sin() / (jf * PI),
            BasisKind::Fourier => {
                if j % 2 == 1 {
                    SQRT_2 * ((jf + 1.0) * PI * x).sin() / ((jf + 1.0) * PI)
                } else {
                    SQRT_2 * (1.0 - (jf * PI * x).cos()) / (jf * PI)
                }
            }
        }
    }

    /// Interior points of (0, 1) where `B'_j` changes sign, ascending.
    pub fn turning_points(&self, j: usize) -> Result<Vec<f64>> {
        check_order(j)?;
        if j == 0 {
            return Ok(Vec::new());
        }
        let jf = j as f64;
        Ok(match self.kind {
            BasisKind::Cosine => (1..j).map(|m| m as f64 / jf).collect(),
            BasisKind::Fourier => {
                if j % 2 == 1 {
                    (1..=j).map(|m| m as f64 / (jf + 1.0)).collect()
                } else {
                    (0..j).map(|m| (m as f64 + 0.5) / jf).collect()
                }
            }
            BasisKind::Legendre => legendre_turning_points(j),
        })
    }
}

fn parity(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Roots of `L'_j` in (0, 1): companion-matrix estimates refined inside the
/// brackets formed by consecutive zeros of `L_j` (the zeros interlace).
fn legendre_turning_points(j: usize) -> Vec<f64> {
    if j < 2 {
        return Vec::new();
    }
    let (zeros, _) = quad::gauss_legendre(j);
    let zeros: Vec<f64> = zeros.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let estimates = poly::real_roots_in(&shifted_legendre_derivative_coeffs(j), 0.0, 1.0);
    let d = |u: f64| legendre_derivative(j, 2.0 * u - 1.0);
    zeros
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let guess = estimates.iter().copied().find(|&x| x > a && x < b);
            let root = roots::brent(d, a, b, 1e-16);
            match guess {
                Some(g) if d(g).abs() <= d(root).abs() => g,
                _ => root,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::quad::integrate_adaptive;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const ALL: [CorrelationBasis; 3] = [
        CorrelationBasis::LEGENDRE,
        CorrelationBasis::COSINE,
        CorrelationBasis::FOURIER,
    ];

    #[test]
    fn documented_values() {
        let l = CorrelationBasis::LEGENDRE;
        assert_abs_diff_eq!(l.eval(1, 1.0).unwrap(), 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            l.eval(2, 0.5).unwrap(),
            -(5f64.sqrt()) / 2.0,
            epsilon = 1e-15
        );
        for j in 0..=MAX_ORDER {
            let expect = parity(j) * if j == 0 { 1.0 } else { SQRT_2 };
            assert_abs_diff_eq!(CorrelationBasis::COSINE.eval(j, 0.0).unwrap(), expect);
        }
        for b in ALL {
            assert_eq!(b.eval(0, 0.37).unwrap(), 1.0);
        }
    }

    #[test]
    fn documented_derivatives() {
        let l = CorrelationBasis::LEGENDRE;
        assert_abs_diff_eq!(
            l.derivative(1, 0.3).unwrap(),
            2.0 * 3f64.sqrt(),
            epsilon = 1e-14
        );
        let c = CorrelationBasis::COSINE;
        assert_abs_diff_eq!(c.derivative(1, 0.5).unwrap(), PI * SQRT_2, epsilon = 1e-14);
        let h = 1e-6;
        let fd = (l.value(3, 0.2 + h) - l.value(3, 0.2 - h)) / (2.0 * h);
        assert_abs_diff_eq!(l.derivative(3, 0.2).unwrap(), fd, epsilon = 1e-6);
        assert_eq!(c.derivative(0, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn documented_integrals() {
        for b in ALL {
            for j in 1..=12 {
                assert_abs_diff_eq!(b.integral(j, 1.0).unwrap(), 0.0, epsilon = 1e-13);
            }
        }
        let c = CorrelationBasis::COSINE;
        assert_abs_diff_eq!(c.integral(1, 0.5).unwrap(), -SQRT_2 / PI, epsilon = 1e-15);
        let l = CorrelationBasis::LEGENDRE;
        assert_abs_diff_eq!(
            l.integral(1, 0.5).unwrap(),
            -(3f64.sqrt()) / 4.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn documented_turning_points() {
        assert_eq!(
            CorrelationBasis::LEGENDRE.turning_points(2).unwrap(),
            vec![0.5]
        );
        let c = CorrelationBasis::COSINE.turning_points(3).unwrap();
        assert_abs_diff_eq!(c[0], 1.0 / 3.0);
        assert_abs_diff_eq!(c[1], 2.0 / 3.0);
        assert_eq!(
            CorrelationBasis::FOURIER.turning_points(1).unwrap().len(),
            1
        );
    }

    #[test]
    fn domain_and_order_errors() {
        let l = CorrelationBasis::LEGENDRE;
        assert!(matches!(
            l.eval(21, 0.5),
            Err(Error::UnsupportedOrder { .. })
        ));
        assert!(matches!(l.eval(2, 1.5), Err(Error::OutOfDomain { .. })));
        assert!(l.eval(20, 0.9).is_ok());
    }

    #[test]
    fn orthonormality() {
        for b in ALL {
            for j in 0..=12 {
                for k in j..=12 {
                    let v = integrate_adaptive(
                        |u| b.value(j, u) * b.value(k, u),
                        0.0,
                        1.0,
                        &[],
                        1e-13,
                        1e-13,
                    )
                    .value;
                    let target = if j == k { 1.0 } else { 0.0 };
                    assert!((v - target).abs() < 1e-10, "{:?} {j} {k} {v}", b.kind);
                }
            }
        }
    }

    #[test]
    fn reflection_and_right_end() {
        for b in [CorrelationBasis::LEGENDRE, CorrelationBasis::COSINE] {
            for j in 1..=12 {
                for i in 0..=1000 {
                    let u = i as f64 / 1000.0;
                    let d = b.value(j, 1.0 - u) - parity(j) * b.value(j, u);
                    assert!(d.abs() < 1e-12, "{:?} {j} {u} {d}", b.kind);
                }
                assert!(b.slope(j, 1.0 - 1e-6) > 0.0);
            }
        }
    }

    #[test]
    fn turning_point_counts_and_sign_changes() {
        for b in ALL {
            for j in 1..=MAX_ORDER {
                let tp = b.turning_points(j).unwrap();
                let expected = if b.is_natural() { j - 1 } else { j };
                assert_eq!(tp.len(), expected, "{:?} {j}", b.kind);
                for &t in &tp {
                    assert!(b.slope(j, t).abs() < 1e-9 * (j * j * j) as f64);
                    let e = 1e-7;
                    assert!(b.slope(j, t - e) * b.slope(j, t + e) < 0.0);
                }
            }
        }
    }

    #[test]
    fn closed_sum_matches_recurrence_derivative() {
        for j in 1..=12 {
            let c = shifted_legendre_derivative_coeffs(j);
            for i in 0..=50 {
                let u = i as f64 / 50.0;
                let a = poly::horner(&c, u);
                let b = 2.0 * legendre_derivative(j, 2.0 * u - 1.0);
                assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "{j} {u} {a} {b}");
            }
        }
    }

    proptest! {
        #[test]
        fn antiderivative_consistent(j in 1usize..=12, x in 0.01f64..0.99, k in 0usize..3) {
            let b = ALL[k];
            let h = 1e-6;
            let fd = (b.antiderivative(j, x + h) - b.antiderivative(j, x - h)) / (2.0 * h);
            prop_assert!((fd - b.value(j, x)).abs() < 1e-6);
        }

        #[test]
        fn derivative_matches_finite_difference(j in 1usize..=12, x in 0.01f64..0.99, k in 0usize..3) {
            let b = ALL[k];
            let h = 1e-6;
            let fd = (b.value(j, x + h) - b.value(j, x - h)) / (2.0 * h);
            prop_assert!((fd - b.slope(j, x)).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }
}
