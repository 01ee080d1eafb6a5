//! Population generalized Spearman correlations, basis-correlation matrices,
//! sharp bounds, support sets of extremal copulas and matrix diagnostics.

mod bounds;
mod elicit;

pub use bounds::{
    bounds, support_residual, support_set, Bounds, Extremum, Polyline, SupportPoint, SupportSet,
};
pub use elicit::{maximize_gen_spearman, symmetry_report, Elicited, SymmetryFlags, Tolerance};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, CorrelationBasis};
use crate::copula::{Copula, PerfectDependence};
use crate::error::{Error, Result};
use crate::numeric::quad;
use crate::numeric::rng::{self, SimRng, CHUNK};
use crate::transform::PiecewiseMonotone;

/// Largest order accepted by [`basis_corr_matrix`].
pub const MAX_MATRIX_ORDER: usize = 12;

/// How a population measure is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Tensor Gauss–Legendre quadrature of `∫∫ C g′h′ − g(1)h(1)`.
    HardyKrause { nodes: usize },
    /// Sample mean of `g(U)h(V)`.
    MonteCarlo { n: usize, seed: u64 },
}

impl Default for Method {
    fn default() -> Self {
        Method::HardyKrause { nodes: 128 }
    }
}

impl Method {
    pub fn monte_carlo(n: usize, seed: u64) -> Self {
        Method::MonteCarlo { n, seed }
    }
}

/// Where the entries of a matrix came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MatrixSource {
    /// Closed form for the Fréchet bounds.
    Analytic,
    Quadrature {
        nodes: usize,
    },
    MonteCarlo {
        n: usize,
        seed: u64,
    },
    /// Rank-based estimate from data.
    Estimated {
        estimator: String,
        n: usize,
    },
    Given,
}

/// A population measure with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub value: f64,
    /// Monte Carlo standard error, or the quadrature error estimate.
    pub error: f64,
}

/// Matrix of basis correlations `ρ_{jk}`, `j, k = 1..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisCorrMatrix {
    pub basis: BasisKind,
    /// Row `j − 1`, column `k − 1` holds `ρ_{jk}`.
    pub entries: Vec<Vec<f64>>,
    /// Per-entry standard errors for Monte Carlo or estimated matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<Vec<f64>>>,
    pub source: MatrixSource,
    /// Largest quadrature error estimate, zero for other sources.
    #[serde(default)]
    pub error_estimate: f64,
}

/// Smallest eigenvalues of `I ± (P + Pᵀ)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdCheck {
    pub min_eigen_plus: f64,
    pub min_eigen_minus: f64,
}

impl PsdCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_eigen_plus >= -tol && self.min_eigen_minus >= -tol
    }
}

impl BasisCorrMatrix {
    /// Wraps a square matrix of given entries.
    pub fn from_entries(basis: BasisKind, entries: Vec<Vec<f64>>) -> Result<Self> {
        let n = entries.len();
        if let Some(row) = entries.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
        Ok(BasisCorrMatrix {
            basis,
            entries,
            std_errors: None,
            source: MatrixSource::Given,
            error_estimate: 0.0,
        })
    }

    pub fn order(&self) -> usize {
        self.entries.len()
    }

    /// `ρ_{jk}` with 1-based indices.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j - 1][k - 1]
    }

    /// Standard error of `ρ_{jk}`, zero when none is recorded.
    pub fn std_error(&self, j: usize, k: usize) -> f64 {
        self.std_errors.as_ref().map_or(0.0, |s| s[j - 1][k - 1])
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.order();
        DMatrix::from_fn(n, n, |i, k| self.entries[i][k])
    }

    /// Eigenvalue check of `I ± (P + Pᵀ)/2`.
    pub fn psd_check(&self) -> PsdCheck {
        let p = self.to_dmatrix();
        let n = p.nrows();
        if n == 0 {
            return PsdCheck {
                min_eigen_plus: 1.0,
                min_eigen_minus: 1.0,
            };
        }
        let s = (&p + p.transpose()) * 0.5;
        let id = DMatrix::<f64>::identity(n, n);
        let min_eig = |m: DMatrix<f64>| SymmetricEigen::new(m).eigenvalues.min();
        PsdCheck {
            min_eigen_plus: min_eig(&id + &s),
            min_eigen_minus: min_eig(&id - &s),
        }
    }

    /// Whether every entry lies in `[−1, 1]` within `tol`.
    pub fn entries_in_range(&self, tol: f64) -> bool {
        self.entries
            .iter()
            .flatten()
            .all(|x| x.is_finite() && x.abs() <= 1.0 + tol)
    }
}

fn reversal_sign(basis: CorrelationBasis, j: usize) -> f64 {
    // B_j(1 − u) = ±B_j(u) for every supported basis.
    let even = j.is_multiple_of(2);
    match basis.kind {
        BasisKind::Legendre | BasisKind::Cosine => {
            if even {
                1.0
            } else {
                -1.0
            }
        }
        BasisKind::Fourier => {
            if even {
                -1.0
            } else {
                1.0
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, split at `breaks`.
fn piece_nodes(breaks: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let pieces = breaks.len().saturating_sub(1).max(1);
    let per = (n / pieces).max(16);
    let (x, w) = quad::gauss_legendre(per);
    let mut nodes = Vec::with_capacity(per * pieces);
    let mut weights = Vec::with_capacity(per * pieces);
    for p in breaks.windows(2) {
        let half = 0.5 * (p[1] - p[0]);
        let mid = 0.5 * (p[1] + p[0]);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

fn cdf_grid(copula: &dyn Copula, us: &[f64], vs: &[f64]) -> Result<DMatrix<f64>> {
    let rows: Vec<Option<Vec<f64>>> = us
        .par_iter()
        .map(|&u| vs.iter().map(|&v| copula.cdf(u, v)).collect())
        .collect();
    let mut m = DMatrix::zeros(us.len(), vs.len());
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| Error::MissingCdf(copula.describe()))?;
        for (k, c) in row.into_iter().enumerate() {
            m[(i, k)] = c;
        }
    }
    Ok(m)
}

fn hardy_krause(
    copula: &dyn Copula,
    g: &PiecewiseMonotone,
    h: &PiecewiseMonotone,
    nodes: usize,
) -> Result<f64> {
    let (us, wu) = piece_nodes(g.breaks(), nodes);
    let (vs, wv) = piece_nodes(h.breaks(), nodes);
    let c = cdf_grid(copula, &us, &vs)?;
    let a: Vec<f64> = us
        .iter()
        .zip(&wu)
        .map(|(&u, w)| w * g.derivative(u))
        .collect();
    let b: Vec<f64> = vs
        .iter()
        .zip(&wv)
        .map(|(&v, w)| w * h.derivative(v))
        .collect();
    let mut total = 0.0;
    for (i, ai) in a.iter().enumerate() {
        let row: f64 = b.iter().enumerate().map(|(k, bk)| c[(i, k)] * bk).sum();
        total += ai * row;
    }
    Ok(total - g.eval(1.0) * h.eval(1.0))
}

fn perfect_measure(kind: PerfectDependence, g: &PiecewiseMonotone, h: &PiecewiseMonotone) -> f64 {
    let mut breaks: Vec<f64> = g.breaks().to_vec();
    match kind {
        PerfectDependence::Comonotone => {
            breaks.extend_from_slice(h.breaks());
            quad::integrate_unit(|u| g.eval(u) * h.eval(u), &breaks)
        }
        PerfectDependence::Countermonotone => {
            breaks.extend(h.breaks().iter().map(|b| 1.0 - b));
            quad::integrate_unit(|u| g.eval(u) * h.eval(1.0 - u), &breaks)
        }
    }
}

/// Streams `n` copula draws chunk by chunk, folding each chunk with `fold`
/// into an accumulator; partial results are combined in chunk order.
pub(crate) fn mc_fold<A: Send>(
    copula: &dyn Copula,
    n: usize,
    seed: u64,
    init: impl Fn() -> A + Sync,
    fold: impl Fn(&mut A, f64, f64) + Sync,
    merge: impl Fn(&mut A, A),
) -> A {
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r: SimRng = rng::stream(seed, c as u64);
            let mut acc = init();
            for _ in 0..CHUNK.min(n - c * CHUNK) {
                let (u, v) = copula.sample(&mut r);
                fold(&mut acc, u, v);
            }
            acc
        })
        .collect();
    let mut out = init();
    for p in parts {
        merge(&mut out, p);
    }
    out
}

/// Generalized Spearman correlation `ρ_{g,h}` of `copula`.
///
/// Inputs that are not standardized are standardized with a warning. The
/// comonotone and countermonotone copulas are always evaluated analytically.
pub fn gen_spearman(
    copula: &dyn Copula,
    g: &PiecewiseMonotone,
    h: &PiecewiseMonotone,
    method: Method,
) -> Result<Measure> {
    let g = g.ensure_standardized()?;
    let h = h.ensure_standardized()?;
    if let Some(kind) = copula.perfect_dependence() {
        return Ok(Measure {
            value: perfect_measure(kind, &g, &h),
            error: 0.0,
        });
    }
    match method {
        Method::HardyKrause { nodes } => {
            if !g.is_regular() || !h.is_regular() {
                return Err(Error::param(
                    "hardy_krause needs continuous transformations",
                ));
            }
            let fine = hardy_krause(copula, &g, &h, nodes)?;
            let coarse = hardy_krause(copula, &g, &h, nodes * 3 / 4)?;
            Ok(Measure {
                value: fine,
                error: (fine - coarse).abs(),
            })
        }
        Method::MonteCarlo { n, seed } => {
            if n < 2 {
                return Err(Error::TooFewObservations { needed: 2, got: n });
            }
            let (s, s2) = mc_fold(
                copula,
                n,
                seed,
                || (0.0, 0.0),
                |a, u, v| {
                    let x = g.eval(u) * h.eval(v);
                    a.0 += x;
                    a.1 += x * x;
                },
                |a, b| {
                    a.0 += b.0;
                    a.1 += b.1;
                },
            );
            let nf = n as f64;
            let mean = s / nf;
            let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
            Ok(Measure {
                value: mean,
                error: (var / nf).sqrt(),
            })
        }
    }
}

fn check_matrix_order(order: usize) -> Result<()> {
    if order == 0 || order > MAX_MATRIX_ORDER {
        return Err(Error::UnsupportedOrder {
            order,
            max: MAX_MATRIX_ORDER,
        });
    }
    Ok(())
}

/// The matrix `P_N` of basis correlations of `copula`.
pub fn basis_corr_matrix(
    copula: &dyn Copula,
    basis: CorrelationBasis,
    order: usize,
    method: Method,
) -> Result<BasisCorrMatrix> {
    check_matrix_order(order)?;
    if let Some(kind) = copula.perfect_dependence() {
        let entries = (1..=order)
            .map(|j| {
                (1..=order)
                    .map(|k| match (kind, j == k) {
                        (_, false) => 0.0,
                        (PerfectDependence::Comonotone, true) => 1.0,
                        (PerfectDependence::Countermonotone, true) => reversal_sign(basis, j),
                    })
                    .collect()
            })
            .collect();
        return Ok(BasisCorrMatrix {
            basis: basis.kind,
            entries,
            std_errors: None,
            source: MatrixSource::Analytic,
            error_estimate: 0.0,
        });
    }
    match method {
        Method::HardyKrause { nodes } => {
            let fine = hk_matrix(copula, basis, order, nodes)?;
            let coarse = hk_matrix(copula, basis, order, nodes * 3 / 4)?;
            let err = (&fine - &coarse).abs().max();
            if err > 1e-6 {
                log::warn!(
                    "quadrature error estimate {err:.1e} for {}; the copula may not be smooth, \
                     consider more nodes or Monte Carlo",
                    copula.describe()
                );
            }
            Ok(BasisCorrMatrix {
                basis: basis.kind,
                entries: rows_of(&fine),
                std_errors: None,
                source: MatrixSource::Quadrature { nodes },
                error_estimate: err,
            })
        }
        Method::MonteCarlo { n, seed } => {
            if n < 2 {
                return Err(Error::TooFewObservations { needed: 2, got: n });
            }
            let len = order * order;
            let (s, s2) = mc_fold(
                copula,
                n,
                seed,
                || (vec![0.0; len], vec![0.0; len]),
                |a, u, v| {
                    let bu: Vec<f64> = (1..=order).map(|j| basis.value(j, u)).collect();
                    let bv: Vec<f64> = (1..=order).map(|k| basis.value(k, v)).collect();
                    for (j, x) in bu.iter().enumerate() {
                        for (k, y) in bv.iter().enumerate() {
                            let p = x * y;
                            a.0[j * order + k] += p;
                            a.1[j * order + k] += p * p;
                        }
                    }
                },
                |a, b| {
                    a.0.iter_mut().zip(b.0).for_each(|(x, y)| *x += y);
                    a.1.iter_mut().zip(b.1).for_each(|(x, y)| *x += y);
                },
            );
            let nf = n as f64;
            let mut entries = vec![vec![0.0; order]; order];
            let mut ses = vec![vec![0.0; order]; order];
            for j in 0..order {
                for k in 0..order {
                    let m = s[j * order + k] / nf;
                    let var = ((s2[j * order + k] - nf * m * m) / (nf - 1.0)).max(0.0);
                    entries[j][k] = m;
                    ses[j][k] = (var / nf).sqrt();
                }
            }
            Ok(BasisCorrMatrix {
                basis: basis.kind,
                entries,
                std_errors: Some(ses),
                source: MatrixSource::MonteCarlo { n, seed },
                error_estimate: 0.0,
            })
        }
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|k| m[(i, k)]).collect())
        .collect()
}

fn hk_matrix(
    copula: &dyn Copula,
    basis: CorrelationBasis,
    order: usize,
    nodes: usize,
) -> Result<DMatrix<f64>> {
    let (us, w) = piece_nodes(&[0.0, 1.0], nodes);
    let c = cdf_grid(copula, &us, &us)?;
    let d = DMatrix::from_fn(order, us.len(), |j, i| w[i] * basis.slope(j + 1, us[i]));
    let ends = DMatrix::from_fn(order, 1, |j, _| basis.value(j + 1, 1.0));
    Ok(&d * c * d.transpose() - &ends * ends.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::CopulaSpec;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn lam(j: usize) -> PiecewiseMonotone {
        PiecewiseMonotone::basis(CorrelationBasis::LEGENDRE, j).unwrap()
    }

    #[test]
    fn independence_gives_zero() {
        for (j, k) in [(1, 1), (2, 3), (4, 4)] {
            let m = gen_spearman(
                &CopulaSpec::Independence,
                &lam(j),
                &lam(k),
                Method::default(),
            )
            .unwrap();
            assert!(m.value.abs() < 1e-8, "{j} {k} {}", m.value);
        }
    }

    #[test]
    fn perfect_dependence_is_analytic() {
        for basis in [
            CorrelationBasis::LEGENDRE,
            CorrelationBasis::COSINE,
            CorrelationBasis::FOURIER,
        ] {
            let p = basis_corr_matrix(&CopulaSpec::Countermonotone, basis, 6, Method::default())
                .unwrap();
            for j in 1..=6 {
                let g = PiecewiseMonotone::basis(basis, j).unwrap();
                // Cross-check the reversal signs against quadrature.
                let direct = perfect_measure(PerfectDependence::Countermonotone, &g, &g);
                assert_abs_diff_eq!(p.get(j, j), direct, epsilon = 1e-10);
            }
        }
        let m = basis_corr_matrix(
            &CopulaSpec::Comonotone,
            CorrelationBasis::LEGENDRE,
            3,
            Method::default(),
        )
        .unwrap();
        assert_eq!(
            m.entries,
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
        let w = gen_spearman(
            &CopulaSpec::Countermonotone,
            &lam(2),
            &lam(3),
            Method::default(),
        )
        .unwrap();
        assert!(w.value.abs() < 1e-12);
    }

    #[test]
    fn gaussian_spearman_matches_closed_form() {
        // ρ_S = (6/π) asin(ρ/2) for the Gaussian copula.
        let exact = 6.0 / PI * (0.25f64).asin();
        assert_abs_diff_eq!(exact, 0.482_584_3, epsilon = 1e-6);
        let c = CopulaSpec::Gaussian { rho: 0.5 };
        let hk = gen_spearman(&c, &lam(1), &lam(1), Method::default()).unwrap();
        assert!((hk.value - exact).abs() < 1e-8, "{}", hk.value);
        let mc = gen_spearman(&c, &lam(1), &lam(1), Method::monte_carlo(1_000_000, 11)).unwrap();
        assert!((mc.value - exact).abs() < 3.0 * mc.error, "{mc:?}");
    }

    #[test]
    fn frank_spearman_matches_debye_formula() {
        // ρ_S = 1 − 12/θ (D1(θ) − D2(θ)), D_k(θ) = k/θ^k ∫₀^θ t^k/(e^t − 1) dt.
        let theta: f64 = 5.0;
        let debye = |k: i32| {
            let f = |t: f64| {
                if t == 0.0 {
                    if k == 1 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    t.powi(k) / t.exp_m1()
                }
            };
            k as f64 / theta.powi(k)
                * quad::integrate_adaptive(f, 0.0, theta, &[], 1e-14, 1e-14).value
        };
        let exact = 1.0 - 12.0 / theta * (debye(1) - debye(2));
        let hk = gen_spearman(
            &CopulaSpec::Frank { theta },
            &lam(1),
            &lam(1),
            Method::default(),
        )
        .unwrap();
        assert!((hk.value - exact).abs() < 1e-9, "{} {exact}", hk.value);
    }

    #[test]
    fn matrix_methods_agree() {
        for c in [
            CopulaSpec::Frank { theta: 5.0 },
            CopulaSpec::Clayton {
                theta: 2.0,
                rotation: Default::default(),
            },
            CopulaSpec::Gumbel { theta: 2.0 },
        ] {
            let hk =
                basis_corr_matrix(&c, CorrelationBasis::LEGENDRE, 2, Method::default()).unwrap();
            let mc = basis_corr_matrix(
                &c,
                CorrelationBasis::LEGENDRE,
                2,
                Method::monte_carlo(1_000_000, 3),
            )
            .unwrap();
            for j in 1..=2 {
                for k in 1..=2 {
                    let d = (hk.get(j, k) - mc.get(j, k)).abs();
                    assert!(d < 4.0 * mc.std_error(j, k), "{c} {j}{k} {d}");
                }
            }
            assert!(hk.error_estimate < 1e-6, "{c} {}", hk.error_estimate);
            assert!(hk.psd_check().passes(1e-8));
            assert!(mc.psd_check().passes(1e-8));
            // The single-entry path agrees with the matrix path.
            let single = gen_spearman(&c, &lam(2), &lam(1), Method::default()).unwrap();
            assert_abs_diff_eq!(single.value, hk.get(2, 1), epsilon = 1e-7);
        }
    }

    #[test]
    fn t_copula_has_no_quadrature_path() {
        let c = CopulaSpec::StudentT { rho: 0.5, nu: 2.0 };
        let err = gen_spearman(&c, &lam(1), &lam(1), Method::default()).unwrap_err();
        assert!(matches!(err, Error::MissingCdf(_)));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let c = CopulaSpec::Clayton {
            theta: 1.0,
            rotation: Default::default(),
        };
        let m = Method::monte_carlo(50_000, 8);
        let a = basis_corr_matrix(&c, CorrelationBasis::COSINE, 3, m).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool
            .install(|| basis_corr_matrix(&c, CorrelationBasis::COSINE, 3, m))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn order_limits() {
        let c = CopulaSpec::Independence;
        assert!(basis_corr_matrix(&c, CorrelationBasis::LEGENDRE, 13, Method::default()).is_err());
        assert!(basis_corr_matrix(&c, CorrelationBasis::LEGENDRE, 0, Method::default()).is_err());
    }

    #[test]
    fn non_standardized_input_is_standardized() {
        let g = PiecewiseMonotone::identity();
        let c = CopulaSpec::Gaussian { rho: 0.5 };
        let a = gen_spearman(&c, &g, &g, Method::default()).unwrap();
        let b = gen_spearman(&c, &lam(1), &lam(1), Method::default()).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-9);
    }
}
