use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::BasisCorrMatrix;
use crate::basis::CorrelationBasis;
use crate::error::{Error, Result};
use crate::transform::PiecewiseMonotone;

/// Coefficient vectors of the transformations maximizing the approximate
/// correlation `α_gᵀ P α_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elicited {
    pub alpha_g: Vec<f64>,
    pub alpha_h: Vec<f64>,
    pub rho: f64,
    pub basis: crate::basis::BasisKind,
}

impl Elicited {
    /// `g = Σ α_{g,j} B_j` and `h = Σ α_{h,k} B_k`.
    pub fn functions(&self) -> Result<(PiecewiseMonotone, PiecewiseMonotone)> {
        let b = CorrelationBasis::from(self.basis);
        Ok((
            PiecewiseMonotone::combination(b, &self.alpha_g)?,
            PiecewiseMonotone::combination(b, &self.alpha_h)?,
        ))
    }
}

const TIE_TOL: f64 = 1e-10;

/// Top singular triple of `P`.
///
/// When the top singular value is repeated, `α_h` is the normalized
/// projection of the lowest-index unit vector onto the tied right subspace.
/// The pair is then flipped jointly so the first nonzero entry of `α_g` is
/// positive.
pub fn maximize_gen_spearman(p: &BasisCorrMatrix) -> Result<Elicited> {
    let m = p.to_dmatrix();
    let n = m.nrows();
    if n == 0 {
        return Err(Error::param("empty matrix"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested");
    let sigma = svd.singular_values.max();
    if sigma <= 0.0 {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        return Ok(Elicited {
            alpha_g: e.clone(),
            alpha_h: e,
            rho: 0.0,
            basis: p.basis,
        });
    }
    let tied: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] >= sigma - TIE_TOL * sigma.max(1.0))
        .collect();
    let beta: DVector<f64> = if tied.len() == 1 {
        vt.row(tied[0]).transpose()
    } else {
        let basis = DMatrix::from_fn(n, tied.len(), |r, c| vt[(tied[c], r)]);
        (0..n)
            .find_map(|i| {
                let proj = &basis * basis.row(i).transpose();
                let norm = proj.norm();
                (norm > 1e-8).then(|| proj / norm)
            })
            .expect("a nonempty subspace has a nonzero coordinate projection")
    };
    let mut alpha = &m * &beta / sigma;
    alpha /= alpha.norm();
    let mut beta = beta;
    let first = alpha.iter().position(|x| x.abs() > 1e-12).unwrap_or(0);
    if alpha[first] < 0.0 {
        alpha = -alpha;
        beta = -beta;
    }
    let rho = alpha.dot(&(&m * &beta));
    Ok(Elicited {
        alpha_g: alpha.iter().copied().collect(),
        alpha_h: beta.iter().copied().collect(),
        rho,
        basis: p.basis,
    })
}

/// How close to zero or equal two entries must be.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tolerance {
    Absolute(f64),
    /// Multiples of the recorded standard errors.
    StandardErrors(f64),
}

/// Zero and equality patterns of a basis-correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryFlags {
    /// `P ≈ Pᵀ`.
    pub exchangeable: bool,
    /// Columns with odd `k` vanish.
    pub h_symmetric: bool,
    /// Rows with odd `j` vanish.
    pub v_symmetric: bool,
    /// Entries with `j + k` odd vanish.
    pub radially_symmetric: bool,
    /// Entries with `j` or `k` odd vanish.
    pub jointly_symmetric: bool,
}

/// Reads symmetry properties off a matrix in a natural basis.
pub fn symmetry_report(p: &BasisCorrMatrix, tol: Tolerance) -> SymmetryFlags {
    let n = p.order();
    let zero = |j: usize, k: usize| {
        let t = match tol {
            Tolerance::Absolute(t) => t,
            Tolerance::StandardErrors(m) => m * p.std_error(j, k),
        };
        p.get(j, k).abs() <= t
    };
    let equal = |j: usize, k: usize| {
        let t = match tol {
            Tolerance::Absolute(t) => t,
            Tolerance::StandardErrors(m) => m * p.std_error(j, k).hypot(p.std_error(k, j)),
        };
        (p.get(j, k) - p.get(k, j)).abs() <= t
    };
    let cells = || (1..=n).flat_map(move |j| (1..=n).map(move |k| (j, k)));
    SymmetryFlags {
        exchangeable: cells().all(|(j, k)| equal(j, k)),
        h_symmetric: cells()
            .filter(|&(_, k)| k % 2 == 1)
            .all(|(j, k)| zero(j, k)),
        v_symmetric: cells()
            .filter(|&(j, _)| j % 2 == 1)
            .all(|(j, k)| zero(j, k)),
        radially_symmetric: cells()
            .filter(|&(j, k)| (j + k) % 2 == 1)
            .all(|(j, k)| zero(j, k)),
        jointly_symmetric: cells()
            .filter(|&(j, k)| j % 2 == 1 || k % 2 == 1)
            .all(|(j, k)| zero(j, k)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisKind;
    use crate::numeric::rng;
    use rand::Rng;

    fn matrix(entries: Vec<Vec<f64>>) -> BasisCorrMatrix {
        BasisCorrMatrix::from_entries(BasisKind::Legendre, entries).unwrap()
    }

    #[test]
    fn identity_ties_go_to_lowest_index() {
        let e = maximize_gen_spearman(&matrix(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]))
        .unwrap();
        assert!((e.rho - 1.0).abs() < 1e-12);
        for v in [&e.alpha_g, &e.alpha_h] {
            assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12 && v[2].abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_picks_largest() {
        let e = maximize_gen_spearman(&matrix(vec![vec![0.2, 0.0], vec![0.0, 0.9]])).unwrap();
        assert!((e.rho - 0.9).abs() < 1e-12);
        assert!((e.alpha_g[1] - 1.0).abs() < 1e-12 && (e.alpha_h[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_entries_keep_positive_value() {
        let e = maximize_gen_spearman(&matrix(vec![vec![-0.8, 0.1], vec![0.0, 0.3]])).unwrap();
        assert!(e.rho > 0.79);
        assert!(e.alpha_g[0] > 0.0);
    }

    #[test]
    fn beats_random_search() {
        let mut r = rng::stream(17, 0);
        let entries: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..4).map(|_| r.random::<f64>() - 0.5).collect())
            .collect();
        let p = matrix(entries);
        let e = maximize_gen_spearman(&p).unwrap();
        let m = p.to_dmatrix();
        let unit = |r: &mut rng::SimRng| {
            let v = DVector::from_fn(4, |_, _| r.random::<f64>() - 0.5);
            let n = v.norm();
            v / n
        };
        for _ in 0..10_000 {
            let (a, b) = (unit(&mut r), unit(&mut r));
            assert!(e.rho >= a.dot(&(&m * b)) - 1e-12);
        }
        let a = DVector::from_vec(e.alpha_g.clone());
        let b = DVector::from_vec(e.alpha_h.clone());
        assert!((a.dot(&(&m * &b)) - e.rho).abs() < 1e-12);
        assert!((a.norm() - 1.0).abs() < 1e-12 && (b.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_all_symmetries() {
        let f = symmetry_report(&matrix(vec![vec![0.0; 3]; 3]), Tolerance::Absolute(1e-12));
        assert!(f.exchangeable && f.h_symmetric && f.v_symmetric);
        assert!(f.radially_symmetric && f.jointly_symmetric);
    }

    #[test]
    fn chessboard_is_radial_only() {
        let p = matrix(vec![vec![0.5, 0.0], vec![0.0, 0.2]]);
        let f = symmetry_report(&p, Tolerance::Absolute(1e-12));
        assert!(f.radially_symmetric && f.exchangeable);
        assert!(!f.jointly_symmetric && !f.h_symmetric && !f.v_symmetric);
        let p = matrix(vec![vec![0.0, 0.4], vec![0.0, 0.2]]);
        let f = symmetry_report(&p, Tolerance::Absolute(1e-12));
        assert!(f.h_symmetric && !f.v_symmetric && !f.exchangeable);
    }

    #[test]
    fn elicited_functions_rebuild() {
        let e = maximize_gen_spearman(&matrix(vec![vec![0.1, 0.0], vec![0.0, 0.7]])).unwrap();
        let (g, _) = e.functions().unwrap();
        assert_eq!(g.branch_count(), 2);
    }
}
