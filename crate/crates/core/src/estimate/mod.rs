//! Rank-based estimators of generalized Spearman correlations.

mod study;

pub use study::{
    asymptotic_equivalence_check, calibrate, simulation_study, EquivalenceRow, StudyCell,
    StudyConfig, StudyFamily, StudyTable,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;

use crate::basis::CorrelationBasis;
use crate::error::{Error, Result};
use crate::numeric::stats::pearson;
use crate::population::{BasisCorrMatrix, MatrixSource, MAX_MATRIX_ORDER};
use crate::transform::PiecewiseMonotone;

/// What to do when the data contain ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    Reject,
    /// Assign average ranks and record a warning.
    #[default]
    MidrankWarn,
}

/// Componentwise ranks of a bivariate sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSample {
    ranks_x: Vec<f64>,
    ranks_y: Vec<f64>,
    tie_policy: TiePolicy,
    had_ties: bool,
    provenance: String,
}

fn ranks_of(values: &[f64], axis: &'static str, policy: TiePolicy) -> Result<(Vec<f64>, bool)> {
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(axis, *bad, "finite reals"));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = false;
    let mut i = 0;
    while i < idx.len() {
        let mut k = i;
        while k + 1 < idx.len() && values[idx[k + 1]] == values[idx[i]] {
            k += 1;
        }
        if k > i {
            ties = true;
            if policy == TiePolicy::Reject {
                return Err(Error::Ties { axis });
            }
        }
        let mid = (i + k) as f64 / 2.0 + 1.0;
        for &j in &idx[i..=k] {
            ranks[j] = mid;
        }
        i = k + 1;
    }
    Ok((ranks, ties))
}

/// Ranks each coordinate; ties are handled per `policy`.
pub fn rank(data: &[(f64, f64)], policy: TiePolicy) -> Result<RankedSample> {
    if data.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: data.len(),
        });
    }
    let xs: Vec<f64> = data.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = data.iter().map(|p| p.1).collect();
    let (ranks_x, tx) = ranks_of(&xs, "x", policy)?;
    let (ranks_y, ty) = ranks_of(&ys, "y", policy)?;
    if tx || ty {
        log::warn!("data contain ties; using midranks");
    }
    let mut hasher = Sha256::new();
    for (x, y) in data {
        hasher.update(x.to_le_bytes());
        hasher.update(y.to_le_bytes());
    }
    Ok(RankedSample {
        ranks_x,
        ranks_y,
        tie_policy: policy,
        had_ties: tx || ty,
        provenance: hex::encode(hasher.finalize()),
    })
}

impl RankedSample {
    /// Wraps given rank vectors, which must be permutations of `1..=n`.
    pub fn from_ranks(ranks_x: &[usize], ranks_y: &[usize]) -> Result<Self> {
        if ranks_x.len() != ranks_y.len() {
            return Err(Error::DimensionMismatch {
                expected: ranks_x.len(),
                got: ranks_y.len(),
            });
        }
        let n = ranks_x.len();
        if n < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: n });
        }
        for r in [ranks_x, ranks_y] {
            let mut seen = vec![false; n];
            for &x in r {
                if x == 0 || x > n || std::mem::replace(&mut seen[x - 1], true) {
                    return Err(Error::param("ranks must be a permutation of 1..=n"));
                }
            }
        }
        Ok(RankedSample {
            ranks_x: ranks_x.iter().map(|&r| r as f64).collect(),
            ranks_y: ranks_y.iter().map(|&r| r as f64).collect(),
            tie_policy: TiePolicy::Reject,
            had_ties: false,
            provenance: String::from("ranks"),
        })
    }

    pub fn len(&self) -> usize {
        self.ranks_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks_x.is_empty()
    }

    pub fn ranks_x(&self) -> &[f64] {
        &self.ranks_x
    }

    pub fn ranks_y(&self) -> &[f64] {
        &self.ranks_y
    }

    pub fn tie_policy(&self) -> TiePolicy {
        self.tie_policy
    }

    /// Whether midranks were assigned.
    pub fn had_ties(&self) -> bool {
        self.had_ties
    }

    /// SHA-256 of the raw data.
    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// `(R_i/(n+1), S_i/(n+1))`.
    pub fn pseudo_observations(&self) -> Vec<(f64, f64)> {
        let d = self.len() as f64 + 1.0;
        self.ranks_x
            .iter()
            .zip(&self.ranks_y)
            .map(|(r, s)| (r / d, s / d))
            .collect()
    }

    /// The sample with the coordinates exchanged.
    pub fn swapped(&self) -> Self {
        RankedSample {
            ranks_x: self.ranks_y.clone(),
            ranks_y: self.ranks_x.clone(),
            ..self.clone()
        }
    }
}

/// Estimator types `T0`–`T5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Mean of `g(R/n)h(S/n)`.
    T0,
    /// Mean of `g(R/(n+1))h(S/(n+1))`.
    T1,
    /// Mean of `g((R−½)/n)h((S−½)/n)`.
    T2,
    /// Pearson correlation at `R/(n+1)`.
    T3,
    /// Pearson correlation at `(R−½)/n`.
    T4,
    /// Integral against the checkerboard copula.
    T5,
}

impl Estimator {
    pub const ALL: [Estimator; 6] = [
        Estimator::T0,
        Estimator::T1,
        Estimator::T2,
        Estimator::T3,
        Estimator::T4,
        Estimator::T5,
    ];

    fn point(self, r: f64, n: f64) -> f64 {
        match self {
            Estimator::T0 => r / n,
            Estimator::T1 | Estimator::T3 => r / (n + 1.0),
            Estimator::T2 | Estimator::T4 | Estimator::T5 => (r - 0.5) / n,
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = Estimator::ALL
            .iter()
            .position(|e| e == self)
            .expect("listed");
        write!(f, "T{i}")
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        Estimator::ALL
            .iter()
            .copied()
            .find(|e| e.to_string().to_ascii_lowercase() == t)
            .ok_or_else(|| Error::param(format!("unknown estimator '{s}' (expected t0..t5)")))
    }
}

fn combine(est: Estimator, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    match est {
        Estimator::T3 | Estimator::T4 => pearson(a, b),
        Estimator::T5 => n * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>(),
        _ => a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / n,
    }
}

fn scores(
    est: Estimator,
    ranks: &[f64],
    value: impl Fn(f64) -> f64,
    integral: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let n = ranks.len() as f64;
    ranks
        .iter()
        .map(|&r| match est {
            Estimator::T5 => integral(r / n) - integral((r - 1.0) / n),
            _ => value(est.point(r, n).clamp(0.0, 1.0)),
        })
        .collect()
}

/// `ρ̂_{g,h}` of type `est`.
///
/// Inputs are standardized first for the types that need it. `T5` needs
/// closed-form antiderivatives.
pub fn estimate(
    sample: &RankedSample,
    g: &PiecewiseMonotone,
    h: &PiecewiseMonotone,
    est: Estimator,
) -> Result<f64> {
    if est == Estimator::T5 && !(g.has_antiderivative() && h.has_antiderivative()) {
        return Err(Error::param(
            "T5 needs antiderivatives of both transformations",
        ));
    }
    let (g, h) = match est {
        Estimator::T3 | Estimator::T4 => (g.clone(), h.clone()),
        _ => (g.ensure_standardized()?, h.ensure_standardized()?),
    };
    let a = scores(est, &sample.ranks_x, |u| g.eval(u), |x| g.integral(x));
    let b = scores(est, &sample.ranks_y, |u| h.eval(u), |x| h.integral(x));
    Ok(combine(est, &a, &b))
}

/// Estimated basis-correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedMatrix {
    pub estimator: Estimator,
    pub n: usize,
    pub matrix: BasisCorrMatrix,
}

impl EstimatedMatrix {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.matrix.get(j, k)
    }
}

/// All `ρ̂_{jk}`, `j, k = 1..=order`, of type `est`.
pub fn estimate_matrix(
    sample: &RankedSample,
    basis: CorrelationBasis,
    order: usize,
    est: Estimator,
) -> Result<EstimatedMatrix> {
    if order == 0 || order > MAX_MATRIX_ORDER {
        return Err(Error::UnsupportedOrder {
            order,
            max: MAX_MATRIX_ORDER,
        });
    }
    let table = |ranks: &[f64]| -> Vec<Vec<f64>> {
        (1..=order)
            .map(|j| {
                scores(
                    est,
                    ranks,
                    |u| basis.value(j, u),
                    |x| basis.antiderivative(j, x),
                )
            })
            .collect()
    };
    let a = table(&sample.ranks_x);
    let b = table(&sample.ranks_y);
    let entries = a
        .iter()
        .map(|aj| b.iter().map(|bk| combine(est, aj, bk)).collect())
        .collect();
    Ok(EstimatedMatrix {
        estimator: est,
        n: sample.len(),
        matrix: BasisCorrMatrix {
            basis: basis.kind,
            entries,
            std_errors: None,
            source: MatrixSource::Estimated {
                estimator: est.to_string(),
                n: sample.len(),
            },
            error_estimate: 0.0,
        },
    })
}

/// `(1/N²) Σ |Â_{jk} − B_{jk}|`.
pub fn matrix_distance(a: &EstimatedMatrix, b: &BasisCorrMatrix) -> Result<f64> {
    let n = a.matrix.order();
    if b.order() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.order(),
        });
    }
    let total: f64 = a
        .matrix
        .entries
        .iter()
        .flatten()
        .zip(b.entries.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .sum();
    Ok(total / (n * n) as f64)
}
