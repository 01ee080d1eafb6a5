//! Piecewise continuous, strictly monotone functions on [0, 1].

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::basis::{BasisKind, CorrelationBasis};
use crate::error::{Error, Result};
use crate::numeric::{quad, roots};

/// Shared scalar function handle.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Serializable description of a transformation `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformSpec {
    /// `g(u) = u`.
    Identity,
    /// A basis function `B_order`.
    Basis { basis: BasisKind, order: usize },
    /// `Σ_j coefficients[j-1] · B_j`.
    Combination {
        basis: BasisKind,
        coefficients: Vec<f64>,
    },
    /// `((δ − u)/δ)^q` left of `δ`, `((u − δ)/(1 − δ))^p` right of it.
    AsymmetricU { delta: f64, p: f64, q: f64 },
    /// Linear pieces between `breaks`; piece `m` runs from `values[m][0]`
    /// to `values[m][1]` and may jump at a break.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<[f64; 2]>,
    },
    /// `(g − E g) / sd(g)` of the inner transformation.
    Standardized { inner: Box<TransformSpec> },
}

impl TransformSpec {
    pub fn build(&self) -> Result<PiecewiseMonotone> {
        match self {
            TransformSpec::Identity => Ok(PiecewiseMonotone::identity()),
            TransformSpec::Basis { basis, order } => {
                PiecewiseMonotone::basis(CorrelationBasis::from(*basis), *order)
            }
            TransformSpec::Combination {
                basis,
                coefficients,
            } => PiecewiseMonotone::combination(CorrelationBasis::from(*basis), coefficients),
            TransformSpec::AsymmetricU { delta, p, q } => {
                PiecewiseMonotone::asymmetric_u(*delta, *p, *q)
            }
            TransformSpec::Piecewise { breaks, values } => {
                PiecewiseMonotone::piecewise_linear(breaks, values)
            }
            TransformSpec::Standardized { inner } => inner.build()?.standardize(),
        }
    }
}

/// A function on [0, 1] with a finite partition `0 = a_0 < … < a_M = 1` into
/// strictly monotone branches.
#[derive(Clone)]
pub struct PiecewiseMonotone {
    f: RealFn,
    df: RealFn,
    exact_derivative: bool,
    antiderivative: Option<RealFn>,
    breaks: Vec<f64>,
    increasing: Vec<bool>,
    ends: Vec<(f64, f64)>,
    spec: Option<TransformSpec>,
    moments: Arc<OnceLock<(f64, f64)>>,
}

impl fmt::Debug for PiecewiseMonotone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseMonotone")
            .field("breaks", &self.breaks)
            .field("increasing", &self.increasing)
            .field("spec", &self.spec)
            .finish()
    }
}

const GRID_PER_BRANCH: usize = 64;

fn finite_difference(f: RealFn) -> RealFn {
    Arc::new(move |u: f64| {
        let h = 1e-7;
        let (a, b) = ((u - h).max(0.0), (u + h).min(1.0));
        (f(b) - f(a)) / (b - a)
    })
}

fn validate_breaks(breaks: &[f64]) -> Result<()> {
    if breaks.len() < 2 || breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
        return Err(Error::param("partition must start at 0 and end at 1"));
    }
    if breaks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("partition must be strictly increasing"));
    }
    Ok(())
}

impl PiecewiseMonotone {
    /// Builds a continuous transformation from `f` and its partition.
    ///
    /// Each branch is checked for strict monotonicity on a grid. A function
    /// that is constant on the whole interval is a degenerate transform.
    pub fn from_fn(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        breaks: Vec<f64>,
    ) -> Result<Self> {
        let f: RealFn = Arc::new(f);
        let ends = breaks.windows(2).map(|w| (f(w[0]), f(w[1]))).collect();
        Self::from_parts(f.clone(), None, breaks, ends, |_, t| f(t))
    }

    /// Builds a continuous transformation, locating its turning points from
    /// sign changes of `df` on a fine grid.
    pub fn from_fn_auto(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let n = 4096;
        let mut breaks = vec![0.0];
        let mut prev = df(0.5 / n as f64);
        let mut prev_u = 0.5 / n as f64;
        for i in 1..n {
            let u = (i as f64 + 0.5) / n as f64;
            let d = df(u);
            if d != 0.0 && prev != 0.0 && d.signum() != prev.signum() {
                breaks.push(roots::brent(&df, prev_u, u, 1e-16));
            }
            if d != 0.0 {
                prev = d;
                prev_u = u;
            }
        }
        breaks.push(1.0);
        Ok(Self::from_fn(f, breaks)?.with_derivative(df))
    }

    fn from_parts(
        f: RealFn,
        df: Option<RealFn>,
        breaks: Vec<f64>,
        ends: Vec<(f64, f64)>,
        branch_eval: impl Fn(usize, f64) -> f64,
    ) -> Result<Self> {
        validate_breaks(&breaks)?;
        let mut increasing = Vec::with_capacity(breaks.len() - 1);
        let mut samples = Vec::with_capacity(breaks.len() - 1);
        for (m, w) in breaks.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let vals: Vec<f64> = (0..=GRID_PER_BRANCH)
                .map(|i| {
                    let t = a + (b - a) * (i as f64 + 0.5) / (GRID_PER_BRANCH as f64 + 1.0);
                    branch_eval(m, t)
                })
                .collect();
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::NotPiecewiseMonotone(format!(
                    "non-finite value on branch {m}"
                )));
            }
            samples.push(vals);
        }
        let first = samples[0][0];
        if samples.iter().flatten().all(|&v| v == first)
            && ends.iter().all(|&(a, b)| a == first && b == first)
        {
            return Err(Error::DegenerateTransform("constant function".into()));
        }
        for (m, vals) in samples.iter().enumerate() {
            let (lo, hi) = ends[m];
            let up = hi > lo;
            let strict = hi != lo
                && vals
                    .windows(2)
                    .all(|p| if up { p[1] > p[0] } else { p[1] < p[0] });
            if !strict {
                return Err(Error::NotPiecewiseMonotone(format!(
                    "branch {m} on [{}, {}] is not strictly monotone",
                    breaks[m],
                    breaks[m + 1]
                )));
            }
            increasing.push(up);
        }
        let (df, exact) = match df {
            Some(d) => (d, true),
            None => (finite_difference(f.clone()), false),
        };
        Ok(PiecewiseMonotone {
            f,
            df,
            exact_derivative: exact,
            antiderivative: None,
            breaks,
            increasing,
            ends,
            spec: None,
            moments: Arc::new(OnceLock::new()),
        })
    }

    /// Attaches an exact derivative handle.
    pub fn with_derivative(mut self, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.df = Arc::new(df);
        self.exact_derivative = true;
        self
    }

    /// Attaches an exact antiderivative `x ↦ ∫₀ˣ g`.
    pub fn with_antiderivative(mut self, i: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.antiderivative = Some(Arc::new(i));
        self
    }

    fn with_spec(mut self, spec: TransformSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn identity() -> Self {
        PiecewiseMonotone::from_fn(|u| u, vec![0.0, 1.0])
            .expect("identity is monotone")
            .with_derivative(|_| 1.0)
            .with_antiderivative(|x| 0.5 * x * x)
            .with_spec(TransformSpec::Identity)
    }

    /// The basis function `B_j`, `j ≥ 1`.
    pub fn basis(basis: CorrelationBasis, j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::DegenerateTransform("B_0 is constant".into()));
        }
        let mut breaks = vec![0.0];
        breaks.extend(basis.turning_points(j)?);
        breaks.push(1.0);
        let g = PiecewiseMonotone::from_fn(move |u| basis.value(j, u), breaks)?
            .with_derivative(move |u| basis.slope(j, u))
            .with_antiderivative(move |x| basis.antiderivative(j, x))
            .with_spec(TransformSpec::Basis {
                basis: basis.kind,
                order: j,
            });
        let _ = g.moments.set((0.0, 1.0));
        Ok(g)
    }

    /// `Σ_j c_{j} B_j` for `j = 1..=coefficients.len()`.
    pub fn combination(basis: CorrelationBasis, coefficients: &[f64]) -> Result<Self> {
        if coefficients.len() > crate::basis::MAX_ORDER {
            return Err(Error::UnsupportedOrder {
                order: coefficients.len(),
                max: crate::basis::MAX_ORDER,
            });
        }
        let c: Arc<[f64]> = coefficients.into();
        let norm2: f64 = c.iter().map(|x| x * x).sum();
        if norm2 == 0.0 {
            return Err(Error::DegenerateTransform(
                "all coefficients are zero".into(),
            ));
        }
        let (c1, c2, c3) = (c.clone(), c.clone(), c.clone());
        let g = PiecewiseMonotone::from_fn_auto(
            move |u| {
                c1.iter()
                    .enumerate()
                    .map(|(i, a)| a * basis.value(i + 1, u))
                    .sum()
            },
            move |u| {
                c2.iter()
                    .enumerate()
                    .map(|(i, a)| a * basis.slope(i + 1, u))
                    .sum()
            },
        )?
        .with_antiderivative(move |x| {
            c3.iter()
                .enumerate()
                .map(|(i, a)| a * basis.antiderivative(i + 1, x))
                .sum()
        })
        .with_spec(TransformSpec::Combination {
            basis: basis.kind,
            coefficients: coefficients.to_vec(),
        });
        let _ = g.moments.set((0.0, norm2));
        Ok(g)
    }

    /// The asymmetric u-shaped family with minimum at `delta`.
    pub fn asymmetric_u(delta: f64, p: f64, q: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain("delta", delta, "(0, 1)"));
        }
        if !(p > 0.0 && q > 0.0) {
            return Err(Error::param("exponents p and q must be positive"));
        }
        let f = move |u: f64| {
            if u <= delta {
                ((delta - u) / delta).powf(q)
            } else {
                ((u - delta) / (1.0 - delta)).powf(p)
            }
        };
        let df = move |u: f64| {
            if u <= delta {
                -q / delta * ((delta - u) / delta).powf(q - 1.0)
            } else {
                p / (1.0 - delta) * ((u - delta) / (1.0 - delta)).powf(p - 1.0)
            }
        };
        let anti = move |x: f64| {
            let left = delta / (q + 1.0) * (1.0 - ((delta - x.min(delta)) / delta).powf(q + 1.0));
            let right = if x > delta {
                (1.0 - delta) / (p + 1.0) * ((x - delta) / (1.0 - delta)).powf(p + 1.0)
            } else {
                0.0
            };
            left + right
        };
        Ok(PiecewiseMonotone::from_fn(f, vec![0.0, delta, 1.0])?
            .with_derivative(df)
            .with_antiderivative(anti)
            .with_spec(TransformSpec::AsymmetricU { delta, p, q }))
    }

    /// Linear pieces, possibly discontinuous at the breaks.
    pub fn piecewise_linear(breaks: &[f64], values: &[[f64; 2]]) -> Result<Self> {
        if values.len() + 1 != breaks.len() {
            return Err(Error::DimensionMismatch {
                expected: breaks.len().saturating_sub(1),
                got: values.len(),
            });
        }
        validate_breaks(breaks)?;
        let b: Arc<[f64]> = breaks.into();
        let v: Arc<[[f64; 2]]> = values.into();
        let (b1, v1, b2, v2) = (b.clone(), v.clone(), b.clone(), v.clone());
        let eval_piece = move |bk: &[f64], vs: &[[f64; 2]], m: usize, u: f64| {
            let t = (u - bk[m]) / (bk[m + 1] - bk[m]);
            vs[m][0] + t * (vs[m][1] - vs[m][0])
        };
        let f: RealFn = Arc::new(move |u: f64| {
            let m = locate(&b1, u);
            eval_piece(&b1, &v1, m, u)
        });
        let df: RealFn = Arc::new(move |u: f64| {
            let m = locate(&b2, u);
            (v2[m][1] - v2[m][0]) / (b2[m + 1] - b2[m])
        });
        let ends = values.iter().map(|p| (p[0], p[1])).collect();
        let (b3, v3) = (b.clone(), v.clone());
        let g = PiecewiseMonotone::from_parts(f, Some(df), breaks.to_vec(), ends, move |m, u| {
            eval_piece(&b3, &v3, m, u)
        })?;
        Ok(g.with_spec(TransformSpec::Piecewise {
            breaks: breaks.to_vec(),
            values: values.to_vec(),
        }))
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    /// `g'(u)`; a finite-difference approximation when no exact handle exists.
    pub fn derivative(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    pub fn has_exact_derivative(&self) -> bool {
        self.exact_derivative
    }

    pub fn has_antiderivative(&self) -> bool {
        self.antiderivative.is_some()
    }

    /// `∫₀ˣ g`, exact when an antiderivative handle is attached.
    pub fn integral(&self, x: f64) -> f64 {
        match &self.antiderivative {
            Some(i) => i(x),
            None => {
                let f = &self.f;
                quad::integrate_adaptive(|t| f(t), 0.0, x, &self.breaks, 1e-14, 1e-13).value
            }
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn branch_count(&self) -> usize {
        self.increasing.len()
    }

    pub fn is_increasing(&self, m: usize) -> bool {
        self.increasing[m]
    }

    /// One-sided limits `(g(a_{m-1}+), g(a_m−))` of branch `m`.
    pub fn branch_ends(&self, m: usize) -> (f64, f64) {
        self.ends[m]
    }

    /// Open image interval of branch `m`, as `(low, high)`.
    pub fn branch_range(&self, m: usize) -> (f64, f64) {
        let (a, b) = self.ends[m];
        (a.min(b), a.max(b))
    }

    pub fn spec(&self) -> Option<&TransformSpec> {
        self.spec.as_ref()
    }

    /// Continuous across every partition point.
    pub fn is_continuous(&self) -> bool {
        self.ends
            .windows(2)
            .all(|w| (w[0].1 - w[1].0).abs() <= 1e-12 * (1.0 + w[0].1.abs()))
    }

    /// Continuous with branchwise derivative handles: the regularity needed
    /// for the integral form of the correlation and for induced udps.
    pub fn is_regular(&self) -> bool {
        self.is_continuous()
    }

    /// Every interior partition point is a turning point.
    pub fn breaks_are_turning_points(&self) -> bool {
        self.is_continuous() && self.increasing.windows(2).all(|w| w[0] != w[1])
    }

    /// Index of the branch containing `u`; boundary points go to the left branch.
    pub fn branch_of(&self, u: f64) -> usize {
        locate(&self.breaks, u)
    }

    /// Solves `g(u) = y` on branch `m`; `y` must lie in the branch image.
    pub fn branch_root(&self, m: usize, y: f64) -> f64 {
        let (a, b) = (self.breaks[m], self.breaks[m + 1]);
        let f = &self.f;
        let df = &self.df;
        let df_ref: Option<&dyn Fn(f64) -> f64> = if self.exact_derivative {
            Some(&**df)
        } else {
            None
        };
        roots::solve_monotone(&**f, df_ref, y, a, b, self.increasing[m])
    }

    /// All `u` with `g(u) = y`, one per branch whose open image contains `y`.
    pub fn roots(&self, y: f64) -> Vec<(usize, f64)> {
        (0..self.branch_count())
            .filter(|&m| {
                let (lo, hi) = self.branch_range(m);
                y > lo && y < hi
            })
            .map(|m| (m, self.branch_root(m, y)))
            .collect()
    }

    /// Mean and variance of `g(U)` for uniform `U`.
    pub fn moments(&self) -> (f64, f64) {
        *self.moments.get_or_init(|| {
            let f = &self.f;
            let tol = 1e-14;
            let m1 = quad::integrate_adaptive(|t| f(t), 0.0, 1.0, &self.breaks, tol, tol).value;
            let m2 = quad::integrate_adaptive(
                |t| {
                    let v = f(t);
                    v * v
                },
                0.0,
                1.0,
                &self.breaks,
                tol,
                tol,
            )
            .value;
            (m1, m2 - m1 * m1)
        })
    }

    /// Whether `∫g = 0` and `∫g² = 1` within `tol`.
    pub fn is_standardized(&self, tol: f64) -> bool {
        let (m, v) = self.moments();
        m.abs() <= tol && (v - 1.0).abs() <= tol
    }

    /// `(g − E g)/sd(g)`.
    pub fn standardize(&self) -> Result<Self> {
        let (mean, var) = self.moments();
        if var.is_nan() || var <= 1e-14 {
            return Err(Error::DegenerateTransform(format!(
                "variance {var} is not positive"
            )));
        }
        let sd = var.sqrt();
        let (f, df) = (self.f.clone(), self.df.clone());
        let out = PiecewiseMonotone {
            f: Arc::new(move |u| (f(u) - mean) / sd),
            df: Arc::new(move |u| df(u) / sd),
            exact_derivative: self.exact_derivative,
            antiderivative: Some({
                let me = self.clone();
                Arc::new(move |x| (me.integral(x) - mean * x) / sd)
            }),
            breaks: self.breaks.clone(),
            increasing: self.increasing.clone(),
            ends: self
                .ends
                .iter()
                .map(|&(a, b)| ((a - mean) / sd, (b - mean) / sd))
                .collect(),
            spec: self.spec.clone().map(|s| match s {
                TransformSpec::Standardized { .. } => s,
                other => TransformSpec::Standardized {
                    inner: Box::new(other),
                },
            }),
            moments: Arc::new(OnceLock::new()),
        };
        let _ = out.moments.set((0.0, 1.0));
        Ok(out)
    }

    /// Returns `self` if already standardized within `1e-8`, else its
    /// standardized version with a warning.
    pub fn ensure_standardized(&self) -> Result<Self> {
        if self.is_standardized(1e-8) {
            Ok(self.clone())
        } else {
            log::warn!("transformation is not standardized; standardizing");
            self.standardize()
        }
    }

    /// `g(1 − u)`: reverses the partition and the branch directions.
    pub fn mirrored(&self) -> Self {
        let f = self.f.clone();
        let df = self.df.clone();
        let mut breaks: Vec<f64> = self.breaks.iter().rev().map(|b| 1.0 - b).collect();
        breaks[0] = 0.0;
        *breaks.last_mut().unwrap() = 1.0;
        let me = self.clone();
        PiecewiseMonotone {
            f: Arc::new(move |u| f(1.0 - u)),
            df: Arc::new(move |u| -df(1.0 - u)),
            exact_derivative: self.exact_derivative,
            antiderivative: Some(Arc::new(move |x| me.integral(1.0) - me.integral(1.0 - x))),
            breaks,
            increasing: self.increasing.iter().rev().map(|d| !d).collect(),
            ends: self.ends.iter().rev().map(|&(a, b)| (b, a)).collect(),
            spec: None,
            moments: self.moments.clone(),
        }
    }

    /// Same function (same spec, or same values on a grid).
    pub fn same_as(&self, other: &PiecewiseMonotone) -> bool {
        if let (Some(a), Some(b)) = (&self.spec, &other.spec) {
            if a == b {
                return true;
            }
        }
        (0..=256).all(|i| {
            let u = i as f64 / 256.0;
            (self.eval(u) - other.eval(u)).abs() <= 1e-13 * (1.0 + self.eval(u).abs())
        })
    }
}

/// Index `m` with `breaks[m] < u ≤ breaks[m+1]`; `u ≤ breaks[0]` maps to 0.
pub(crate) fn locate(breaks: &[f64], u: f64) -> usize {
    let last = breaks.len() - 2;
    match breaks[1..=last].iter().position(|&b| u <= b) {
        Some(m) => m,
        None => last,
    }
}
