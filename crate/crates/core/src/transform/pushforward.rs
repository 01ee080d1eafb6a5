//! Distribution of `g(U)` for uniform `U`.

use super::PiecewiseMonotone;
use crate::numeric::roots;

/// Distribution function, density and quantile of `g(U)`, `U ~ U(0, 1)`.
///
/// The cdf is evaluated from branch inverses. Critical values (branch end
/// values of `g`) split the range into pieces on which the cdf is smooth;
/// they are kept with their probabilities to bracket quantile searches.
#[derive(Debug, Clone)]
pub struct PushforwardDistribution {
    g: PiecewiseMonotone,
    lo: f64,
    hi: f64,
    critical: Vec<f64>,
    critical_probs: Vec<f64>,
}

const CRITICAL_TOL: f64 = 1e-12;

impl PushforwardDistribution {
    pub fn new(g: &PiecewiseMonotone) -> Self {
        let mut critical: Vec<f64> = (0..g.branch_count())
            .flat_map(|m| {
                let (a, b) = g.branch_ends(m);
                [a, b]
            })
            .collect();
        critical.sort_by(f64::total_cmp);
        critical.dedup_by(|a, b| (*a - *b).abs() <= CRITICAL_TOL * (1.0 + b.abs()));
        let lo = critical[0];
        let hi = *critical.last().unwrap();
        let mut d = PushforwardDistribution {
            g: g.clone(),
            lo,
            hi,
            critical,
            critical_probs: Vec::new(),
        };
        d.critical_probs = d.critical.iter().map(|&c| d.cdf(c)).collect();
        d.critical_probs[0] = 0.0;
        *d.critical_probs.last_mut().unwrap() = 1.0;
        d
    }

    pub fn source(&self) -> &PiecewiseMonotone {
        &self.g
    }

    /// Support `[c, d]` of `g(U)`.
    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Sorted distinct branch end values.
    pub fn critical_values(&self) -> &[f64] {
        &self.critical
    }

    /// `F` at each critical value.
    pub fn critical_probabilities(&self) -> &[f64] {
        &self.critical_probs
    }

    /// Whether `x` is within `1e-12` of a critical value.
    pub fn is_critical(&self, x: f64) -> bool {
        self.critical
            .iter()
            .any(|&c| (x - c).abs() <= CRITICAL_TOL * (1.0 + c.abs()))
    }

    /// `P(g(U) ≤ x)`: branches wholly below `x` contribute their length,
    /// branches straddling `x` the part on the correct side of the root.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let g = &self.g;
        let b = g.breaks();
        let mut total = 0.0;
        for m in 0..g.branch_count() {
            let (lo, hi) = g.branch_range(m);
            if x >= hi {
                total += b[m + 1] - b[m];
            } else if x > lo {
                let r = g.branch_root(m, x);
                total += if g.is_increasing(m) {
                    r - b[m]
                } else {
                    b[m + 1] - r
                };
            }
        }
        total.clamp(0.0, 1.0)
    }

    /// Signed-root form of the cdf, valid when every partition point is a
    /// turning point: `Σ ±r_i + 1{g(1) < x}` with `+` on increasing branches.
    pub fn cdf_signed_roots(&self, x: f64) -> Option<f64> {
        if !self.g.breaks_are_turning_points() {
            return None;
        }
        if x <= self.lo {
            return Some(0.0);
        }
        if x >= self.hi {
            return Some(1.0);
        }
        let g = &self.g;
        let s: f64 = g
            .roots(x)
            .into_iter()
            .map(|(m, r)| if g.is_increasing(m) { r } else { -r })
            .sum();
        let last = g.branch_ends(g.branch_count() - 1).1;
        Some(s + if last < x { 1.0 } else { 0.0 })
    }

    /// `Σ 1/|g'(r_i(x))|`; infinite where a root has zero slope.
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        self.g
            .roots(x)
            .into_iter()
            .map(|(_, r)| {
                let d = self.g.derivative(r).abs();
                if d == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / d
                }
            })
            .sum()
    }

    /// `F(x)` and `f(x)` from a single pass over the branch roots.
    fn cdf_pdf(&self, x: f64) -> (f64, f64) {
        if x <= self.lo {
            return (0.0, 0.0);
        }
        if x >= self.hi {
            return (1.0, 0.0);
        }
        let g = &self.g;
        let b = g.breaks();
        let (mut total, mut dens) = (0.0, 0.0);
        for m in 0..g.branch_count() {
            let (lo, hi) = g.branch_range(m);
            if x >= hi {
                total += b[m + 1] - b[m];
            } else if x > lo {
                let r = g.branch_root(m, x);
                total += if g.is_increasing(m) {
                    r - b[m]
                } else {
                    b[m + 1] - r
                };
                dens += 1.0 / g.derivative(r).abs();
            }
        }
        (total.clamp(0.0, 1.0), dens)
    }

    /// `F⁻¹(p)`: bracketed by the critical values, then safeguarded Newton.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.lo;
        }
        if p >= 1.0 {
            return self.hi;
        }
        let cp = &self.critical_probs;
        let k = match cp.iter().position(|&c| c >= p) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => cp.len() - 2,
        };
        if cp[k + 1] == p {
            return self.critical[k + 1];
        }
        roots::solve_monotone_with(
            &|x| self.cdf_pdf(x),
            p,
            self.critical[k],
            self.critical[k + 1],
            true,
        )
    }
}
