use serde::{Deserialize, Serialize};

use super::invert;
use crate::basis::CorrelationBasis;
use crate::copula::Copula;
use crate::error::Result;
use crate::numeric::rng::{self, SimRng};
use crate::transform::{build_udp, PiecewiseMonotone, RegularUdp};

/// Radius `√(3/14)` of the circle in the support of the copulas maximizing
/// `ρ^Λ_{44}`.
pub const CIRCLE_RADIUS: f64 = 0.462_910_049_886_275_7;

/// Constructions of copulas attaining a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremalKind {
    /// Shared `U*`, independent randomizers.
    GenericMax,
    /// `U*` and `1 − U*`, independent randomizers.
    GenericMin,
    /// Jointly symmetric maximizer of `ρ^Λ_{44}`.
    JointlySymmetric44,
    /// Maximizer of `ρ^Λ_{44}` with dependent randomizers that never
    /// selects the same root twice when four exist.
    ProhibitionSign,
}

/// A copula attaining a sharp bound of a generalized Spearman correlation.
#[derive(Debug, Clone)]
pub struct ExtremalCopula {
    kind: ExtremalKind,
    t1: RegularUdp,
    t2: RegularUdp,
}

/// Distribution function of `(T_∨(U), T_∨(V))` for the jointly symmetric
/// maximizer of `ρ^Λ_{44}`.
pub fn jointly_symmetric_star_cdf(u: f64, v: f64) -> f64 {
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    let r = CIRCLE_RADIUS;
    let m = u.min(v);
    if u <= 2.0 * r && v <= 2.0 * r {
        m + ((u * u + v * v - 4.0 * r * r).max(0.0) - m * m) / (4.0 * r)
    } else {
        m
    }
}

fn legendre4() -> Result<RegularUdp> {
    build_udp(&PiecewiseMonotone::basis(CorrelationBasis::LEGENDRE, 4)?)
}

impl ExtremalCopula {
    /// Attains the maximum of `ρ_{g,h}`.
    pub fn generic_max(g: &PiecewiseMonotone, h: &PiecewiseMonotone) -> Result<Self> {
        Ok(ExtremalCopula {
            kind: ExtremalKind::GenericMax,
            t1: build_udp(g)?,
            t2: build_udp(h)?,
        })
    }

    /// Attains the minimum of `ρ_{g,h}`.
    pub fn generic_min(g: &PiecewiseMonotone, h: &PiecewiseMonotone) -> Result<Self> {
        Ok(ExtremalCopula {
            kind: ExtremalKind::GenericMin,
            t1: build_udp(g)?,
            t2: build_udp(h)?,
        })
    }

    pub fn jointly_symmetric_44() -> Self {
        ExtremalCopula {
            kind: ExtremalKind::JointlySymmetric44,
            t1: RegularUdp::vee(),
            t2: RegularUdp::vee(),
        }
    }

    pub fn prohibition_sign() -> Result<Self> {
        let t = legendre4()?;
        Ok(ExtremalCopula {
            kind: ExtremalKind::ProhibitionSign,
            t1: t.clone(),
            t2: t,
        })
    }

    pub fn kind(&self) -> ExtremalKind {
        self.kind
    }

    /// The udps whose preimages carry the support.
    pub fn udps(&self) -> (&RegularUdp, &RegularUdp) {
        (&self.t1, &self.t2)
    }

    fn sample_prohibition(&self, r: &mut SimRng) -> (f64, f64) {
        let x = rng::uniform(r);
        let pre = self.t1.preimages(x);
        let roots = &pre.roots;
        match roots.len() {
            4 => {
                let total = pre.weight_sum();
                let pa = (roots[0].weight + roots[3].weight) / (2.0 * total);
                let pb = (roots[1].weight + roots[2].weight) / (2.0 * total);
                // Off-diagonal joint probabilities of the contingency table.
                let cells = [
                    ((0, 1), pa / 2.0),
                    ((0, 2), pa / 2.0),
                    ((1, 0), pa / 2.0),
                    ((1, 2), pb - pa),
                    ((1, 3), pa / 2.0),
                    ((2, 0), pa / 2.0),
                    ((2, 1), pb - pa),
                    ((2, 3), pa / 2.0),
                    ((3, 1), pa / 2.0),
                    ((3, 2), pa / 2.0),
                ];
                let z = rng::uniform(r);
                let mut cum = 0.0;
                let mut pick = cells[cells.len() - 1].0;
                for &(jk, p) in &cells {
                    cum += p;
                    if z < cum {
                        pick = jk;
                        break;
                    }
                }
                (roots[pick.0].point, roots[pick.1].point)
            }
            _ => {
                let p = invert(&self.t1, x, rng::uniform(r)).point;
                (p, p)
            }
        }
    }
}

impl Copula for ExtremalCopula {
    fn cdf(&self, u: f64, v: f64) -> Option<f64> {
        match self.kind {
            ExtremalKind::JointlySymmetric44 => {
                let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
                let sign = if (u - 0.5) * (v - 0.5) < 0.0 {
                    -1.0
                } else {
                    1.0
                };
                let star = jointly_symmetric_star_cdf((2.0 * u - 1.0).abs(), (2.0 * v - 1.0).abs());
                Some((2.0 * u + 2.0 * v - 1.0 + sign * star) / 4.0)
            }
            _ => None,
        }
    }

    fn sample(&self, r: &mut SimRng) -> (f64, f64) {
        match self.kind {
            ExtremalKind::GenericMax | ExtremalKind::GenericMin => {
                let x = rng::uniform(r);
                let y = if self.kind == ExtremalKind::GenericMax {
                    x
                } else {
                    1.0 - x
                };
                let a = invert(&self.t1, x, rng::uniform(r)).point;
                let b = invert(&self.t2, y, rng::uniform(r)).point;
                (a, b)
            }
            ExtremalKind::JointlySymmetric44 => {
                let x = rng::uniform(r);
                let two_r = 2.0 * CIRCLE_RADIUS;
                let y = if x <= two_r && rng::uniform(r) < x / two_r {
                    (two_r * two_r - x * x).sqrt()
                } else {
                    x
                };
                let a = invert(&self.t1, x, rng::uniform(r)).point;
                let b = invert(&self.t2, y, rng::uniform(r)).point;
                (a, b)
            }
            ExtremalKind::ProhibitionSign => self.sample_prohibition(r),
        }
    }

    fn describe(&self) -> String {
        format!("extremal({:?})", self.kind)
    }
}
