//! Uniform-distribution-preserving transformations.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::piecewise::{locate, RealFn};
use super::{PiecewiseMonotone, PushforwardDistribution, TransformSpec};
use crate::basis::{BasisKind, CorrelationBasis};
use crate::error::{Error, Result};
use crate::numeric::roots;

/// Generator cdf `Ψ` of a v-transform.
#[derive(Clone)]
pub enum Generator {
    /// `Ψ(x) = 1 − (1 − x)^κ`.
    Power {
        kappa: f64,
    },
    Custom {
        cdf: RealFn,
        density: RealFn,
    },
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Power { kappa } => write!(f, "Power {{ kappa: {kappa} }}"),
            Generator::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl Generator {
    pub fn linear() -> Self {
        Generator::Power { kappa: 1.0 }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Generator::Power { kappa } => 1.0 - (1.0 - x).powf(*kappa),
            Generator::Custom { cdf, .. } => cdf(x),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            Generator::Power { kappa } => kappa * (1.0 - x).powf(kappa - 1.0),
            Generator::Custom { density, .. } => density(x),
        }
    }

    pub fn quantile(&self, y: f64) -> f64 {
        match self {
            Generator::Power { kappa } => 1.0 - (1.0 - y).powf(1.0 / kappa),
            Generator::Custom { cdf, density } => {
                roots::solve_monotone(&**cdf, Some(&**density), y, 0.0, 1.0, true)
            }
        }
    }

    /// `Ψ'(Ψ⁻¹(y))`.
    fn density_at_quantile(&self, y: f64) -> f64 {
        match self {
            Generator::Power { kappa } => kappa * (1.0 - y).powf((kappa - 1.0) / kappa),
            _ => self.density(self.quantile(y)),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Generator::Power { kappa } => {
                if kappa.is_finite() && *kappa > 0.0 {
                    Ok(())
                } else {
                    Err(Error::param(format!(
                        "non-cdf generator: kappa = {kappa} must be positive"
                    )))
                }
            }
            Generator::Custom { cdf, .. } => {
                if cdf(0.0).abs() > 1e-9 || (cdf(1.0) - 1.0).abs() > 1e-9 {
                    return Err(Error::param("non-cdf generator: Ψ(0) ≠ 0 or Ψ(1) ≠ 1"));
                }
                let vals: Vec<f64> = (0..=512).map(|i| cdf(i as f64 / 512.0)).collect();
                if vals.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::param(
                        "non-cdf generator: Ψ is not strictly increasing",
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Serializable description of a udp transformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UdpSpec {
    Identity,
    /// Power-generator v-transform `T_{δ,κ}`.
    Vtransform {
        delta: f64,
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
    /// The udp induced by a basis function.
    Basis {
        basis: BasisKind,
        order: usize,
    },
    /// The udp induced by a piecewise linear function.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<[f64; 2]>,
    },
    /// The udp induced by an arbitrary transformation.
    Transform {
        transform: TransformSpec,
    },
    /// `1 − T`.
    Reflected {
        inner: Box<UdpSpec>,
    },
}

fn default_kappa() -> f64 {
    1.0
}

impl UdpSpec {
    pub fn build(&self) -> Result<RegularUdp> {
        let udp = match self {
            UdpSpec::Identity => RegularUdp::identity(),
            UdpSpec::Vtransform { delta, kappa } => {
                v_transform(*delta, Generator::Power { kappa: *kappa })?
            }
            UdpSpec::Basis { basis, order } => build_udp(&PiecewiseMonotone::basis(
                CorrelationBasis::from(*basis),
                *order,
            )?)?,
            UdpSpec::Piecewise { breaks, values } => {
                build_udp(&PiecewiseMonotone::piecewise_linear(breaks, values)?)?
            }
            UdpSpec::Transform { transform } => build_udp(&transform.build()?)?,
            UdpSpec::Reflected { inner } => inner.build()?.reflected(),
        };
        Ok(udp.with_spec(self.clone()))
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Identity,
    VTransform { delta: f64, generator: Generator },
    Zigzag { order: usize },
    Induced { dist: Box<PushforwardDistribution> },
    Reflected(Box<RegularUdp>),
}

/// A root of `T(u) = x` with its selection weight `1/|T'(r)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreimageRoot {
    pub point: f64,
    pub weight: f64,
}

/// All preimages of a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Preimage {
    pub roots: Vec<PreimageRoot>,
    /// The requested point was within `1e-12` of a branch image boundary and
    /// was moved inward.
    pub flagged: bool,
}

impl Preimage {
    pub fn weight_sum(&self) -> f64 {
        self.roots.iter().map(|r| r.weight).sum()
    }
}

/// A regular udp transformation with its monotone partition.
#[derive(Clone, Debug)]
pub struct RegularUdp {
    kind: Kind,
    breaks: Vec<f64>,
    increasing: Vec<bool>,
    critical: Vec<f64>,
    spec: Option<UdpSpec>,
}

const EDGE_TOL: f64 = 1e-12;

impl RegularUdp {
    pub fn identity() -> Self {
        RegularUdp {
            kind: Kind::Identity,
            breaks: vec![0.0, 1.0],
            increasing: vec![true],
            critical: vec![0.0, 1.0],
            spec: Some(UdpSpec::Identity),
        }
    }

    /// The symmetric v-transform `T_∨(u) = |2u − 1|`.
    pub fn vee() -> Self {
        v_transform(0.5, Generator::linear()).expect("valid v-transform")
    }

    /// The zigzag udp `1 − arccos((−1)^j cos(jπu))/π` of the cosine basis.
    pub fn zigzag(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::param("zigzag order must be at least 1"));
        }
        let j = order as f64;
        Ok(RegularUdp {
            kind: Kind::Zigzag { order },
            breaks: (0..=order).map(|m| m as f64 / j).collect(),
            increasing: (1..=order).map(|m| (order - m).is_multiple_of(2)).collect(),
            critical: vec![0.0, 1.0],
            spec: Some(UdpSpec::Basis {
                basis: BasisKind::Cosine,
                order,
            }),
        })
    }

    /// `T_g = F_g ∘ g` evaluated through the pushforward distribution.
    ///
    /// The partition is refined with every point where `g` attains one of its
    /// branch end values, so `T_g` is monotone between consecutive breaks.
    pub fn induced(g: &PiecewiseMonotone) -> Result<Self> {
        if !g.is_regular() {
            return Err(Error::param(
                "regular udp requested from a discontinuous transformation",
            ));
        }
        let dist = PushforwardDistribution::new(g);
        let mut breaks: Vec<f64> = g.breaks().to_vec();
        // A root of g(u) = c next to a turning point already valued c is that
        // point, located only to about sqrt(eps) because g is flat there.
        let known: Vec<(f64, f64)> = g.breaks().iter().map(|&b| (b, g.eval(b))).collect();
        for &c in dist.critical_values() {
            for (_, r) in g.roots(c) {
                let duplicate = known.iter().any(|&(b, v)| {
                    (b - r).abs() < 1e-6 && (v - c).abs() <= 1e-12 * (1.0 + c.abs())
                });
                if !duplicate {
                    breaks.push(r);
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-13);
        breaks[0] = 0.0;
        *breaks.last_mut().unwrap() = 1.0;
        let increasing = breaks
            .windows(2)
            .map(|w| g.is_increasing(g.branch_of(0.5 * (w[0] + w[1]))))
            .collect();
        let critical = dist.critical_probabilities().to_vec();
        Ok(RegularUdp {
            kind: Kind::Induced {
                dist: Box::new(dist),
            },
            breaks,
            increasing,
            critical,
            spec: g
                .spec()
                .cloned()
                .map(|transform| UdpSpec::Transform { transform }),
        })
    }

    /// `1 − T`.
    pub fn reflected(self) -> Self {
        let spec = self
            .spec
            .clone()
            .map(|s| UdpSpec::Reflected { inner: Box::new(s) });
        RegularUdp {
            breaks: self.breaks.clone(),
            increasing: self.increasing.iter().map(|d| !d).collect(),
            critical: self.critical.iter().rev().map(|c| 1.0 - c).collect(),
            kind: Kind::Reflected(Box::new(self)),
            spec,
        }
    }

    fn with_spec(mut self, spec: UdpSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn spec(&self) -> Option<&UdpSpec> {
        self.spec.as_ref()
    }

    /// Partition on whose open pieces `T` is strictly monotone.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn is_increasing(&self, piece: usize) -> bool {
        self.increasing[piece]
    }

    /// Values of `T` at the ends of its monotone pieces.
    pub fn critical_values(&self) -> &[f64] {
        &self.critical
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Identity => u,
            Kind::VTransform { delta, generator } => {
                let d = *delta;
                if u <= d {
                    ((1.0 - u) - (1.0 - d) * generator.cdf(u / d)).clamp(0.0, 1.0)
                } else {
                    (u - d * generator.quantile((1.0 - u) / (1.0 - d))).clamp(0.0, 1.0)
                }
            }
            Kind::Zigzag { order } => {
                let m = locate(&self.breaks, u);
                let t = (u * *order as f64 - m as f64).clamp(0.0, 1.0);
                if self.increasing[m] {
                    t
                } else {
                    1.0 - t
                }
            }
            Kind::Induced { dist } => dist.cdf(dist.source().eval(u)),
            Kind::Reflected(inner) => 1.0 - inner.eval(u),
        }
    }

    /// `T'(u)`, using the left limit at partition points (right limit at 0).
    pub fn derivative(&self, u: f64) -> f64 {
        self.derivative_checked(u).0
    }

    /// `T'(u)` and whether `u` sat on a partition point.
    pub fn derivative_checked(&self, u: f64) -> (f64, bool) {
        let on_break = self.breaks.iter().any(|&b| (u - b).abs() <= 1e-14);
        let w = if on_break {
            if u <= 1e-14 {
                u + 1e-10
            } else {
                u - 1e-10
            }
        } else {
            u
        };
        (self.slope(w), on_break)
    }

    fn slope(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Identity => 1.0,
            Kind::VTransform { delta, generator } => {
                let d = *delta;
                if u <= d {
                    -1.0 - (1.0 - d) / d * generator.density(u / d)
                } else {
                    let w = (1.0 - u) / (1.0 - d);
                    1.0 + d / (1.0 - d) / generator.density_at_quantile(w)
                }
            }
            Kind::Zigzag { order } => {
                let m = locate(&self.breaks, u);
                let j = *order as f64;
                if self.increasing[m] {
                    j
                } else {
                    -j
                }
            }
            Kind::Induced { dist } => {
                let g = dist.source();
                let y = g.eval(u);
                let gu = g.derivative(u);
                let own = g.branch_of(u);
                let mut total = 1.0;
                for (m, r) in g.roots(y) {
                    if m != own {
                        total += gu.abs() / g.derivative(r).abs();
                    }
                }
                total.copysign(gu)
            }
            Kind::Reflected(inner) => -inner.slope(u),
        }
    }

    /// Roots of `T(u) = x` with weights `1/|T'(r)|`.
    ///
    /// Points within `1e-12` of a branch image boundary are moved inward and
    /// flagged.
    pub fn preimages(&self, x: f64) -> Preimage {
        let mut flagged = false;
        let mut x = x.clamp(0.0, 1.0);
        if self.critical.iter().any(|&c| (x - c).abs() <= EDGE_TOL) {
            flagged = true;
            x = if x + EDGE_TOL < 1.0 {
                x + EDGE_TOL
            } else {
                x - EDGE_TOL
            };
        }
        let roots = match &self.kind {
            Kind::Identity => vec![PreimageRoot {
                point: x,
                weight: 1.0,
            }],
            Kind::VTransform { delta, .. } => {
                let d = *delta;
                let f = |u: f64| self.eval(u);
                let df = |u: f64| self.slope(u);
                let left = roots::solve_monotone(&f, Some(&df), x, 0.0, d, false);
                let right = (left + x).min(1.0);
                [left, right]
                    .into_iter()
                    .map(|p| PreimageRoot {
                        point: p,
                        weight: 1.0 / self.slope(p).abs(),
                    })
                    .collect()
            }
            Kind::Zigzag { order } => {
                let j = *order as f64;
                (0..*order)
                    .map(|m| {
                        let point = if self.increasing[m] {
                            (m as f64 + x) / j
                        } else {
                            (m as f64 + 1.0 - x) / j
                        };
                        PreimageRoot {
                            point,
                            weight: 1.0 / j,
                        }
                    })
                    .collect()
            }
            Kind::Induced { dist } => {
                let g = dist.source();
                let y = dist.quantile(x);
                let rs = g.roots(y);
                let inv: Vec<f64> = rs
                    .iter()
                    .map(|&(_, r)| 1.0 / g.derivative(r).abs())
                    .collect();
                let total: f64 = inv.iter().sum();
                rs.iter()
                    .zip(inv)
                    .map(|(&(_, r), w)| PreimageRoot {
                        point: r,
                        weight: w / total,
                    })
                    .collect()
            }
            Kind::Reflected(inner) => {
                let p = inner.preimages(1.0 - x);
                flagged |= p.flagged;
                p.roots
            }
        };
        Preimage { roots, flagged }
    }

    /// `j` when `T` is the order-`j` zigzag, i.e. piecewise linear with
    /// slopes `±j` alternating from increasing on the last piece.
    pub(crate) fn linear_order(&self) -> Option<usize> {
        match &self.kind {
            Kind::Identity => Some(1),
            Kind::Zigzag { order } => Some(*order),
            Kind::VTransform {
                delta,
                generator: Generator::Power { kappa },
            } if *delta == 0.5 && *kappa == 1.0 => Some(2),
            _ => None,
        }
    }

    /// Whether `T(1 − u) = T(u)` on a grid.
    pub fn is_symmetric(&self) -> bool {
        (0..=100).all(|i| {
            let u = (i as f64 + 0.5) / 101.0;
            (self.eval(1.0 - u) - self.eval(u)).abs() < 1e-9
        })
    }
}

/// The v-transform with fulcrum `delta` and generator `generator`.
pub fn v_transform(delta: f64, generator: Generator) -> Result<RegularUdp> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("delta", delta, "(0, 1)"));
    }
    generator.validate()?;
    let spec = match &generator {
        Generator::Power { kappa } => Some(UdpSpec::Vtransform {
            delta,
            kappa: *kappa,
        }),
        Generator::Custom { .. } => None,
    };
    Ok(RegularUdp {
        kind: Kind::VTransform { delta, generator },
        breaks: vec![0.0, delta, 1.0],
        increasing: vec![false, true],
        critical: vec![0.0, 1.0],
        spec,
    })
}

/// `T_g = F_g ∘ g`, using a closed form when `g` is recognized.
///
/// Monotone `g` gives the identity (or its reflection), cosine basis
/// functions give the zigzag, the second Legendre function gives `T_∨` and
/// the asymmetric u-shaped family gives a power-generator v-transform.
pub fn build_udp(g: &PiecewiseMonotone) -> Result<RegularUdp> {
    if !g.is_regular() {
        return Err(Error::param(
            "regular udp requested from a discontinuous transformation",
        ));
    }
    if g.branch_count() == 1 {
        let id = RegularUdp::identity();
        return Ok(if g.is_increasing(0) {
            id
        } else {
            id.reflected()
        });
    }
    let mut spec = g.spec();
    while let Some(TransformSpec::Standardized { inner }) = spec {
        spec = Some(inner);
    }
    let closed = match spec {
        Some(TransformSpec::Basis {
            basis: BasisKind::Cosine,
            order,
        }) => Some(RegularUdp::zigzag(*order)?),
        Some(TransformSpec::Basis {
            basis: BasisKind::Legendre,
            order: 2,
        }) => Some(RegularUdp::vee()),
        Some(TransformSpec::AsymmetricU { delta, p, q }) => {
            Some(v_transform(*delta, Generator::Power { kappa: q / p })?)
        }
        _ => None,
    };
    let udp = match closed {
        Some(u) => u,
        None => RegularUdp::induced(g)?,
    };
    Ok(match g.spec() {
        Some(TransformSpec::Basis { basis, order }) => udp.with_spec(UdpSpec::Basis {
            basis: *basis,
            order: *order,
        }),
        _ => udp,
    })
}

impl Serialize for RegularUdp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.spec {
            Some(spec) => spec.serialize(s),
            None => Err(serde::ser::Error::custom(
                "udp built from a custom generator has no serializable form",
            )),
        }
    }
}

impl<'de> Deserialize<'de> for RegularUdp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = UdpSpec::deserialize(d)?;
        spec.build().map_err(serde::de::Error::custom)
    }
}
