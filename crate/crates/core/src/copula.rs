//! Parametric bivariate copulas and the common [`Copula`] interface.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::normal::{bvn_cdf, norm_cdf, norm_quantile};
use crate::numeric::rng::{self, SimRng};

/// Fréchet bounds handled analytically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerfectDependence {
    Comonotone,
    Countermonotone,
}

/// A bivariate copula.
pub trait Copula: Send + Sync {
    /// `C(u, v)` when available in closed form.
    fn cdf(&self, _u: f64, _v: f64) -> Option<f64> {
        None
    }

    /// `c(u, v)` when the copula is absolutely continuous.
    fn density(&self, _u: f64, _v: f64) -> Option<f64> {
        None
    }

    /// One draw.
    fn sample(&self, rng: &mut SimRng) -> (f64, f64);

    /// `Some` for the comonotone and countermonotone copulas.
    fn perfect_dependence(&self) -> Option<PerfectDependence> {
        None
    }

    fn describe(&self) -> String;
}

/// Draws `n` pairs, deterministically for a given seed.
pub fn sample_n(c: &dyn Copula, n: usize, seed: u64) -> Vec<(f64, f64)> {
    rng::generate_chunked(n, seed, |r| c.sample(r))
}

/// Rotation of the Clayton copula by coordinate reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl TryFrom<u32> for Rotation {
    type Error = String;
    fn try_from(d: u32) -> std::result::Result<Self, String> {
        match d {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            other => Err(format!("rotation must be 0, 90, 180 or 270, got {other}")),
        }
    }
}

impl From<Rotation> for u32 {
    fn from(r: Rotation) -> u32 {
        match r {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }
}

impl Rotation {
    fn flips(self) -> (bool, bool) {
        match self {
            Rotation::R0 => (false, false),
            Rotation::R90 => (true, false),
            Rotation::R180 => (true, true),
            Rotation::R270 => (false, true),
        }
    }
}

/// Parametric copula families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CopulaSpec {
    Independence,
    Comonotone,
    Countermonotone,
    Gaussian {
        rho: f64,
    },
    StudentT {
        rho: f64,
        nu: f64,
    },
    Frank {
        theta: f64,
    },
    Clayton {
        theta: f64,
        #[serde(default)]
        rotation: Rotation,
    },
    Gumbel {
        theta: f64,
    },
}

impl fmt::Display for CopulaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CopulaSpec::Independence => write!(f, "independence"),
            CopulaSpec::Comonotone => write!(f, "comonotone"),
            CopulaSpec::Countermonotone => write!(f, "countermonotone"),
            CopulaSpec::Gaussian { rho } => write!(f, "gaussian(rho={rho})"),
            CopulaSpec::StudentT { rho, nu } => write!(f, "t(rho={rho}, nu={nu})"),
            CopulaSpec::Frank { theta } => write!(f, "frank(theta={theta})"),
            CopulaSpec::Clayton { theta, rotation } => {
                write!(
                    f,
                    "clayton(theta={theta}, rotation={})",
                    u32::from(*rotation)
                )
            }
            CopulaSpec::Gumbel { theta } => write!(f, "gumbel(theta={theta})"),
        }
    }
}

impl std::str::FromStr for CopulaSpec {
    type Err = Error;

    /// Parses `family[:p1[,p2]]`, e.g. `frank:5`, `t:0.7,2`, `clayton:2,90`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let params: Vec<f64> = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::param(format!("bad copula parameter '{p}'")))
                })
                .collect::<Result<_>>()?
        };
        let need = |k: usize| {
            if params.len() == k {
                Ok(())
            } else {
                Err(Error::param(format!(
                    "copula '{name}' takes {k} parameter(s)"
                )))
            }
        };
        let spec = match name.to_ascii_lowercase().as_str() {
            "independence" | "indep" => CopulaSpec::Independence,
            "comonotone" | "m" => CopulaSpec::Comonotone,
            "countermonotone" | "w" => CopulaSpec::Countermonotone,
            "gaussian" | "gauss" | "normal" => {
                need(1)?;
                CopulaSpec::Gaussian { rho: params[0] }
            }
            "t" | "student_t" | "studentt" => {
                need(2)?;
                CopulaSpec::StudentT {
                    rho: params[0],
                    nu: params[1],
                }
            }
            "frank" => {
                need(1)?;
                CopulaSpec::Frank { theta: params[0] }
            }
            "clayton" => {
                if params.len() != 1 && params.len() != 2 {
                    return Err(Error::param("clayton takes theta and an optional rotation"));
                }
                let rotation = match params.get(1) {
                    Some(&r) => Rotation::try_from(r as u32).map_err(Error::InvalidParameter)?,
                    None => Rotation::R0,
                };
                CopulaSpec::Clayton {
                    theta: params[0],
                    rotation,
                }
            }
            "gumbel" => {
                need(1)?;
                CopulaSpec::Gumbel { theta: params[0] }
            }
            other => return Err(Error::param(format!("unknown copula family '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn clayton_cdf(t: f64, u: f64, v: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    let s = log_clayton_sum(t, u, v);
    (-s / t).exp()
}

/// `ln(u^{-θ} + v^{-θ} − 1)` without overflow.
fn log_clayton_sum(t: f64, u: f64, v: f64) -> f64 {
    let a = -t * u.ln();
    let b = -t * v.ln();
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp() - (-m).exp()).ln()
}

fn clayton_log_density(t: f64, u: f64, v: f64) -> f64 {
    (1.0 + t).ln() - (t + 1.0) * (u.ln() + v.ln()) - (2.0 + 1.0 / t) * log_clayton_sum(t, u, v)
}

fn frank_cdf(t: f64, u: f64, v: f64) -> f64 {
    let num = (-t * u).exp_m1() * (-t * v).exp_m1();
    -(num / (-t).exp_m1()).ln_1p() / t
}

fn frank_log_density(t: f64, u: f64, v: f64) -> f64 {
    // c = θ(1 − e^{−θ}) e^{θ(u+v)} / B² with
    // B = e^{θu}(1 − e^{θ(v−1)}) + (e^{θv} − 1); both terms share the sign of θ.
    let s = t.abs();
    let log_ta = s.ln() + (-(-s).exp_m1()).ln() + if t < 0.0 { s } else { 0.0 };
    let x1 = (-(t * (v - 1.0)).exp_m1()).abs();
    let x2 = (t * v).exp_m1().abs();
    let (p, q) = (t * u + x1.ln(), x2.ln());
    let log_b = p.max(q) + (-(p - q).abs()).exp().ln_1p();
    log_ta + t * (u + v) - 2.0 * log_b
}

fn gumbel_cdf(t: f64, u: f64, v: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    let (x, y) = (-u.ln(), -v.ln());
    (-(x.powf(t) + y.powf(t)).powf(1.0 / t)).exp()
}

fn gumbel_log_density(t: f64, u: f64, v: f64) -> f64 {
    let (x, y) = (-u.ln(), -v.ln());
    let s = x.powf(t) + y.powf(t);
    let a = s.powf(1.0 / t);
    -a + (t - 1.0) * (x.ln() + y.ln()) + x + y + (1.0 - 2.0 * t) / t * s.ln() + (a + t - 1.0).ln()
}

fn gaussian_log_density(rho: f64, u: f64, v: f64) -> f64 {
    let (x, y) = (norm_quantile(u), norm_quantile(v));
    let r2 = 1.0 - rho * rho;
    -(rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2) - 0.5 * r2.ln()
}

fn t_log_density(rho: f64, nu: f64, u: f64, v: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, nu).expect("validated nu");
    let (x, y) = (t.inverse_cdf(u), t.inverse_cdf(v));
    let r2 = 1.0 - rho * rho;
    let q = (x * x - 2.0 * rho * x * y + y * y) / (nu * r2);
    let ln_t2 = ln_gamma((nu + 2.0) / 2.0)
        - ln_gamma(nu / 2.0)
        - (nu * PI).ln()
        - 0.5 * r2.ln()
        - (nu + 2.0) / 2.0 * q.ln_1p();
    let ln_t1 = |z: f64| {
        ln_gamma((nu + 1.0) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * (nu * PI).ln()
            - (nu + 1.0) / 2.0 * (z * z / nu).ln_1p()
    };
    ln_t2 - ln_t1(x) - ln_t1(y)
}

fn open(rng: &mut SimRng) -> f64 {
    rng::uniform(rng)
}

impl CopulaSpec {
    /// Checks the family parameters.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CopulaSpec::Gaussian { rho } => rho.abs() < 1.0,
            CopulaSpec::StudentT { rho, nu } => rho.abs() < 1.0 && nu > 0.0 && nu.is_finite(),
            CopulaSpec::Frank { theta } => theta.is_finite(),
            CopulaSpec::Clayton { theta, .. } => theta > 0.0 && theta.is_finite(),
            CopulaSpec::Gumbel { theta } => theta >= 1.0 && theta.is_finite(),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid copula parameters: {self}")))
        }
    }

    /// Main dependence parameter, if the family has one.
    pub fn parameter(&self) -> Option<f64> {
        match *self {
            CopulaSpec::Gaussian { rho } | CopulaSpec::StudentT { rho, .. } => Some(rho),
            CopulaSpec::Frank { theta }
            | CopulaSpec::Clayton { theta, .. }
            | CopulaSpec::Gumbel { theta } => Some(theta),
            _ => None,
        }
    }

    /// Same family with the main parameter replaced.
    pub fn with_parameter(&self, p: f64) -> Self {
        match *self {
            CopulaSpec::Gaussian { .. } => CopulaSpec::Gaussian { rho: p },
            CopulaSpec::StudentT { nu, .. } => CopulaSpec::StudentT { rho: p, nu },
            CopulaSpec::Frank { .. } => CopulaSpec::Frank { theta: p },
            CopulaSpec::Clayton { rotation, .. } => CopulaSpec::Clayton { theta: p, rotation },
            CopulaSpec::Gumbel { .. } => CopulaSpec::Gumbel { theta: p },
            other => other,
        }
    }

    /// Box used when fitting the main parameter.
    pub fn parameter_bounds(&self) -> Option<(f64, f64)> {
        match self {
            CopulaSpec::Gaussian { .. } | CopulaSpec::StudentT { .. } => Some((-0.999, 0.999)),
            CopulaSpec::Frank { .. } => Some((-50.0, 50.0)),
            CopulaSpec::Clayton { .. } => Some((1e-4, 50.0)),
            CopulaSpec::Gumbel { .. } => Some((1.0, 50.0)),
            _ => None,
        }
    }

    /// `ln c(u, v)` for absolutely continuous families.
    pub fn log_density(&self, u: f64, v: f64) -> Option<f64> {
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
            return match self {
                CopulaSpec::Comonotone | CopulaSpec::Countermonotone => None,
                _ => Some(f64::NEG_INFINITY),
            };
        }
        Some(match *self {
            CopulaSpec::Independence => 0.0,
            CopulaSpec::Comonotone | CopulaSpec::Countermonotone => return None,
            CopulaSpec::Gaussian { rho } => gaussian_log_density(rho, u, v),
            CopulaSpec::StudentT { rho, nu } => t_log_density(rho, nu, u, v),
            CopulaSpec::Frank { theta } => {
                if theta.abs() < 1e-10 {
                    0.0
                } else {
                    frank_log_density(theta, u, v)
                }
            }
            CopulaSpec::Clayton { theta, rotation } => {
                let (fu, fv) = rotation.flips();
                let a = if fu { 1.0 - u } else { u };
                let b = if fv { 1.0 - v } else { v };
                clayton_log_density(theta, a, b)
            }
            CopulaSpec::Gumbel { theta } => {
                if theta == 1.0 {
                    0.0
                } else {
                    gumbel_log_density(theta, u, v)
                }
            }
        })
    }
}

impl Copula for CopulaSpec {
    fn cdf(&self, u: f64, v: f64) -> Option<f64> {
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        if u == 0.0 || v == 0.0 {
            return Some(0.0);
        }
        if u == 1.0 {
            return Some(v);
        }
        if v == 1.0 {
            return Some(u);
        }
        Some(match *self {
            CopulaSpec::Independence => u * v,
            CopulaSpec::Comonotone => u.min(v),
            CopulaSpec::Countermonotone => (u + v - 1.0).max(0.0),
            CopulaSpec::Gaussian { rho } => bvn_cdf(norm_quantile(u), norm_quantile(v), rho),
            CopulaSpec::StudentT { .. } => return None,
            CopulaSpec::Frank { theta } => {
                if theta.abs() < 1e-10 {
                    u * v
                } else {
                    frank_cdf(theta, u, v)
                }
            }
            CopulaSpec::Clayton { theta, rotation } => match rotation {
                Rotation::R0 => clayton_cdf(theta, u, v),
                Rotation::R90 => v - clayton_cdf(theta, 1.0 - u, v),
                Rotation::R180 => u + v - 1.0 + clayton_cdf(theta, 1.0 - u, 1.0 - v),
                Rotation::R270 => u - clayton_cdf(theta, u, 1.0 - v),
            },
            CopulaSpec::Gumbel { theta } => gumbel_cdf(theta, u, v),
        })
    }

    fn density(&self, u: f64, v: f64) -> Option<f64> {
        self.log_density(u, v).map(f64::exp)
    }

    fn sample(&self, rng: &mut SimRng) -> (f64, f64) {
        match *self {
            CopulaSpec::Independence => (open(rng), open(rng)),
            CopulaSpec::Comonotone => {
                let a = open(rng);
                (a, a)
            }
            CopulaSpec::Countermonotone => {
                let a = open(rng);
                (a, 1.0 - a)
            }
            CopulaSpec::Gaussian { rho } => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let y = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
                (norm_cdf(z1), norm_cdf(y))
            }
            CopulaSpec::StudentT { rho, nu } => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let y = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
                let w: f64 = ChiSquared::new(nu).expect("validated nu").sample(rng);
                let s = (w / nu).sqrt();
                let t = StudentsT::new(0.0, 1.0, nu).expect("validated nu");
                (t.cdf(z1 / s), t.cdf(y / s))
            }
            CopulaSpec::Frank { theta } => {
                let (u, w) = (open(rng), open(rng));
                if theta.abs() < 1e-10 {
                    return (u, w);
                }
                let k = (-theta).exp_m1();
                let a = (-theta * u).exp();
                let v = -(w * k / (a - w * (-theta * u).exp_m1())).ln_1p() / theta;
                (u, v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
            }
            CopulaSpec::Clayton { theta, rotation } => {
                let (u, w) = (open(rng), open(rng));
                let s = (w.powf(-theta / (1.0 + theta)) - 1.0) * u.powf(-theta) + 1.0;
                let v = s.powf(-1.0 / theta);
                let (fu, fv) = rotation.flips();
                (if fu { 1.0 - u } else { u }, if fv { 1.0 - v } else { v })
            }
            CopulaSpec::Gumbel { theta } => {
                let alpha = 1.0 / theta;
                let (e1, e2): (f64, f64) = (rng.sample(Exp1), rng.sample(Exp1));
                let s = if alpha >= 1.0 {
                    1.0
                } else {
                    // Kanter's representation of the positive stable law with
                    // Laplace transform exp(−t^α).
                    let phi = PI * open(rng);
                    let w: f64 = rng.sample(Exp1);
                    (alpha * phi).sin() / phi.sin().powf(1.0 / alpha)
                        * (((1.0 - alpha) * phi).sin() / w).powf((1.0 - alpha) / alpha)
                };
                ((-(e1 / s).powf(alpha)).exp(), (-(e2 / s).powf(alpha)).exp())
            }
        }
    }

    fn perfect_dependence(&self) -> Option<PerfectDependence> {
        match self {
            CopulaSpec::Comonotone => Some(PerfectDependence::Comonotone),
            CopulaSpec::Countermonotone => Some(PerfectDependence::Countermonotone),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frank_log_density_is_stable() {
        // 50-digit reference values.
        let cases = [
            (50.0, 0.9, 0.9, 2.5324779668462267),
            (50.0, 0.95, 0.2, -33.587976994571851),
            (-50.0, 0.9, 0.1, 2.5324779668462267),
            (-30.0, 0.3, 0.3, -8.598_814_903_691_888),
            (2.0, 0.3, 0.7, -0.16255402807900168),
            (10.0, 0.01, 0.99, -7.497_370_510_421_095),
        ];
        for (t, u, v, want) in cases {
            let got = frank_log_density(t, u, v);
            assert!(
                (got - want).abs() < 1e-10 * want.abs().max(1.0),
                "{t} {u} {v}: {got}"
            );
        }
    }
    use crate::numeric::stats::ks_uniform;

    fn closed_form_families() -> Vec<CopulaSpec> {
        let mut v = vec![
            CopulaSpec::Independence,
            CopulaSpec::Comonotone,
            CopulaSpec::Countermonotone,
            CopulaSpec::Gaussian { rho: 0.6 },
            CopulaSpec::Gaussian { rho: -0.4 },
            CopulaSpec::Frank { theta: 5.0 },
            CopulaSpec::Frank { theta: -3.0 },
            CopulaSpec::Gumbel { theta: 2.5 },
        ];
        for rotation in [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270] {
            v.push(CopulaSpec::Clayton {
                theta: 2.0,
                rotation,
            });
        }
        v
    }

    #[test]
    fn grounded_with_uniform_margins() {
        for c in closed_form_families() {
            for i in 0..=20 {
                let t = i as f64 / 20.0;
                assert!(c.cdf(t, 0.0).unwrap().abs() < 1e-8, "{c}");
                assert!(c.cdf(0.0, t).unwrap().abs() < 1e-8, "{c}");
                assert!((c.cdf(t, 1.0).unwrap() - t).abs() < 1e-8, "{c}");
                assert!((c.cdf(1.0, t).unwrap() - t).abs() < 1e-8, "{c}");
                // Interior limits approach the margins continuously.
                let e = 1.0 - 1e-12;
                assert!((c.cdf(t, e).unwrap() - t).abs() < 1e-8, "{c} {t}");
            }
        }
    }

    #[test]
    fn density_matches_mixed_difference_of_cdf() {
        for c in closed_form_families() {
            if c.perfect_dependence().is_some() {
                continue;
            }
            for &(u, v) in &[(0.3, 0.4), (0.7, 0.2), (0.55, 0.85)] {
                let h = 1e-4;
                let cdf = |a: f64, b: f64| c.cdf(a, b).unwrap();
                let fd = (cdf(u + h, v + h) - cdf(u + h, v - h) - cdf(u - h, v + h)
                    + cdf(u - h, v - h))
                    / (4.0 * h * h);
                let d = c.density(u, v).unwrap();
                assert!((fd - d).abs() < 1e-4 * (1.0 + d), "{c} {u} {v} {fd} {d}");
            }
        }
    }

    #[test]
    fn t_density_reduces_to_gaussian_for_large_nu() {
        let t = CopulaSpec::StudentT { rho: 0.5, nu: 1e4 };
        let g = CopulaSpec::Gaussian { rho: 0.5 };
        let (a, b) = (t.density(0.3, 0.8).unwrap(), g.density(0.3, 0.8).unwrap());
        assert!((a - b).abs() < 1e-3, "{a} {b}");
        assert!(t.cdf(0.3, 0.3).is_none());
        // Conditional density integrates to one.
        let t = CopulaSpec::StudentT { rho: 0.7, nu: 3.0 };
        let rule = crate::numeric::quad::UnitRule::new(200);
        let total = rule.integrate(|v| t.density(0.4, v).unwrap());
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn samplers_match_cdf() {
        let mut families = closed_form_families();
        families.retain(|c| c.perfect_dependence().is_none());
        for c in families {
            let s = sample_n(&c, 100_000, 5);
            let us: Vec<f64> = s.iter().map(|p| p.0).collect();
            let vs: Vec<f64> = s.iter().map(|p| p.1).collect();
            assert!(ks_uniform(&us) < 0.01, "{c}");
            assert!(ks_uniform(&vs) < 0.01, "{c}");
            for &(a, b) in &[(0.3, 0.3), (0.5, 0.8), (0.8, 0.2)] {
                let emp = s.iter().filter(|p| p.0 <= a && p.1 <= b).count() as f64 / s.len() as f64;
                let exact = c.cdf(a, b).unwrap();
                assert!((emp - exact).abs() < 0.006, "{c} {a} {b} {emp} {exact}");
            }
        }
    }

    #[test]
    fn t_sampler_margins() {
        let c = CopulaSpec::StudentT { rho: 0.7, nu: 2.0 };
        let s = sample_n(&c, 50_000, 9);
        let us: Vec<f64> = s.iter().map(|p| p.0).collect();
        assert!(ks_uniform(&us) < 0.01);
    }

    #[test]
    fn parsing_and_serde() {
        let c: CopulaSpec = "clayton:2,90".parse().unwrap();
        assert_eq!(
            c,
            CopulaSpec::Clayton {
                theta: 2.0,
                rotation: Rotation::R90
            }
        );
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"family":"clayton","theta":2.0,"rotation":90}"#);
        let back: CopulaSpec = serde_json::from_str(r#"{"family":"clayton","theta":2.0}"#).unwrap();
        assert_eq!(back.parameter(), Some(2.0));
        assert!("gumbel:0.5".parse::<CopulaSpec>().is_err());
        assert!("frank".parse::<CopulaSpec>().is_err());
        assert!("t:0.7,2".parse::<CopulaSpec>().is_ok());
    }

    #[test]
    fn deterministic_sampling() {
        let c = CopulaSpec::Gumbel { theta: 2.0 };
        assert_eq!(sample_n(&c, 1000, 42), sample_n(&c, 1000, 42));
    }
}
