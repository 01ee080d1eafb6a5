use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::{sample_inverted, InvertedCopula, Randomizer};
use crate::copula::CopulaSpec;
use crate::error::{Error, Result};
use crate::estimate::RankedSample;
use crate::numeric::optim::{multi_start, NelderMeadOptions};
use crate::transform::{v_transform, Generator, RegularUdp, UdpSpec};

const DELTA_RANGE: (f64, f64) = (0.01, 0.99);
const KAPPA_RANGE: (f64, f64) = (0.05, 20.0);
const CLAMP: f64 = 1e-12;

fn yes() -> bool {
    true
}

/// Transformation applied to one axis of an inverted-copula model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AxisModel {
    Identity,
    /// Power-generator v-transform with optionally free parameters.
    Vtransform {
        delta: f64,
        #[serde(default = "one")]
        kappa: f64,
        #[serde(default = "yes")]
        fit_delta: bool,
        #[serde(default = "yes")]
        fit_kappa: bool,
    },
    /// A fixed udp.
    Udp {
        spec: UdpSpec,
    },
}

fn one() -> f64 {
    1.0
}

impl AxisModel {
    /// Free v-transform with starting values `delta` and `kappa`.
    pub fn vtransform(delta: f64, kappa: f64) -> Self {
        AxisModel::Vtransform {
            delta,
            kappa,
            fit_delta: true,
            fit_kappa: true,
        }
    }

    pub fn build(&self) -> Result<RegularUdp> {
        match self {
            AxisModel::Identity => Ok(RegularUdp::identity()),
            AxisModel::Vtransform { delta, kappa, .. } => {
                v_transform(*delta, Generator::Power { kappa: *kappa })
            }
            AxisModel::Udp { spec } => spec.build(),
        }
    }

    fn free(&self) -> (bool, bool) {
        match *self {
            AxisModel::Vtransform {
                fit_delta,
                fit_kappa,
                ..
            } => (fit_delta, fit_kappa),
            _ => (false, false),
        }
    }
}

/// Independent-inversion model `c(u, v) = c*(T1(u), T2(v))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub base: CopulaSpec,
    pub t1: AxisModel,
    pub t2: AxisModel,
    /// Use `1 − T1`.
    #[serde(default)]
    pub reflect1: bool,
    /// Use `1 − T2`.
    #[serde(default)]
    pub reflect2: bool,
    /// Estimate the base copula parameter.
    #[serde(default = "yes")]
    pub fit_base: bool,
}

impl ModelSpec {
    pub fn new(base: CopulaSpec, t1: AxisModel, t2: AxisModel) -> Self {
        ModelSpec {
            base,
            t1,
            t2,
            reflect1: false,
            reflect2: false,
            fit_base: true,
        }
    }

    pub fn udps(&self) -> Result<(RegularUdp, RegularUdp)> {
        let reflect = |t: RegularUdp, r: bool| if r { t.reflected() } else { t };
        Ok((
            reflect(self.t1.build()?, self.reflect1),
            reflect(self.t2.build()?, self.reflect2),
        ))
    }

    pub fn copula(&self) -> Result<InvertedCopula> {
        let (t1, t2) = self.udps()?;
        InvertedCopula::new(self.base, t1, t2, Randomizer::Independent)
    }

    /// Seeded sample from the model.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
        self.base.validate()?;
        let (t1, t2) = self.udps()?;
        Ok(sample_inverted(
            Arc::new(self.base),
            t1,
            t2,
            Randomizer::Independent,
            n,
            seed,
        ))
    }

    /// `Σ log c*(T1(u_i), T2(v_i))`.
    pub fn log_likelihood(&self, data: &[(f64, f64)]) -> Result<f64> {
        self.base.validate()?;
        let (t1, t2) = self.udps()?;
        Ok(log_likelihood(&self.base, &t1, &t2, data))
    }

    fn free_parameters(&self) -> Vec<Parameter> {
        let mut out = Vec::new();
        if self.fit_base {
            if let Some((lo, hi)) = self.base.parameter_bounds() {
                out.push(Parameter::Base { lo, hi });
            }
        }
        for axis in [1, 2] {
            let (fd, fk) = if axis == 1 {
                self.t1.free()
            } else {
                self.t2.free()
            };
            if fd {
                out.push(Parameter::Delta(axis));
            }
            if fk {
                out.push(Parameter::Kappa(axis));
            }
        }
        out
    }

    fn get(&self, p: Parameter) -> f64 {
        match p {
            Parameter::Base { .. } => self.base.parameter().unwrap_or(0.0),
            Parameter::Delta(a) | Parameter::Kappa(a) => match self.axis(a) {
                AxisModel::Vtransform { delta, kappa, .. } => {
                    if matches!(p, Parameter::Delta(_)) {
                        *delta
                    } else {
                        *kappa
                    }
                }
                _ => unreachable!("free parameter on a fixed axis"),
            },
        }
    }

    fn set(&mut self, p: Parameter, value: f64) {
        match p {
            Parameter::Base { .. } => self.base = self.base.with_parameter(value),
            Parameter::Delta(a) => {
                if let AxisModel::Vtransform { delta, .. } = self.axis_mut(a) {
                    *delta = value;
                }
            }
            Parameter::Kappa(a) => {
                if let AxisModel::Vtransform { kappa, .. } = self.axis_mut(a) {
                    *kappa = value;
                }
            }
        }
    }

    fn axis(&self, a: usize) -> &AxisModel {
        if a == 1 {
            &self.t1
        } else {
            &self.t2
        }
    }

    fn axis_mut(&mut self, a: usize) -> &mut AxisModel {
        if a == 1 {
            &mut self.t1
        } else {
            &mut self.t2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Parameter {
    Base { lo: f64, hi: f64 },
    Delta(usize),
    Kappa(usize),
}

impl Parameter {
    fn range(self) -> (f64, f64) {
        match self {
            Parameter::Base { lo, hi } => (lo, hi),
            Parameter::Delta(_) => DELTA_RANGE,
            Parameter::Kappa(_) => KAPPA_RANGE,
        }
    }

    fn name(self) -> String {
        match self {
            Parameter::Base { .. } => "base".into(),
            Parameter::Delta(a) => format!("t{a}.delta"),
            Parameter::Kappa(a) => format!("t{a}.kappa"),
        }
    }

    /// Typical starting values, used after the user-supplied one.
    fn starts(self, base: &CopulaSpec) -> [f64; 4] {
        match self {
            Parameter::Base { .. } => match base {
                CopulaSpec::Frank { .. } => [2.0, 8.0, -2.0, 15.0],
                CopulaSpec::Clayton { .. } => [0.5, 2.0, 5.0, 10.0],
                CopulaSpec::Gumbel { .. } => [1.2, 2.0, 4.0, 8.0],
                _ => [0.2, 0.6, -0.3, 0.85],
            },
            Parameter::Delta(_) => [0.3, 0.7, 0.5, 0.5],
            Parameter::Kappa(_) => [1.0, 1.0, 0.5, 2.0],
        }
    }
}

/// Maximum-likelihood estimate of an inverted-copula model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(flatten)]
    pub model: ModelSpec,
    pub loglik: f64,
    pub converged: bool,
    /// Parameters that ended on the boundary of their search box.
    pub at_boundary: Vec<String>,
    pub iterations: usize,
}

fn log_likelihood(base: &CopulaSpec, t1: &RegularUdp, t2: &RegularUdp, data: &[(f64, f64)]) -> f64 {
    data.iter()
        .map(|&(u, v)| {
            let a = t1.eval(u).clamp(CLAMP, 1.0 - CLAMP);
            let b = t2.eval(v).clamp(CLAMP, 1.0 - CLAMP);
            base.log_density(a, b).unwrap_or(f64::NEG_INFINITY)
        })
        .sum()
}

/// Fits `spec` to pseudo-observations in `(0, 1)²`, starting from the
/// values in `spec`.
pub fn fit_pseudo_observations(data: &[(f64, f64)], spec: &ModelSpec) -> Result<FitResult> {
    if let Some(&(u, v)) = data
        .iter()
        .find(|(u, v)| !(*u > 0.0 && *u < 1.0 && *v > 0.0 && *v < 1.0))
    {
        let bad = if u > 0.0 && u < 1.0 { v } else { u };
        return Err(Error::domain("pseudo-observation", bad, "(0, 1)"));
    }
    if data.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    spec.base.validate()?;
    if spec.base.log_density(0.5, 0.5).is_none() {
        return Err(Error::MissingDensity(spec.base.to_string()));
    }
    let params = spec.free_parameters();
    if params.is_empty() {
        let loglik = spec.log_likelihood(data)?;
        return Ok(FitResult {
            model: spec.clone(),
            loglik,
            converged: true,
            at_boundary: Vec::new(),
            iterations: 0,
        });
    }
    let lower: Vec<f64> = params.iter().map(|p| p.range().0).collect();
    let upper: Vec<f64> = params.iter().map(|p| p.range().1).collect();
    let clamp = |x: Vec<f64>| -> Vec<f64> {
        x.iter()
            .zip(lower.iter().zip(&upper))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    };
    let mut starts = vec![clamp(params.iter().map(|&p| spec.get(p)).collect())];
    for i in 0..4 {
        starts.push(clamp(
            params.iter().map(|p| p.starts(&spec.base)[i]).collect(),
        ));
    }

    let objective = |x: &[f64]| -> f64 {
        let mut m = spec.clone();
        for (p, v) in params.iter().zip(x) {
            m.set(*p, *v);
        }
        match m.udps() {
            Ok((t1, t2)) if m.base.validate().is_ok() => {
                let ll = log_likelihood(&m.base, &t1, &t2, data);
                if ll.is_finite() {
                    -ll
                } else {
                    1e100
                }
            }
            _ => 1e100,
        }
    };
    let opts = NelderMeadOptions {
        f_tol: 1e-8,
        ..Default::default()
    };
    let best = multi_start(&objective, &starts, &lower, &upper, &opts);

    let mut model = spec.clone();
    let mut at_boundary = Vec::new();
    for (p, v) in params.iter().zip(&best.x) {
        model.set(*p, *v);
        let (lo, hi) = p.range();
        if (v - lo).abs() <= 1e-4 * (hi - lo) || (hi - v).abs() <= 1e-4 * (hi - lo) {
            at_boundary.push(p.name());
        }
    }
    if !at_boundary.is_empty() {
        log::warn!("fit ended on the boundary for {}", at_boundary.join(", "));
    }
    if best.value >= 1e100 {
        return Err(Error::Numerical(
            "log-likelihood is not finite at any start".into(),
        ));
    }
    Ok(FitResult {
        model,
        loglik: -best.value,
        converged: best.converged,
        at_boundary,
        iterations: best.iterations,
    })
}

/// Fits `spec` to the pseudo-observations `(r/(n+1), s/(n+1))` of `data`.
pub fn fit_ml(data: &RankedSample, spec: &ModelSpec) -> Result<FitResult> {
    fit_pseudo_observations(&data.pseudo_observations(), spec)
}
