//! Stochastic inversion of udp transformations: inverted and extremal
//! copulas, their densities and maximum-likelihood fitting.

mod extremal;
mod fit;

pub use extremal::{jointly_symmetric_star_cdf, ExtremalCopula, ExtremalKind, CIRCLE_RADIUS};
pub use fit::{fit_ml, fit_pseudo_observations, AxisModel, FitResult, ModelSpec};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::copula::{sample_n, Copula, CopulaSpec};
use crate::error::{Error, Result};
use crate::numeric::rng::{self, SimRng};
use crate::numeric::stats::ks_uniform;
use crate::transform::RegularUdp;

/// Outcome of a stochastic inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverse {
    pub point: f64,
    /// `x` was on a branch image boundary, or had no preimage and `0` was
    /// returned by convention.
    pub flagged: bool,
}

/// `T^←(x, z)`: the preimage selected by `z` from the discrete law on the
/// roots of `T(u) = x` with weights proportional to `1/|T′|`.
pub fn stochastic_inverse(t: &RegularUdp, x: f64, z: f64) -> Result<Inverse> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("x", x, "[0, 1]"));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain("z", z, "[0, 1]"));
    }
    Ok(invert(t, x, z))
}

pub(crate) fn invert(t: &RegularUdp, x: f64, z: f64) -> Inverse {
    let pre = t.preimages(x);
    if pre.roots.is_empty() {
        return Inverse {
            point: 0.0,
            flagged: true,
        };
    }
    let total = pre.weight_sum();
    let mut cum = 0.0;
    let last = pre.roots.len() - 1;
    for (i, r) in pre.roots.iter().enumerate() {
        cum += r.weight / total;
        if z < cum || i == last {
            return Inverse {
                point: r.point,
                flagged: pre.flagged,
            };
        }
    }
    unreachable!("loop returns on the last root")
}

type KernelFn = dyn Fn(f64, f64, &mut SimRng) -> (f64, f64) + Send + Sync;

/// A user randomizer mapping `(V_1, V_2)` to `(Z_1, Z_2)`.
///
/// Only constructible through [`CustomKernel::new`], which checks that each
/// `Z_i` is uniform and independent of `V_i`.
#[derive(Clone)]
pub struct CustomKernel {
    name: String,
    f: Arc<KernelFn>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .finish()
    }
}

const SELF_TEST_N: usize = 20_000;

impl CustomKernel {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64, &mut SimRng) -> (f64, f64) + Send + Sync + 'static,
    ) -> Result<Self> {
        let kernel = CustomKernel {
            name: name.into(),
            f: Arc::new(f),
        };
        kernel.self_test()?;
        Ok(kernel)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn self_test(&self) -> Result<()> {
        let mut r = rng::stream(0x5e1f_7e57, 0);
        let draws: Vec<(f64, f64, f64, f64)> = (0..SELF_TEST_N)
            .map(|_| {
                let (v1, v2) = (rng::uniform(&mut r), rng::uniform(&mut r));
                let (z1, z2) = (self.f)(v1, v2, &mut r);
                (v1, v2, z1, z2)
            })
            .collect();
        // 0.1% critical values of the Kolmogorov–Smirnov statistic.
        let crit = |n: usize| 1.95 / (n as f64).sqrt();
        // `pairs` holds (V, Z) for one axis.
        let check = |pairs: Vec<(f64, f64)>, axis: usize| {
            let all: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if all.iter().any(|z| !(0.0..=1.0).contains(z)) {
                return Err(Error::InvalidKernel(format!(
                    "{}: Z_{axis} leaves [0, 1]",
                    self.name
                )));
            }
            if ks_uniform(&all) > crit(all.len()) {
                return Err(Error::InvalidKernel(format!(
                    "{}: Z_{axis} is not uniform",
                    self.name
                )));
            }
            for half in [0.0, 0.5] {
                let part: Vec<f64> = pairs
                    .iter()
                    .copied()
                    .filter(|(v, _)| *v >= half && *v < half + 0.5)
                    .map(|(_, z)| z)
                    .collect();
                if ks_uniform(&part) > crit(part.len()) {
                    return Err(Error::InvalidKernel(format!(
                        "{}: Z_{axis} depends on V_{axis}",
                        self.name
                    )));
                }
            }
            Ok(())
        };
        check(draws.iter().map(|d| (d.0, d.2)).collect(), 1)?;
        check(draws.iter().map(|d| (d.1, d.3)).collect(), 2)
    }
}

/// How the randomizers `Z_1, Z_2` of a componentwise inversion are coupled.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Randomizer {
    #[default]
    Independent,
    Comonotone,
    Countermonotone,
    /// Comonotone when `max(V_1, V_2) > level`, countermonotone otherwise.
    Threshold {
        level: f64,
    },
    #[serde(skip)]
    Custom(CustomKernel),
}

impl Randomizer {
    pub fn draw(&self, v1: f64, v2: f64, r: &mut SimRng) -> (f64, f64) {
        match self {
            Randomizer::Independent => (rng::uniform(r), rng::uniform(r)),
            Randomizer::Comonotone => {
                let z = rng::uniform(r);
                (z, z)
            }
            Randomizer::Countermonotone => {
                let z = rng::uniform(r);
                (z, 1.0 - z)
            }
            Randomizer::Threshold { level } => {
                let z = rng::uniform(r);
                if v1.max(v2) > *level {
                    (z, z)
                } else {
                    (z, 1.0 - z)
                }
            }
            Randomizer::Custom(k) => (k.f)(v1, v2, r),
        }
    }
}

/// `(T_1^←(V_1, Z_1), T_2^←(V_2, Z_2))` for `(V_1, V_2)` drawn from a base
/// copula.
#[derive(Clone)]
pub struct InvertedCopula {
    base: Arc<dyn Copula>,
    t1: RegularUdp,
    t2: RegularUdp,
    randomizer: Randomizer,
}

impl fmt::Debug for InvertedCopula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl InvertedCopula {
    pub fn new(
        base: CopulaSpec,
        t1: RegularUdp,
        t2: RegularUdp,
        randomizer: Randomizer,
    ) -> Result<Self> {
        base.validate()?;
        Ok(Self::with_base(Arc::new(base), t1, t2, randomizer))
    }

    pub fn with_base(
        base: Arc<dyn Copula>,
        t1: RegularUdp,
        t2: RegularUdp,
        randomizer: Randomizer,
    ) -> Self {
        InvertedCopula {
            base,
            t1,
            t2,
            randomizer,
        }
    }

    pub fn base(&self) -> &dyn Copula {
        self.base.as_ref()
    }

    pub fn udps(&self) -> (&RegularUdp, &RegularUdp) {
        (&self.t1, &self.t2)
    }

    pub fn randomizer(&self) -> &Randomizer {
        &self.randomizer
    }

    /// One draw together with whether either inversion was flagged.
    pub fn sample_flagged(&self, r: &mut SimRng) -> ((f64, f64), bool) {
        let (v1, v2) = self.base.sample(r);
        let (z1, z2) = self.randomizer.draw(v1, v2, r);
        let a = invert(&self.t1, v1, z1);
        let b = invert(&self.t2, v2, z2);
        ((a.point, b.point), a.flagged || b.flagged)
    }
}

impl Copula for InvertedCopula {
    /// Closed form when both udps are zigzags and the randomizers are
    /// independent.
    fn cdf(&self, u: f64, v: f64) -> Option<f64> {
        if !matches!(self.randomizer, Randomizer::Independent) {
            return None;
        }
        self.t1.linear_order()?;
        self.t2.linear_order()?;
        zigzag_inverted_cdf(self.base.as_ref(), &self.t1, &self.t2, u, v)
    }

    fn density(&self, u: f64, v: f64) -> Option<f64> {
        if !matches!(self.randomizer, Randomizer::Independent) {
            return None;
        }
        inverted_density(self.base.as_ref(), &self.t1, &self.t2, u, v).map(|d| d.value)
    }

    fn sample(&self, r: &mut SimRng) -> (f64, f64) {
        self.sample_flagged(r).0
    }

    fn describe(&self) -> String {
        format!("inverted({}, {:?})", self.base.describe(), self.randomizer)
    }
}

/// Draws `n` pairs by componentwise stochastic inversion.
pub fn sample_inverted(
    base: Arc<dyn Copula>,
    t1: RegularUdp,
    t2: RegularUdp,
    randomizer: Randomizer,
    n: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let c = InvertedCopula::with_base(base, t1, t2, randomizer);
    sample_n(&c, n, seed)
}

/// A density value; `on_break` marks evaluation on a partition point, where
/// the left limit is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityValue {
    pub value: f64,
    pub on_break: bool,
}

fn on_break(t: &RegularUdp, u: f64) -> bool {
    let b = t.breaks();
    b[1..b.len() - 1].iter().any(|&x| (x - u).abs() < 1e-12)
}

/// `c*(T_1(u), T_2(v))`, the density under independent randomizers.
pub fn inverted_density(
    base: &dyn Copula,
    t1: &RegularUdp,
    t2: &RegularUdp,
    u: f64,
    v: f64,
) -> Option<DensityValue> {
    let (bu, bv) = (on_break(t1, u), on_break(t2, v));
    let uu = if bu { u - 1e-12 } else { u };
    let vv = if bv { v - 1e-12 } else { v };
    base.density(t1.eval(uu), t2.eval(vv))
        .map(|value| DensityValue {
            value,
            on_break: bu || bv,
        })
}

fn zigzag_inverted_cdf(
    base: &dyn Copula,
    t1: &RegularUdp,
    t2: &RegularUdp,
    u: f64,
    v: f64,
) -> Option<f64> {
    if u <= 0.0 || v <= 0.0 {
        return Some(0.0);
    }
    if u >= 1.0 {
        return Some(v.min(1.0));
    }
    if v >= 1.0 {
        return Some(u);
    }
    let (a, b) = (t1.eval(u), t2.eval(v));
    let c = base.cdf(a, b)?;
    // Piecewise constant slopes; the left limit is the interior value of the
    // cell to the left of a grid line.
    let (da, _) = t1.derivative_checked(u);
    let (db, _) = t2.derivative_checked(v);
    Some((c - a * b) / (da * db) + u * v)
}

/// Cdf of the independent inversion of `base` through the zigzags of
/// orders `j` and `k`.
pub fn cosine_inverted_cdf(base: &dyn Copula, j: usize, k: usize, u: f64, v: f64) -> Result<f64> {
    let t1 = RegularUdp::zigzag(j)?;
    let t2 = RegularUdp::zigzag(k)?;
    zigzag_inverted_cdf(base, &t1, &t2, u, v).ok_or_else(|| Error::MissingCdf(base.describe()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::CorrelationBasis;
    use crate::numeric::quad::UnitRule;
    use crate::numeric::stats::chi_square_sf;
    use crate::population::{basis_corr_matrix, Method};
    use crate::transform::{build_udp, v_transform, Generator, PiecewiseMonotone};

    fn legendre(j: usize) -> RegularUdp {
        build_udp(&PiecewiseMonotone::basis(CorrelationBasis::LEGENDRE, j).unwrap()).unwrap()
    }

    #[test]
    fn identity_and_vee_inverses() {
        let id = RegularUdp::identity();
        for &(x, z) in &[(0.3, 0.1), (0.7, 0.99)] {
            assert_eq!(stochastic_inverse(&id, x, z).unwrap().point, x);
        }
        let vee = RegularUdp::vee();
        for &x in &[0.1, 0.45, 0.8] {
            let lo = stochastic_inverse(&vee, x, 0.3).unwrap().point;
            let hi = stochastic_inverse(&vee, x, 0.7).unwrap().point;
            assert!((lo - (1.0 - x) / 2.0).abs() < 1e-12);
            assert!((hi - (1.0 + x) / 2.0).abs() < 1e-12);
            assert!((vee.preimages(x).weight_sum() - 1.0).abs() < 1e-12);
            assert!((stochastic_inverse(&vee, x, 0.5).unwrap().point - hi).abs() < 1e-12);
        }
        assert!(stochastic_inverse(&vee, 1.5, 0.2).is_err());
    }

    #[test]
    fn zigzag_roots_are_equally_likely() {
        let t = RegularUdp::zigzag(3).unwrap();
        let mut counts = [0usize; 3];
        let n = 30_000;
        let mut r = rng::stream(1, 0);
        for _ in 0..n {
            let p = stochastic_inverse(&t, 0.4, rng::uniform(&mut r))
                .unwrap()
                .point;
            counts[((p * 3.0) as usize).min(2)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn round_trip_and_uniformity() {
        let mut udps = vec![
            RegularUdp::vee(),
            v_transform(0.3, Generator::Power { kappa: 2.0 }).unwrap(),
            RegularUdp::zigzag(5).unwrap(),
            legendre(3),
            legendre(4),
        ];
        udps.push(legendre(4).reflected());
        for t in &udps {
            let pts = rng::generate_chunked(100_000, 4, |r| {
                let x = rng::uniform(r);
                let p = invert(t, x, rng::uniform(r));
                assert!((t.eval(p.point) - x).abs() < 1e-9 || p.flagged);
                p.point
            });
            assert!(ks_uniform(&pts) < 0.01);
        }
    }

    #[test]
    fn inverted_margins_and_symmetry_zeros() {
        let c = InvertedCopula::new(
            CopulaSpec::Gaussian { rho: 0.85 },
            RegularUdp::vee(),
            RegularUdp::vee(),
            Randomizer::Independent,
        )
        .unwrap();
        let p = basis_corr_matrix(
            &c,
            CorrelationBasis::LEGENDRE,
            2,
            Method::monte_carlo(100_000, 2),
        )
        .unwrap();
        assert!(p.get(1, 1).abs() < 3.0 * p.std_error(1, 1));
        assert!(p.get(2, 2) > 0.5);
        let s = sample_n(&c, 100_000, 3);
        assert!(ks_uniform(&s.iter().map(|p| p.0).collect::<Vec<_>>()) < 0.02);
        assert!(ks_uniform(&s.iter().map(|p| p.1).collect::<Vec<_>>()) < 0.02);
    }

    #[test]
    fn comonotone_base_lands_on_support() {
        let t = legendre(4);
        let c = InvertedCopula::with_base(
            Arc::new(CopulaSpec::Comonotone),
            t.clone(),
            t.clone(),
            Randomizer::Independent,
        );
        for (u, v) in sample_n(&c, 5_000, 9) {
            assert!((t.eval(u) - t.eval(v)).abs() < 1e-9);
        }
    }

    #[test]
    fn density_identities() {
        let vee = RegularUdp::vee();
        let ind = CopulaSpec::Independence;
        assert_eq!(
            inverted_density(&ind, &vee, &vee, 0.3, 0.9).unwrap().value,
            1.0
        );
        let g = CopulaSpec::Gaussian { rho: 0.85 };
        let d = inverted_density(&g, &vee, &vee, 0.25, 0.25).unwrap();
        assert!((d.value - g.density(0.5, 0.5).unwrap()).abs() < 1e-12 && !d.on_break);
        assert!(inverted_density(&g, &vee, &vee, 0.5, 0.3).unwrap().on_break);
    }

    #[test]
    fn density_integrates_to_one_and_matches_samples() {
        let base = CopulaSpec::Frank { theta: 5.0 };
        let vee = RegularUdp::vee();
        let c =
            InvertedCopula::new(base, vee.clone(), vee.clone(), Randomizer::Independent).unwrap();
        let rule = UnitRule::new(40);
        let dens = |u: f64, v: f64| c.density(u, v).unwrap();
        let total = rule.integrate_pieces(
            |u| rule.integrate_pieces(|v| dens(u, v), &[0.0, 0.5, 1.0]),
            &[0.0, 0.5, 1.0],
        );
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        let cells = 20;
        let small = UnitRule::new(8);
        let n = 100_000;
        let s = sample_n(&c, n, 21);
        let mut counts = vec![0usize; cells * cells];
        for (u, v) in &s {
            let i = ((u * cells as f64) as usize).min(cells - 1);
            let k = ((v * cells as f64) as usize).min(cells - 1);
            counts[i * cells + k] += 1;
        }
        let h = 1.0 / cells as f64;
        let mut stat = 0.0;
        for i in 0..cells {
            for k in 0..cells {
                let mass = small.integrate(|a| {
                    small.integrate(|b| dens((i as f64 + a) * h, (k as f64 + b) * h))
                }) * h
                    * h;
                let e = mass * n as f64;
                let o = counts[i * cells + k] as f64;
                stat += (o - e).powi(2) / e;
            }
        }
        let p = chi_square_sf(stat, (cells * cells - 1) as f64);
        assert!(p > 0.001, "chi2 {stat} p {p}");
    }

    #[test]
    fn cosine_cdf_properties() {
        let ind = CopulaSpec::Independence;
        assert!((cosine_inverted_cdf(&ind, 3, 2, 0.37, 0.81).unwrap() - 0.37 * 0.81).abs() < 1e-12);
        let frank = CopulaSpec::Frank { theta: 5.0 };
        for i in 1..20 {
            let t = i as f64 / 20.0;
            assert!((cosine_inverted_cdf(&frank, 2, 3, t, 1.0).unwrap() - t).abs() < 1e-9);
            assert!((cosine_inverted_cdf(&frank, 2, 3, 1.0, t).unwrap() - t).abs() < 1e-9);
        }
        // Mixed differences of the cdf reproduce the density.
        let zz = RegularUdp::zigzag(2).unwrap();
        let h = 1e-4;
        for &(u, v) in &[(0.2, 0.3), (0.7, 0.15), (0.6, 0.9)] {
            let c = |a, b| cosine_inverted_cdf(&frank, 2, 2, a, b).unwrap();
            let fd = (c(u + h, v + h) - c(u + h, v - h) - c(u - h, v + h) + c(u - h, v - h))
                / (4.0 * h * h);
            let d = inverted_density(&frank, &zz, &zz, u, v).unwrap().value;
            assert!((fd - d).abs() < 1e-4, "{fd} {d}");
        }
        // Sampling oracle.
        let c = InvertedCopula::new(frank, zz.clone(), zz, Randomizer::Independent).unwrap();
        let s = sample_n(&c, 100_000, 13);
        let mut worst: f64 = 0.0;
        for i in 1..10 {
            for k in 1..10 {
                let (a, b) = (i as f64 / 10.0, k as f64 / 10.0);
                let emp = s.iter().filter(|p| p.0 <= a && p.1 <= b).count() as f64 / s.len() as f64;
                worst = worst.max((emp - c.cdf(a, b).unwrap()).abs());
            }
        }
        assert!(worst < 0.01, "{worst}");
    }

    #[test]
    fn threshold_randomizer_keeps_margins() {
        let c = InvertedCopula::new(
            CopulaSpec::Gaussian { rho: 0.85 },
            RegularUdp::vee(),
            RegularUdp::vee(),
            Randomizer::Threshold { level: 0.6 },
        )
        .unwrap();
        let s = sample_n(&c, 100_000, 5);
        assert!(ks_uniform(&s.iter().map(|p| p.1).collect::<Vec<_>>()) < 0.02);
        assert!(c.density(0.3, 0.3).is_none());
    }

    #[test]
    fn custom_kernels_are_self_tested() {
        let ok = CustomKernel::new("swap", |_, _, r| {
            let z = rng::uniform(r);
            (z, 1.0 - z)
        });
        assert!(ok.is_ok());
        let leaky = CustomKernel::new("leaky", |v1, _, r| (v1, rng::uniform(r)));
        assert!(matches!(leaky, Err(Error::InvalidKernel(_))));
        let skewed = CustomKernel::new("skewed", |_, _, r| {
            let z = rng::uniform(r);
            (z * z, z)
        });
        assert!(skewed.is_err());
    }
}
