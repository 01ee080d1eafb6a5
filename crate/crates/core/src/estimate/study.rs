use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{estimate, estimate_matrix, matrix_distance, rank, Estimator, TiePolicy};
use crate::basis::CorrelationBasis;
use crate::copula::{Copula, CopulaSpec};
use crate::error::{Error, Result};
use crate::numeric::rng::{self, derive_seed};
use crate::numeric::roots::brent;
use crate::population::{basis_corr_matrix, gen_spearman, Method};
use crate::transform::PiecewiseMonotone;

/// Copula families of the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyFamily {
    Clayton,
    Gumbel,
    Gauss,
}

impl StudyFamily {
    pub fn name(self) -> &'static str {
        match self {
            StudyFamily::Clayton => "Clayton",
            StudyFamily::Gumbel => "Gumbel",
            StudyFamily::Gauss => "Gauss",
        }
    }
}

/// Parameter of `family` with Spearman's rho equal to `target`.
///
/// The Gaussian case is closed form; Clayton and Gumbel are solved by root
/// finding on the quadrature value of `ρ^Λ_{11}`.
pub fn calibrate(family: StudyFamily, target: f64) -> Result<CopulaSpec> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Calibration(format!(
            "target Spearman's rho {target} outside (0, 1)"
        )));
    }
    if family == StudyFamily::Gauss {
        return Ok(CopulaSpec::Gaussian {
            rho: 2.0 * (PI * target / 6.0).sin(),
        });
    }
    let lam1 = PiecewiseMonotone::basis(CorrelationBasis::LEGENDRE, 1)?;
    let make = |t: f64| match family {
        StudyFamily::Clayton => CopulaSpec::Clayton {
            theta: t,
            rotation: Default::default(),
        },
        _ => CopulaSpec::Gumbel { theta: t },
    };
    let rho = |t: f64| {
        gen_spearman(&make(t), &lam1, &lam1, Method::default())
            .map(|m| m.value - target)
            .unwrap_or(f64::NAN)
    };
    let (lo, hi) = match family {
        StudyFamily::Clayton => (1e-4, 60.0),
        _ => (1.0, 60.0),
    };
    let (flo, fhi) = (rho(lo), rho(hi));
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::Calibration(format!(
            "no {} parameter in [{lo}, {hi}] reaches {target}",
            family.name()
        )));
    }
    Ok(make(brent(rho, lo, hi, 1e-12)))
}

/// Settings of the simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub families: Vec<StudyFamily>,
    /// Spearman's rho levels.
    pub targets: Vec<f64>,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub order: usize,
    pub estimators: Vec<Estimator>,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            families: vec![
                StudyFamily::Clayton,
                StudyFamily::Gumbel,
                StudyFamily::Gauss,
            ],
            targets: vec![0.25, 0.75],
            sizes: vec![20, 50, 100, 500, 1000],
            reps: 500,
            order: 6,
            estimators: vec![
                Estimator::T1,
                Estimator::T2,
                Estimator::T3,
                Estimator::T4,
                Estimator::T5,
            ],
            seed: 2024,
        }
    }
}

/// Mean matrix distance for one family, level, size and estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub family: StudyFamily,
    pub target: f64,
    pub n: usize,
    pub estimator: Estimator,
    pub mean_distance: f64,
    /// Standard error of the mean over replications.
    pub std_error: f64,
}

/// Results of [`simulation_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub config: StudyConfig,
    /// Calibrated copula per family and level.
    pub copulas: Vec<(StudyFamily, f64, CopulaSpec)>,
    pub cells: Vec<StudyCell>,
}

impl StudyTable {
    pub fn cell(
        &self,
        family: StudyFamily,
        target: f64,
        n: usize,
        est: Estimator,
    ) -> Option<&StudyCell> {
        self.cells
            .iter()
            .find(|c| c.family == family && c.target == target && c.n == n && c.estimator == est)
    }

    /// Estimator with the smallest mean distance in a row of the table.
    pub fn best(&self, family: StudyFamily, target: f64, n: usize) -> Option<Estimator> {
        self.cells
            .iter()
            .filter(|c| c.family == family && c.target == target && c.n == n)
            .min_by(|a, b| a.mean_distance.total_cmp(&b.mean_distance))
            .map(|c| c.estimator)
    }

    /// One row per family and size, one column per level and estimator.
    pub fn to_csv(&self) -> String {
        let cfg = &self.config;
        let mut out = String::from("copula,n");
        for t in &cfg.targets {
            for e in &cfg.estimators {
                let _ = write!(out, ",rho{t}_{e}");
            }
        }
        out.push('\n');
        for &f in &cfg.families {
            for &n in &cfg.sizes {
                let _ = write!(out, "{},{n}", f.name());
                for &t in &cfg.targets {
                    for &e in &cfg.estimators {
                        match self.cell(f, t, n, e) {
                            Some(c) => {
                                let _ = write!(out, ",{:.4}", c.mean_distance);
                            }
                            None => out.push(','),
                        }
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Mean distances between estimated and true Legendre matrices over
/// replicated samples. Deterministic for a given seed.
pub fn simulation_study(config: &StudyConfig) -> Result<StudyTable> {
    if config.reps == 0 || config.sizes.iter().any(|&n| n < 2) {
        return Err(Error::param("need at least one replication and n ≥ 2"));
    }
    let basis = CorrelationBasis::LEGENDRE;
    let mut copulas = Vec::new();
    let mut cells = Vec::new();
    for (fi, &family) in config.families.iter().enumerate() {
        for (ti, &target) in config.targets.iter().enumerate() {
            let copula = calibrate(family, target)?;
            let truth = basis_corr_matrix(&copula, basis, config.order, Method::default())?;
            copulas.push((family, target, copula));
            for &n in &config.sizes {
                let cell_seed = derive_seed(
                    derive_seed(derive_seed(config.seed, fi as u64), ti as u64),
                    n as u64,
                );
                let runs: Vec<Result<Vec<f64>>> = (0..config.reps)
                    .into_par_iter()
                    .map(|rep| {
                        let mut r = rng::stream(cell_seed, rep as u64);
                        let data: Vec<(f64, f64)> = (0..n).map(|_| copula.sample(&mut r)).collect();
                        let sample = rank(&data, TiePolicy::MidrankWarn)?;
                        config
                            .estimators
                            .iter()
                            .map(|&e| {
                                let m = estimate_matrix(&sample, basis, config.order, e)?;
                                matrix_distance(&m, &truth)
                            })
                            .collect()
                    })
                    .collect();
                let runs: Vec<Vec<f64>> = runs.into_iter().collect::<Result<_>>()?;
                for (ei, &estimator) in config.estimators.iter().enumerate() {
                    let d: Vec<f64> = runs.iter().map(|r| r[ei]).collect();
                    let mean = crate::numeric::stats::mean(&d);
                    let se = if d.len() > 1 {
                        (crate::numeric::stats::variance(&d) / d.len() as f64).sqrt()
                    } else {
                        0.0
                    };
                    cells.push(StudyCell {
                        family,
                        target,
                        n,
                        estimator,
                        mean_distance: mean,
                        std_error: se,
                    });
                }
            }
        }
    }
    Ok(StudyTable {
        config: config.clone(),
        copulas,
        cells,
    })
}

/// `√n · max_{ℓ≠m} |ρ̂^{Tℓ} − ρ̂^{Tm}|` averaged over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub n: usize,
    pub statistic: f64,
}

/// Scaled maximal pairwise difference between all six estimators.
pub fn asymptotic_equivalence_check(
    copula: &dyn Copula,
    g: &PiecewiseMonotone,
    h: &PiecewiseMonotone,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<EquivalenceRow>> {
    if reps == 0 {
        return Err(Error::param("need at least one replication"));
    }
    let g = g.ensure_standardized()?;
    let h = h.ensure_standardized()?;
    sizes
        .iter()
        .map(|&n| {
            let per: Vec<Result<f64>> = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let mut r = rng::stream(derive_seed(seed, n as u64), rep as u64);
                    let data: Vec<(f64, f64)> = (0..n).map(|_| copula.sample(&mut r)).collect();
                    let sample = rank(&data, TiePolicy::MidrankWarn)?;
                    let vals: Vec<f64> = Estimator::ALL
                        .iter()
                        .map(|&e| estimate(&sample, &g, &h, e))
                        .collect::<Result<_>>()?;
                    let hi = vals.iter().copied().fold(f64::MIN, f64::max);
                    let lo = vals.iter().copied().fold(f64::MAX, f64::min);
                    Ok((n as f64).sqrt() * (hi - lo))
                })
                .collect();
            let per: Vec<f64> = per.into_iter().collect::<Result<_>>()?;
            Ok(EquivalenceRow {
                n,
                statistic: crate::numeric::stats::mean(&per),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn calibration_hits_targets() {
        let lam1 = PiecewiseMonotone::basis(CorrelationBasis::LEGENDRE, 1).unwrap();
        for family in [
            StudyFamily::Clayton,
            StudyFamily::Gumbel,
            StudyFamily::Gauss,
        ] {
            for target in [0.25, 0.75] {
                let c = calibrate(family, target).unwrap();
                let got = gen_spearman(&c, &lam1, &lam1, Method::default())
                    .unwrap()
                    .value;
                assert_abs_diff_eq!(got, target, epsilon = 1e-8);
            }
        }
        // Gumbel has ρ_S = 0 at θ = 1.
        assert!(calibrate(StudyFamily::Gumbel, -0.2).is_err());
    }

    #[test]
    fn small_study_is_consistent_and_deterministic() {
        let cfg = StudyConfig {
            families: vec![StudyFamily::Clayton],
            targets: vec![0.25],
            sizes: vec![20, 500],
            reps: 40,
            seed: 1,
            ..StudyConfig::default()
        };
        let a = simulation_study(&cfg).unwrap();
        for e in &cfg.estimators {
            let small = a
                .cell(StudyFamily::Clayton, 0.25, 20, *e)
                .unwrap()
                .mean_distance;
            let large = a
                .cell(StudyFamily::Clayton, 0.25, 500, *e)
                .unwrap()
                .mean_distance;
            assert!(large < small);
        }
        let csv = a.to_csv();
        assert!(csv.starts_with("copula,n,rho0.25_T1,"));
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(a, simulation_study(&cfg).unwrap());
    }

    #[test]
    fn equivalence_statistic_shrinks() {
        let lam1 = PiecewiseMonotone::basis(CorrelationBasis::LEGENDRE, 1).unwrap();
        let c = CopulaSpec::Gaussian { rho: 0.5 };
        let rows = asymptotic_equivalence_check(&c, &lam1, &lam1, &[50, 2000], 30, 3).unwrap();
        assert!(rows[1].statistic < rows[0].statistic);
    }

    #[test]
    fn identity_estimators_agree_to_first_order() {
        let id = PiecewiseMonotone::identity();
        let c = CopulaSpec::Frank { theta: 3.0 };
        for n in [100usize, 1000] {
            let rows = asymptotic_equivalence_check(&c, &id, &id, &[n], 5, 8).unwrap();
            assert!(rows[0].statistic / (n as f64).sqrt() < 5.0 / n as f64);
        }
    }
}
