use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::Result;
use crate::numeric::quad;
use crate::transform::{PiecewiseMonotone, PushforwardDistribution};

/// Sharp bounds on `ρ_{g,h}` over all copulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
    /// `g(U)` and `h(V)` have the same distribution, so `max = 1`.
    pub max_attains_one: bool,
    /// `g(U)` and `−h(V)` have the same distribution, so `min = −1`.
    pub min_attains_minus_one: bool,
}

const QUANTILE_GRID: usize = 65;
const SAME_TOL: f64 = 1e-9;

fn same_law(a: &PushforwardDistribution, b: &PushforwardDistribution) -> bool {
    if a.source().same_as(b.source()) {
        return true;
    }
    (0..QUANTILE_GRID).all(|i| {
        let p = i as f64 / (QUANTILE_GRID - 1) as f64;
        (a.quantile(p) - b.quantile(p)).abs() < SAME_TOL
    })
}

fn opposite_law(a: &PushforwardDistribution, b: &PushforwardDistribution) -> bool {
    (0..QUANTILE_GRID).all(|i| {
        let p = i as f64 / (QUANTILE_GRID - 1) as f64;
        (a.quantile(p) + b.quantile(1.0 - p)).abs() < SAME_TOL
    })
}

fn standardized_law(g: &PiecewiseMonotone) -> Result<PushforwardDistribution> {
    Ok(PushforwardDistribution::new(&g.ensure_standardized()?))
}

/// `ρ_min = ∫F_g⁻¹(u)F_h⁻¹(1−u)du` and `ρ_max = ∫F_g⁻¹(u)F_h⁻¹(u)du`.
pub fn bounds(g: &PiecewiseMonotone, h: &PiecewiseMonotone) -> Result<Bounds> {
    let fg = standardized_law(g)?;
    let fh = standardized_law(h)?;
    let max_attains_one = same_law(&fg, &fh);
    let min_attains_minus_one = opposite_law(&fg, &fh);
    let tol = 1e-12;
    let max = if max_attains_one {
        1.0
    } else {
        let mut breaks = fg.critical_probabilities().to_vec();
        breaks.extend_from_slice(fh.critical_probabilities());
        quad::integrate_adaptive(
            |p| fg.quantile(p) * fh.quantile(p),
            0.0,
            1.0,
            &breaks,
            tol,
            tol,
        )
        .value
    };
    let min = if min_attains_minus_one {
        -1.0
    } else {
        let mut breaks = fg.critical_probabilities().to_vec();
        breaks.extend(fh.critical_probabilities().iter().map(|p| 1.0 - p));
        quad::integrate_adaptive(
            |p| fg.quantile(p) * fh.quantile(1.0 - p),
            0.0,
            1.0,
            &breaks,
            tol,
            tol,
        )
        .value
    };
    Ok(Bounds {
        min,
        max,
        max_attains_one,
        min_attains_minus_one,
    })
}

/// Which bound an extremal copula attains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Max,
    Min,
}

/// A point of a support set, tagged with its cell `(branch of g, branch of h)`
/// in the grid of turning points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub u: f64,
    pub v: f64,
    pub rect: (usize, usize),
}

/// Points of one monotone curve inside a single turning-point cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub rect: (usize, usize),
    pub points: Vec<(f64, f64)>,
}

/// Support of a copula attaining a bound of `ρ_{g,h}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSet {
    pub extremum: Extremum,
    /// Roots came from `h(v) = ±g(u)` rather than the udp equation.
    pub simplified: bool,
    /// Sorted by `u`, then `v`.
    pub points: Vec<SupportPoint>,
}

impl SupportSet {
    /// Roots grouped by grid value of `u`.
    pub fn per_u(&self) -> Vec<(f64, Vec<f64>)> {
        let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
        for p in &self.points {
            match out.last_mut() {
                Some((u, vs)) if *u == p.u => vs.push(p.v),
                _ => out.push((p.u, vec![p.v])),
            }
        }
        out
    }

    /// Curves grouped by turning-point cell, each ordered by `u`.
    pub fn polylines(&self) -> Vec<Polyline> {
        let mut map: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
        for p in &self.points {
            map.entry(p.rect).or_default().push((p.u, p.v));
        }
        map.into_iter()
            .map(|(rect, points)| Polyline { rect, points })
            .collect()
    }
}

fn udp_value(d: &PushforwardDistribution, u: f64) -> f64 {
    d.cdf(d.source().eval(u))
}

/// `|T_h(v) − T_g(u)|` for the maximum, `|T_h(v) − 1 + T_g(u)|` for the
/// minimum, with `T_g = F_g ∘ g`.
pub fn support_residual(
    g: &PiecewiseMonotone,
    h: &PiecewiseMonotone,
    extremum: Extremum,
    u: f64,
    v: f64,
) -> f64 {
    let fg = PushforwardDistribution::new(g);
    let fh = PushforwardDistribution::new(h);
    residual(&fg, &fh, extremum, u, v)
}

fn residual(
    fg: &PushforwardDistribution,
    fh: &PushforwardDistribution,
    extremum: Extremum,
    u: f64,
    v: f64,
) -> f64 {
    let x = udp_value(fg, u);
    let target = match extremum {
        Extremum::Max => x,
        Extremum::Min => 1.0 - x,
    };
    (udp_value(fh, v) - target).abs()
}

/// Solves for the support of the extremal copula on a grid of
/// `resolution` values `u = (i + ½)/resolution`.
pub fn support_set(
    g: &PiecewiseMonotone,
    h: &PiecewiseMonotone,
    extremum: Extremum,
    resolution: usize,
) -> Result<SupportSet> {
    let g = g.ensure_standardized()?;
    let h = h.ensure_standardized()?;
    let fg = PushforwardDistribution::new(&g);
    let fh = PushforwardDistribution::new(&h);
    let simplified = match extremum {
        Extremum::Max => same_law(&fg, &fh),
        Extremum::Min => opposite_law(&fg, &fh),
    };
    let mut points = Vec::new();
    for i in 0..resolution {
        let u = (i as f64 + 0.5) / resolution as f64;
        let gu = g.eval(u);
        let level = if simplified {
            match extremum {
                Extremum::Max => gu,
                Extremum::Min => -gu,
            }
        } else {
            let x = fg.cdf(gu);
            let target = match extremum {
                Extremum::Max => x,
                Extremum::Min => 1.0 - x,
            };
            fh.quantile(target)
        };
        let gb = g.branch_of(u);
        let mut roots = h.roots(level);
        roots.sort_by(|a, b| a.1.total_cmp(&b.1));
        for (m, v) in roots {
            points.push(SupportPoint {
                u,
                v,
                rect: (gb, m),
            });
        }
    }
    Ok(SupportSet {
        extremum,
        simplified,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::CorrelationBasis;
    use crate::transform::TransformSpec;
    use approx::assert_abs_diff_eq;

    fn lam(j: usize) -> PiecewiseMonotone {
        PiecewiseMonotone::basis(CorrelationBasis::LEGENDRE, j).unwrap()
    }

    #[test]
    fn exact_fractions() {
        let b = bounds(&lam(2), &lam(2)).unwrap();
        assert_abs_diff_eq!(b.min, -0.875, epsilon = 1e-8);
        assert!(b.max_attains_one && !b.min_attains_minus_one);
        let b = bounds(&lam(1), &lam(2)).unwrap();
        assert_abs_diff_eq!(b.max, (15.0f64 / 16.0).sqrt(), epsilon = 1e-8);
        assert_abs_diff_eq!(b.min, -(15.0f64 / 16.0).sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn odd_index_bounds_are_antisymmetric() {
        for (j, k) in [(1, 3), (3, 4), (2, 5)] {
            let b = bounds(&lam(j), &lam(k)).unwrap();
            assert_abs_diff_eq!(b.min, -b.max, epsilon = 1e-8);
        }
    }

    #[test]
    fn numeric_quadrature_agrees_without_shortcuts() {
        // Λ_3 against a rescaled copy: same law, but not recognised by spec.
        let g = lam(3);
        let f = g.clone();
        let h = PiecewiseMonotone::from_fn(move |u| 2.0 * f.eval(u) + 1.0, g.breaks().to_vec())
            .unwrap();
        let b = bounds(&g, &h).unwrap();
        assert_abs_diff_eq!(b.max, 1.0, epsilon = 1e-8);
        let u = TransformSpec::AsymmetricU {
            delta: 0.3,
            p: 1.0,
            q: 2.0,
        }
        .build()
        .unwrap();
        let b = bounds(&u, &lam(2)).unwrap();
        assert!(b.max < 1.0 && b.min > -1.0 && b.min < 0.0);
    }

    #[test]
    fn diagonal_for_identity() {
        let id = PiecewiseMonotone::identity();
        let s = support_set(&id, &id, Extremum::Max, 50).unwrap();
        assert_eq!(s.points.len(), 50);
        assert!(s.points.iter().all(|p| (p.u - p.v).abs() < 1e-12));
        let s = support_set(&id, &id, Extremum::Min, 50).unwrap();
        assert!(s.points.iter().all(|p| (p.u + p.v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn cubic_support_is_diagonal_and_ellipse() {
        let s = support_set(&lam(3), &lam(3), Extremum::Max, 200).unwrap();
        assert!(s.simplified);
        let mut on_ellipse = 0;
        for p in &s.points {
            let (u, v) = (p.u, p.v);
            let e = 20.0 * v * v + 20.0 * u * v + 20.0 * u * u - 30.0 * v - 30.0 * u + 12.0;
            assert!(e.abs() < 1e-8 || (u - v).abs() < 1e-8, "{u} {v}");
            if (u - v).abs() > 1e-6 {
                on_ellipse += 1;
            }
        }
        assert!(on_ellipse > 50);
    }

    #[test]
    fn generic_path_satisfies_udp_equation() {
        let g = lam(2);
        let h = lam(3);
        let fg = PushforwardDistribution::new(&g);
        let fh = PushforwardDistribution::new(&h);
        for ext in [Extremum::Max, Extremum::Min] {
            let s = support_set(&g, &h, ext, 80).unwrap();
            assert!(!s.points.is_empty());
            for p in &s.points {
                assert!(residual(&fg, &fh, ext, p.u, p.v) < 1e-9);
            }
        }
    }

    #[test]
    fn polylines_are_monotone_within_cells() {
        let s = support_set(&lam(4), &lam(4), Extremum::Max, 300).unwrap();
        for line in s.polylines() {
            let d: Vec<f64> = line.points.windows(2).map(|w| w[1].1 - w[0].1).collect();
            assert!(
                d.iter().all(|&x| x > 0.0) || d.iter().all(|&x| x < 0.0),
                "{:?}",
                line.rect
            );
        }
        let per_u = s.per_u();
        assert_eq!(per_u.len(), 300);
        assert!(per_u
            .iter()
            .all(|(_, vs)| vs.windows(2).all(|w| w[0] < w[1])));
    }
}
