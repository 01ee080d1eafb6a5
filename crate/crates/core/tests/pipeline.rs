use nmdep::basis::CorrelationBasis;
use nmdep::copula::CopulaSpec;
use nmdep::estimate::{estimate_matrix, matrix_distance, rank, Estimator, TiePolicy};
use nmdep::population::{basis_corr_matrix, maximize_gen_spearman, Method};
use nmdep::udpinv::{fit_ml, AxisModel, ModelSpec};

fn model() -> ModelSpec {
    ModelSpec::new(
        CopulaSpec::Gumbel { theta: 3.0 },
        AxisModel::vtransform(0.4, 1.5),
        AxisModel::Identity,
    )
}

#[test]
fn estimates_converge_to_population_matrix() {
    let m = model();
    let truth = basis_corr_matrix(
        &m.copula().unwrap(),
        CorrelationBasis::LEGENDRE,
        4,
        Method::monte_carlo(400_000, 1),
    )
    .unwrap();
    let mut previous = f64::INFINITY;
    for (n, seed) in [(200, 2), (5000, 3)] {
        let data = m.sample(n, seed).unwrap();
        let s = rank(&data, TiePolicy::Reject).unwrap();
        let est = estimate_matrix(&s, CorrelationBasis::LEGENDRE, 4, Estimator::T1).unwrap();
        let d = matrix_distance(&est, &truth).unwrap();
        assert!(d < previous);
        previous = d;
    }
    assert!(previous < 0.02, "{previous}");
}

#[test]
fn elicited_transformations_reflect_the_model() {
    // A v-transform on the first axis only: g should be u-shaped and h monotone.
    let m = model();
    let p = basis_corr_matrix(
        &m.copula().unwrap(),
        CorrelationBasis::LEGENDRE,
        6,
        Method::monte_carlo(200_000, 5),
    )
    .unwrap();
    let e = maximize_gen_spearman(&p).unwrap();
    let g_even: f64 = e.alpha_g.iter().skip(1).step_by(2).map(|a| a * a).sum();
    assert!(g_even > 0.5, "{e:?}");
    let (g, h) = e.functions().unwrap();
    let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let hv: Vec<f64> = grid.iter().map(|&u| h.eval(u)).collect();
    // Truncation leaves small wiggles; the variation is almost all increase.
    let up: f64 = hv.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum();
    let total: f64 = hv.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    assert!(up > 0.95 * total, "{up} {total}");
    let gv: Vec<f64> = grid.iter().map(|&u| g.eval(u)).collect();
    let lowest = gv
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert!(lowest > 40 && lowest < 160, "{lowest}");
    assert!(e.rho > 0.5);
}

#[test]
fn fit_round_trips_through_json() {
    let m = model();
    let data = m.sample(3000, 9).unwrap();
    let s = rank(&data, TiePolicy::Reject).unwrap();
    let start: ModelSpec = serde_json::from_str(
        r#"{"base":{"family":"gumbel","theta":1.5},
            "t1":{"kind":"vtransform","delta":0.5},
            "t2":{"kind":"identity"}}"#,
    )
    .unwrap();
    let fit = fit_ml(&s, &start).unwrap();
    assert!(fit.converged);
    let AxisModel::Vtransform { delta, kappa, .. } = fit.model.t1 else {
        panic!()
    };
    assert!((delta - 0.4).abs() < 0.05, "{fit:?}");
    assert!((kappa - 1.5).abs() < 0.5, "{fit:?}");
    assert!(
        (fit.model.base.parameter().unwrap() - 3.0).abs() < 0.5,
        "{fit:?}"
    );
    let json = serde_json::to_string(&fit).unwrap();
    let back: nmdep::udpinv::FitResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, fit);
}
