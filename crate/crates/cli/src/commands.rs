use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;
use std::f64::consts::PI;
use std::sync::Arc;

use nmdep::basis::{BasisKind, CorrelationBasis};
use nmdep::copula::{sample_n, Copula, CopulaSpec};
use nmdep::estimate::{self as est, rank, simulation_study, RankedSample, StudyConfig};
use nmdep::numeric::rng;
use nmdep::population::{
    basis_corr_matrix, bounds as pop_bounds, gen_spearman, maximize_gen_spearman, support_set,
    symmetry_report, BasisCorrMatrix, Method, Tolerance,
};
use nmdep::transform::PiecewiseMonotone;
use nmdep::udpinv::{fit_ml, ExtremalCopula, ModelSpec};

use crate::error::{CliError, CliResult};
use crate::io::{self, read_json, read_pairs, write_file, Sink};
use crate::{
    BoundsArgs, DemoArgs, EstimateArgs, FitArgs, InputArgs, MatrixArgs, MaximizeArgs, MethodArg,
    ModelArgs, PairArgs, SampleArgs, StudyArgs, SupportArgs,
};

const MAX_SCATTER_POINTS: usize = 5000;

fn pair(p: &PairArgs) -> CliResult<Option<(usize, usize)>> {
    match (p.j, p.k) {
        (Some(j), Some(k)) => Ok(Some((j, k))),
        (None, None) => Ok(None),
        _ => Err(CliError::Usage("--j and --k must be given together".into())),
    }
}

fn require_pair(p: &PairArgs) -> CliResult<(usize, usize)> {
    pair(p)?.ok_or_else(|| CliError::Usage("--j and --k are required".into()))
}

fn require_seed(seed: Option<u64>) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::Usage("--seed is required for stochastic output".into()))
}

fn basis_pair(
    kind: BasisKind,
    j: usize,
    k: usize,
) -> CliResult<(PiecewiseMonotone, PiecewiseMonotone)> {
    let b = CorrelationBasis::from(kind);
    Ok((
        PiecewiseMonotone::basis(b, j)?,
        PiecewiseMonotone::basis(b, k)?,
    ))
}

fn ranked(input: &InputArgs) -> CliResult<RankedSample> {
    let data = read_pairs(&input.input, input.header)?;
    if data.len() < 2 {
        return Err(CliError::Data(format!(
            "need at least 2 observations, found {}",
            data.len()
        )));
    }
    Ok(rank(&data, input.ties.into())?)
}

fn load_model(m: &ModelArgs, basis: BasisKind, p: &PairArgs) -> CliResult<Arc<dyn Copula>> {
    match (&m.model, &m.model_spec) {
        (None, Some(path)) => {
            let spec: ModelSpec = read_json(path)?;
            Ok(Arc::new(spec.copula()?))
        }
        (Some(name), None) => Ok(match name.as_str() {
            "jointly_symmetric_44" => Arc::new(ExtremalCopula::jointly_symmetric_44()),
            "prohibition_sign" => Arc::new(ExtremalCopula::prohibition_sign()?),
            "generic_max" | "generic_min" => {
                let (j, k) = require_pair(p)?;
                let (g, h) = basis_pair(basis, j, k)?;
                Arc::new(if name == "generic_max" {
                    ExtremalCopula::generic_max(&g, &h)?
                } else {
                    ExtremalCopula::generic_min(&g, &h)?
                })
            }
            other => {
                let spec: CopulaSpec = other.parse()?;
                spec.validate()?;
                Arc::new(spec)
            }
        }),
        _ => Err(CliError::Usage(
            "give exactly one of --model or --model-spec".into(),
        )),
    }
}

fn method(m: MethodArg, nodes: usize, n: usize, seed: Option<u64>) -> CliResult<Method> {
    Ok(match m {
        MethodArg::Hk => Method::HardyKrause { nodes },
        MethodArg::Mc => Method::monte_carlo(n, require_seed(seed)?),
    })
}

fn write_svg(
    path: Option<&std::path::PathBuf>,
    force: bool,
    content: impl FnOnce() -> String,
) -> CliResult<()> {
    match path {
        Some(p) => write_file(p, &content(), force),
        None => Ok(()),
    }
}

fn thin(points: &[(f64, f64)]) -> &[(f64, f64)] {
    &points[..points.len().min(MAX_SCATTER_POINTS)]
}

pub fn estimate(a: EstimateArgs) -> CliResult<()> {
    let sink = Sink::new(a.out.output.clone(), a.out.force);
    sink.check(&[a.out.svg.as_ref(), a.matrix_csv.as_ref()])?;
    let sample = ranked(&a.input)?;
    let kind = a.basis.basis;
    let n = sample.len();
    let common = json!({
        "estimator": a.estimator,
        "basis": kind,
        "n": n,
        "tie_policy": sample.tie_policy(),
        "had_ties": sample.had_ties(),
        "provenance": sample.provenance(),
    });
    let mut body = common;
    if let Some((j, k)) = pair(&a.pair)? {
        let (g, h) = basis_pair(kind, j, k)?;
        let value = est::estimate(&sample, &g, &h, a.estimator)?;
        body["j"] = j.into();
        body["k"] = k.into();
        body["value"] = value.into();
        return sink.write_json("estimate", &body);
    }
    let m = est::estimate_matrix(
        &sample,
        CorrelationBasis::from(kind),
        a.basis.order,
        a.estimator,
    )?;
    let p = &m.matrix;
    body["order"] = a.basis.order.into();
    body["matrix"] = json!(p.entries);
    body["psd"] = json!(p.psd_check());
    body["symmetry"] = json!(symmetry_report(
        p,
        Tolerance::Absolute(3.0 / (n as f64).sqrt())
    ));
    sink.write_json("estimate", &body)?;
    if let Some(path) = &a.matrix_csv {
        write_file(path, &io::matrix_csv(&p.entries), a.out.force)?;
    }
    write_svg(a.out.svg.as_ref(), a.out.force, || {
        crate::svg::heatmap(
            &p.entries,
            &format!("{} {kind} estimates, n = {n}", a.estimator),
        )
    })
}

pub fn bounds(a: BoundsArgs) -> CliResult<()> {
    let sink = Sink::new(a.out.output.clone(), a.out.force);
    sink.check(&[a.out.svg.as_ref()])?;
    let kind = a.basis.basis;
    if let Some((j, k)) = pair(&a.pair)? {
        let (g, h) = basis_pair(kind, j, k)?;
        let b = pop_bounds(&g, &h)?;
        let mut body = json!(b);
        body["basis"] = json!(kind);
        body["j"] = j.into();
        body["k"] = k.into();
        return sink.write_json("bounds", &body);
    }
    let order = a.basis.order;
    let b = CorrelationBasis::from(kind);
    let funcs: Vec<PiecewiseMonotone> = (1..=order)
        .map(|j| PiecewiseMonotone::basis(b, j))
        .collect::<Result<_, _>>()?;
    let mut max = vec![vec![0.0; order]; order];
    let mut min = vec![vec![0.0; order]; order];
    for j in 0..order {
        for k in 0..order {
            let r = pop_bounds(&funcs[j], &funcs[k])?;
            max[j][k] = r.max;
            min[j][k] = r.min;
        }
    }
    sink.write_json(
        "bounds",
        &json!({ "basis": kind, "order": order, "max": max, "min": min }),
    )?;
    write_svg(a.out.svg.as_ref(), a.out.force, || match a.extremum {
        crate::ExtremumArg::Max => {
            crate::svg::heatmap(&max, &format!("maximal {kind} correlations"))
        }
        crate::ExtremumArg::Min => {
            crate::svg::heatmap(&min, &format!("minimal {kind} correlations"))
        }
    })
}

pub fn support(a: SupportArgs) -> CliResult<()> {
    let sink = Sink::new(a.out.output.clone(), a.out.force);
    sink.check(&[a.out.svg.as_ref()])?;
    let (j, k) = require_pair(&a.pair)?;
    if a.resolution == 0 {
        return Err(CliError::Usage("--resolution must be positive".into()));
    }
    let (g, h) = basis_pair(a.basis, j, k)?;
    let s = support_set(&g, &h, a.extremum.into(), a.resolution)?;
    let body = json!({
        "basis": a.basis,
        "j": j,
        "k": k,
        "extremum": s.extremum,
        "simplified": s.simplified,
        "resolution": a.resolution,
        "polylines": s.polylines(),
        "points": s.points,
    });
    sink.write_json("support", &body)?;
    write_svg(a.out.svg.as_ref(), a.out.force, || {
        let pts: Vec<(f64, f64)> = s.points.iter().map(|p| (p.u, p.v)).collect();
        crate::svg::scatter(
            &pts,
            &format!("support of the {:?} copula for ({j}, {k})", s.extremum),
        )
    })
}

fn matrix_body(p: &BasisCorrMatrix, model: &dyn Copula) -> serde_json::Value {
    let tol = if p.std_errors.is_some() {
        Tolerance::StandardErrors(3.0)
    } else {
        Tolerance::Absolute(1e-6)
    };
    json!({
        "model": model.describe(),
        "basis": p.basis,
        "order": p.order(),
        "source": p.source,
        "matrix": p.entries,
        "std_errors": p.std_errors,
        "error_estimate": p.error_estimate,
        "psd": p.psd_check(),
        "symmetry": symmetry_report(p, tol),
    })
}

pub fn matrix(a: MatrixArgs) -> CliResult<()> {
    let sink = Sink::new(a.out.output.clone(), a.out.force);
    sink.check(&[a.out.svg.as_ref(), a.matrix_csv.as_ref()])?;
    let copula = load_model(&a.model, a.basis.basis, &PairArgs { j: None, k: None })?;
    let method = method(a.method, a.nodes, a.n, a.seed)?;
    let kind = a.basis.basis;
    if let Some((j, k)) = pair(&a.pair)? {
        let (g, h) = basis_pair(kind, j, k)?;
        let m = gen_spearman(&*copula, &g, &h, method)?;
        let body = json!({
            "model": copula.describe(), "basis": kind, "j": j, "k": k,
            "method": method, "value": m.value, "error": m.error,
        });
        return sink.write_json("matrix", &body);
    }
    let p = basis_corr_matrix(
        &*copula,
        CorrelationBasis::from(kind),
        a.basis.order,
        method,
    )?;
    sink.write_json("matrix", &matrix_body(&p, &*copula))?;
    if let Some(path) = &a.matrix_csv {
        write_file(path, &io::matrix_csv(&p.entries), a.out.force)?;
    }
    write_svg(a.out.svg.as_ref(), a.out.force, || {
        crate::svg::heatmap(
            &p.entries,
            &format!("{kind} correlations of {}", copula.describe()),
        )
    })
}

pub fn maximize(a: MaximizeArgs) -> CliResult<()> {
    let sink = Sink::new(a.out.output.clone(), a.out.force);
    sink.check(&[a.out.svg.as_ref()])?;
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let basis = CorrelationBasis::from(a.basis.basis);
    let (p, source) = match &a.input {
        Some(path) => {
            if a.model.model.is_some() || a.model.model_spec.is_some() {
                return Err(CliError::Usage(
                    "give either --input or a model, not both".into(),
                ));
            }
            let sample = ranked(&InputArgs {
                input: path.clone(),
                header: a.header,
                ties: a.ties,
            })?;
            let m = est::estimate_matrix(&sample, basis, a.basis.order, a.estimator)?;
            (
                m.matrix,
                format!("{} estimate from {}", a.estimator, path.display()),
            )
        }
        None => {
            let copula = load_model(&a.model, a.basis.basis, &a.pair)?;
            let method = method(a.method, 128, a.n, a.seed)?;
            let m = basis_corr_matrix(&*copula, basis, a.basis.order, method)?;
            (m, copula.describe())
        }
    };
    let e = maximize_gen_spearman(&p)?;
    let (g, h) = e.functions()?;
    let u: Vec<f64> = (0..a.points)
        .map(|i| i as f64 / (a.points - 1) as f64)
        .collect();
    let gv: Vec<f64> = u.iter().map(|&x| g.eval(x)).collect();
    let hv: Vec<f64> = u.iter().map(|&x| h.eval(x)).collect();
    let body = json!({
        "source": source,
        "basis": e.basis,
        "order": a.basis.order,
        "rho": e.rho,
        "alpha_g": e.alpha_g,
        "alpha_h": e.alpha_h,
        "curves": { "u": u, "g": gv, "h": hv },
    });
    sink.write_json("maximize", &body)?;
    write_svg(a.out.svg.as_ref(), a.out.force, || {
        let zip = |v: &[f64]| u.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
        crate::svg::curves(
            &[("g", zip(&gv)), ("h", zip(&hv))],
            &format!("maximizing transformations, rho = {:.3}", e.rho),
        )
    })
}

pub fn sample(a: SampleArgs) -> CliResult<()> {
    let sink = Sink::new(a.out.output.clone(), a.out.force);
    sink.check(&[a.out.svg.as_ref()])?;
    let seed = require_seed(a.seed)?;
    let copula = load_model(&a.model, a.basis, &a.pair)?;
    let pts = sample_n(&*copula, a.n, seed);
    sink.write(&io::pairs_csv(["u", "v"], &pts)?)?;
    write_svg(a.out.svg.as_ref(), a.out.force, || {
        crate::svg::scatter(thin(&pts), &copula.describe())
    })
}

pub fn fit(a: FitArgs) -> CliResult<()> {
    let sink = Sink::new(a.out.output.clone(), a.out.force);
    sink.check(&[a.out.svg.as_ref()])?;
    let sample = ranked(&a.input)?;
    let spec: ModelSpec = read_json(&a.model_spec)?;
    let fit = fit_ml(&sample, &spec)?;
    if !fit.converged {
        log::warn!("optimizer did not converge");
    }
    let mut body = json!(fit);
    body["n"] = sample.len().into();
    sink.write_json("fit", &body)?;
    write_svg(a.out.svg.as_ref(), a.out.force, || {
        crate::svg::scatter(thin(&sample.pseudo_observations()), "pseudo-observations")
    })
}

pub fn study(a: StudyArgs) -> CliResult<()> {
    let sink = Sink::new(a.out.output.clone(), a.out.force);
    sink.check(&[a.table_csv.as_ref()])?;
    let mut config: StudyConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => StudyConfig::default(),
    };
    config.seed = require_seed(a.seed)?;
    if let Some(r) = a.reps {
        config.reps = r;
    }
    if let Some(s) = &a.sizes {
        config.sizes = s.clone();
    }
    let table = simulation_study(&config)?;
    sink.write_json("study", &table)?;
    if let Some(path) = &a.table_csv {
        write_file(path, &table.to_csv(), a.out.force)?;
    }
    Ok(())
}

/// Draws from the motivating models; noise parameters are standard deviations.
pub fn demo_rows(model: u8, n: usize, seed: u64) -> CliResult<Vec<(f64, f64)>> {
    let mut r = rng::stream(seed, 0);
    let std = Normal::new(0.0, 1.0).expect("valid normal");
    let rows = match model {
        1 => (0..n)
            .map(|_| {
                let x: f64 = std.sample(&mut r);
                (x, x * x + std.sample(&mut r))
            })
            .collect(),
        2 => {
            let z = Normal::new(0.0, 1.5).expect("valid normal");
            (0..n)
                .map(|_| {
                    let x: f64 = std.sample(&mut r);
                    let e: f64 = z.sample(&mut r);
                    let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
                    (x, sign * (x * x + e.abs()).sqrt())
                })
                .collect()
        }
        3 => {
            let z = Normal::new(1.0, 0.1).expect("valid normal");
            (0..n)
                .map(|_| {
                    let t = 2.0 * PI * r.random::<f64>();
                    let s: f64 = z.sample(&mut r);
                    (t.cos() * s, t.sin() * s)
                })
                .collect()
        }
        m => {
            return Err(CliError::Usage(format!(
                "unknown demo model {m}; expected 1, 2 or 3"
            )))
        }
    };
    Ok(rows)
}

pub fn demo_data(a: DemoArgs) -> CliResult<()> {
    let sink = Sink::new(a.out.output.clone(), a.out.force);
    sink.check(&[a.out.svg.as_ref()])?;
    let seed = require_seed(a.seed)?;
    let rows = demo_rows(a.model, a.n, seed)?;
    sink.write(&io::pairs_csv(["x", "y"], &rows)?)?;
    if a.out.svg.is_some() {
        let s = rank(&rows, nmdep::estimate::TiePolicy::MidrankWarn)?;
        write_svg(a.out.svg.as_ref(), a.out.force, || {
            crate::svg::scatter(
                thin(&s.pseudo_observations()),
                &format!("demo model {}", a.model),
            )
        })?;
    }
    Ok(())
}
