//! Box-constrained Nelder–Mead with multi-start.

/// Outcome of a minimization.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Settings for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub f_tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            f_tol: 1e-8,
            max_iter: 4000,
            initial_step: 0.1,
        }
    }
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((xi, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *xi = xi.clamp(lo, hi);
    }
}

/// Minimizes `f` inside the box `[lower, upper]` starting from `x0`.
///
/// Candidate points are projected onto the box. The initial simplex steps are
/// a fraction of each box width. Restarts once from the best vertex to guard
/// against collapsed simplices.
pub fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let mut start = x0.to_vec();
    project(&mut start, lower, upper);
    let mut best = run(f, &start, lower, upper, opts);
    let restart = run(f, &best.x.clone(), lower, upper, opts);
    best.iterations += restart.iterations;
    if restart.value <= best.value {
        best.x = restart.x;
        best.value = restart.value;
        best.converged = restart.converged;
    }
    best
}

fn run(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        let width = (upper[i] - lower[i]).min(1e6);
        let step = opts.initial_step * if width.is_finite() { width } else { 1.0 };
        x[i] += step;
        if x[i] > upper[i] {
            x[i] = x0[i] - step;
        }
        project(&mut x, lower, upper);
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let spread = (values[n] - values[0]).abs();
        if spread <= opts.f_tol * (1.0 + values[0].abs()) && values[0].is_finite() {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for x in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut p, lower, upper);
            p
        };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(gamma);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let p = along(rho * alpha);
            let v = eval(&p);
            (p, v)
        } else {
            let p = along(-rho);
            let v = eval(&p);
            (p, v)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for (xi, bi) in simplex[i].iter_mut().zip(&best) {
                *xi = bi + sigma * (*xi - bi);
            }
            values[i] = eval(&simplex[i]);
        }
    }
    let (mut bi, mut bv) = (0, values[0]);
    for (i, &v) in values.iter().enumerate() {
        if v < bv {
            bi = i;
            bv = v;
        }
    }
    Minimum {
        x: simplex[bi].clone(),
        value: bv,
        iterations,
        converged,
    }
}

/// Runs [`nelder_mead`] from each start and keeps the best result.
pub fn multi_start(
    f: &dyn Fn(&[f64]) -> f64,
    starts: &[Vec<f64>],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let mut best: Option<Minimum> = None;
    for s in starts {
        let m = nelder_mead(f, s, lower, upper, opts);
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    best.expect("at least one start")
}
