//! Bracketed scalar root finding.

/// Brent's method for `f(x) = 0` on `[a, b]` with `f(a)·f(b) ≤ 0`.
pub fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    if fa * fb > 0.0 {
        return if fa.abs() < fb.abs() { a } else { b };
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    b
}

/// Solves `f(x) = y` for a strictly monotone `f` on `[lo, hi]`.
///
/// Uses Newton steps when a derivative is supplied, falling back to bisection
/// whenever a step leaves the bracket or fails to halve the previous step.
/// Returns the nearer endpoint when `y` is outside the image.
pub fn solve_monotone(
    f: &dyn Fn(f64) -> f64,
    df: Option<&dyn Fn(f64) -> f64>,
    y: f64,
    lo: f64,
    hi: f64,
    increasing: bool,
) -> f64 {
    match df {
        Some(df) => solve_monotone_with(&|x| (f(x), df(x)), y, lo, hi, increasing),
        None => {
            let sign = if increasing { 1.0 } else { -1.0 };
            let phi = |x: f64| sign * (f(x) - y);
            let pa = phi(lo);
            if pa >= 0.0 {
                return lo;
            }
            if phi(hi) <= 0.0 {
                return hi;
            }
            brent(phi, lo, hi, 1e-16)
        }
    }
}

/// [`solve_monotone`] for a function returning its value and derivative
/// together.
pub fn solve_monotone_with(
    fdf: &dyn Fn(f64) -> (f64, f64),
    y: f64,
    lo: f64,
    hi: f64,
    increasing: bool,
) -> f64 {
    let sign = if increasing { 1.0 } else { -1.0 };
    let (a0, b0) = (fdf(lo).0, fdf(hi).0);
    let (pa, pb) = (sign * (a0 - y), sign * (b0 - y));
    if pa >= 0.0 {
        return lo;
    }
    if pb <= 0.0 {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    let mut x = a - pa * (b - a) / (pb - pa);
    if !(x > a && x < b) {
        x = 0.5 * (a + b);
    }
    let mut step_old = b - a;
    let mut step = step_old;
    for _ in 0..200 {
        let (fx, dfx) = fdf(x);
        let fx = sign * (fx - y);
        let d = sign * dfx;
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = x - fx / d;
        let usable = d.is_finite() && d > 0.0 && newton > a && newton < b;
        let prev = step_old;
        step_old = step;
        if usable && (2.0 * fx).abs() <= (prev * d).abs() {
            step = fx / d;
            x = newton;
        } else {
            step = 0.5 * (b - a);
            x = a + step;
        }
        let tol = 2.0 * f64::EPSILON * (1.0 + x.abs());
        if step.abs() <= tol || b - a <= tol {
            return x;
        }
    }
    x
}
