//! Scalar root finding.

use crate::error::{CurvError, Result};

/// Brent's method on a sign-changing bracket.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(CurvError::Range(format!("no sign change on [{lo}, {hi}] (f = {fa:e}, {fb:e})")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(CurvError::Convergence { iterations: max_iter, residual: fb.abs(), context: "brent".into() })
}

/// Newton iteration kept inside a shrinking sign-change bracket; falls back to
/// bisection whenever the Newton step leaves the bracket or stalls.
/// `f` returns the value and the derivative.
pub fn safeguarded_newton<F: FnMut(f64) -> Result<(f64, f64)>>(
    mut f: F,
    lo: f64,
    hi: f64,
    x0: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a)?.0;
    let fb = f(b)?.0;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(CurvError::Range(format!("no sign change on [{lo}, {hi}] (f = {fa:e}, {fb:e})")));
    }
    let neg_at_a = fa < 0.0;
    let mut x = if x0 > a && x0 < b { x0 } else { 0.5 * (a + b) };
    let mut last = f64::INFINITY;
    for _ in 0..max_iter {
        let (fx, dfx) = f(x)?;
        last = fx.abs();
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if (fx < 0.0) == neg_at_a {
            a = x;
        } else {
            b = x;
        }
        let newton = x - fx / dfx;
        x = if dfx != 0.0 && newton.is_finite() && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (b - a).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            return Ok(x);
        }
    }
    Err(CurvError::Convergence { iterations: max_iter, residual: last, context: "safeguarded newton".into() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0 * x - 5.0, 2.0, 3.0, 1e-15, 100).unwrap();
        assert!((r - 2.0945514815423265).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_missing_sign_change() {
        assert!(matches!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50), Err(CurvError::Range(_))));
    }

    #[test]
    fn newton_converges_quadratically() {
        let r = safeguarded_newton(|x| Ok((x.exp() - 3.0, x.exp())), 0.0, 5.0, 4.9, 1e-15, 60).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-15);
    }
}
