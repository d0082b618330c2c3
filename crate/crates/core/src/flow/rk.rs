//! Adaptive one-step integrators for `y' = f(y)` on grid vectors.

use crate::error::Result;

/// Right-hand side plus the state diagnostics needed for event detection.
#[derive(Debug, Clone)]
pub(crate) struct Eval {
    pub dy: Vec<f64>,
    pub min_rho: f64,
    pub min_xi: f64,
}

pub(crate) enum Attempt {
    /// New state and the evaluation at it.
    Accepted {
        y: Vec<f64>,
        at_new: Eval,
        h: f64,
    },
    Rejected,
}

/// Weighted sup norm of a local error estimate.
fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: f64) -> f64 {
    let scale = y0.iter().chain(y1).fold(0.0f64, |m, x| m.max(x.abs()));
    let e = err.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    e / (atol + rtol * scale)
}

fn axpy_sum(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for &(c, k) in terms {
        if c == 0.0 {
            continue;
        }
        let hc = h * c;
        for (o, v) in out.iter_mut().zip(k) {
            *o += hc * v;
        }
    }
    out
}

/// Step-size suggestion: proportional-integral control on the error history.
#[derive(Debug, Clone)]
pub(crate) struct Controller {
    pub h: f64,
    err_old: f64,
    order: f64,
}

impl Controller {
    pub fn new(h: f64, order: f64) -> Self {
        Controller { h, err_old: 1e-4, order }
    }

    fn accept(&mut self, h_used: f64, err: f64, clamped: bool) {
        let beta = 0.4 / self.order;
        let alpha = 1.0 / self.order - 0.75 * beta;
        let err = err.max(1e-10);
        let fac = (0.9 * err.powf(-alpha) * self.err_old.powf(beta)).clamp(0.2, 5.0);
        self.err_old = err;
        let next = h_used * fac;
        // a step shortened to hit an output time says little about the natural size
        self.h = if clamped { self.h.max(next) } else { next };
    }

    fn reject(&mut self, h_used: f64, err: f64) {
        let fac = if err.is_finite() { (0.9 * err.powf(-1.0 / self.order)).clamp(0.1, 0.9) } else { 0.25 };
        self.h = h_used * fac;
    }
}

// stage rows; the last row is also the fifth-order weights
const DP_A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Dormand-Prince 5(4) with first-same-as-last reuse.
pub(crate) struct DormandPrince {
    pub ctl: Controller,
    rtol: f64,
    atol: f64,
}

impl DormandPrince {
    pub fn new(h0: f64, rtol: f64, atol: f64) -> Self {
        DormandPrince { ctl: Controller::new(h0, 5.0), rtol, atol }
    }

    /// One attempt from `y` (with `k1 = f(y)`) using at most `h_cap`.
    pub fn attempt<F>(&mut self, f: &mut F, y: &[f64], k1: &Eval, h_cap: f64) -> Attempt
    where
        F: FnMut(&[f64]) -> Result<Eval>,
    {
        let clamped = self.ctl.h >= h_cap;
        let h = self.ctl.h.min(h_cap);
        let mut ks: Vec<Vec<f64>> = Vec::with_capacity(7);
        ks.push(k1.dy.clone());
        let mut last: Option<Eval> = None;
        for row in DP_A.iter() {
            let terms: Vec<(f64, &[f64])> = row.iter().zip(&ks).map(|(&a, k)| (a, k.as_slice())).collect();
            let yi = axpy_sum(y, h, &terms);
            match f(&yi) {
                Ok(e) if e.dy.iter().all(|v| v.is_finite()) => {
                    ks.push(e.dy.clone());
                    last = Some(e);
                }
                _ => {
                    self.ctl.reject(h, f64::INFINITY);
                    return Attempt::Rejected;
                }
            }
        }
        let terms: Vec<(f64, &[f64])> = DP_A[5].iter().zip(&ks).map(|(&a, k)| (a, k.as_slice())).collect();
        let y_new = axpy_sum(y, h, &terms);
        let mut err = vec![0.0; y.len()];
        for (c, k) in DP_E.iter().zip(&ks) {
            for (e, v) in err.iter_mut().zip(k) {
                *e += h * c * v;
            }
        }
        let en = error_norm(&err, y, &y_new, self.rtol, self.atol);
        if en <= 1.0 {
            self.ctl.accept(h, en, clamped);
            Attempt::Accepted { y: y_new, at_new: last.expect("seven stages"), h }
        } else {
            self.ctl.reject(h, en);
            Attempt::Rejected
        }
    }
}

/// ARS(2,2,2) implicit-explicit scheme for `y' = N(y) + a y''`, the stiff
/// constant-coefficient part solved through `resolve(v, alpha) = (I - alpha D2)^-1 v`.
/// Step size chosen by step doubling.
pub(crate) struct ImexArs222 {
    pub ctl: Controller,
    rtol: f64,
    atol: f64,
    a: f64,
}

const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

impl ImexArs222 {
    pub fn new(h0: f64, rtol: f64, atol: f64, a: f64) -> Self {
        ImexArs222 { ctl: Controller::new(h0, 3.0), rtol, atol, a }
    }

    /// `f` is the full right-hand side; the explicit part is `f - a y''`.
    fn single<F, D, R>(&self, f: &mut F, d2: &D, resolve: &R, y: &[f64], e1: &[f64], h: f64) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64]) -> Result<Eval>,
        D: Fn(&[f64]) -> Result<Vec<f64>>,
        R: Fn(&[f64], f64) -> Result<Vec<f64>>,
    {
        let delta = 1.0 - 1.0 / (2.0 * GAMMA);
        let alpha = h * GAMMA * self.a;
        let rhs2 = axpy_sum(y, h * GAMMA, &[(1.0, e1)]);
        let y2 = resolve(&rhs2, alpha)?;
        // a y2'' recovered from the implicit solve without differentiating
        let ay2: Vec<f64> = y2.iter().zip(&rhs2).map(|(a, b)| (a - b) / (h * GAMMA)).collect();
        let full2 = f(&y2)?.dy;
        let d2y2 = d2(&y2)?;
        let e2: Vec<f64> = full2.iter().zip(&d2y2).map(|(g, s)| g - self.a * s).collect();
        let rhs3 = axpy_sum(y, h, &[(delta, e1), (1.0 - delta, &e2), (1.0 - GAMMA, &ay2)]);
        resolve(&rhs3, alpha)
    }

    pub fn attempt<F, D, R>(&mut self, f: &mut F, d2: &D, resolve: &R, y: &[f64], k1: &Eval, h_cap: f64) -> Attempt
    where
        F: FnMut(&[f64]) -> Result<Eval>,
        D: Fn(&[f64]) -> Result<Vec<f64>>,
        R: Fn(&[f64], f64) -> Result<Vec<f64>>,
    {
        let clamped = self.ctl.h >= h_cap;
        let h = self.ctl.h.min(h_cap);
        let explicit = |full: &[f64], y: &[f64]| -> Result<Vec<f64>> {
            let s = d2(y)?;
            Ok(full.iter().zip(&s).map(|(g, v)| g - self.a * v).collect())
        };
        let run = |f: &mut F| -> Result<(Vec<f64>, Vec<f64>, Eval)> {
            let e1 = explicit(&k1.dy, y)?;
            let big = self.single(f, d2, resolve, y, &e1, h)?;
            let half = self.single(f, d2, resolve, y, &e1, 0.5 * h)?;
            let mid = f(&half)?;
            let e_mid = explicit(&mid.dy, &half)?;
            let two = self.single(f, d2, resolve, &half, &e_mid, 0.5 * h)?;
            let at_new = f(&two)?;
            Ok((big, two, at_new))
        };
        match run(f) {
            Ok((big, two, at_new)) if two.iter().all(|v| v.is_finite()) => {
                let err: Vec<f64> = two.iter().zip(&big).map(|(a, b)| (a - b) / 3.0).collect();
                let en = error_norm(&err, y, &two, self.rtol, self.atol);
                if en <= 1.0 {
                    self.ctl.accept(h, en, clamped);
                    Attempt::Accepted { y: two, at_new, h }
                } else {
                    self.ctl.reject(h, en);
                    Attempt::Rejected
                }
            }
            _ => {
                self.ctl.reject(h, f64::INFINITY);
                Attempt::Rejected
            }
        }
    }
}

/// Starting step from the sizes of `y` and `f(y)`.
pub(crate) fn initial_step(y: &[f64], dy: &[f64], rtol: f64, atol: f64, order: f64, span: f64) -> f64 {
    let scale = atol + rtol * y.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let d1 = dy.iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale;
    let h = if d1 <= 1e-5 { 1e-6 * span.max(1e-3) } else { 0.01 * d1.powf(-1.0 / order) };
    h.min(span).max(1e-12 * span)
}
