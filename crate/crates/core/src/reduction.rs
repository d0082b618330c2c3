//! Eliminating the conserved weighted volume.
//!
//! A profile `u` is split into its mean-free part `ubar = P0[u]` and the
//! parameter `eta` defined by `mean Q(u) = Qt(eta)`, where `Qt(eta)` is the
//! density of the cylinder of radius `(n - 1) / eta`. The inverse map
//! `psi(ubar, eta) = ubar + c` only shifts by a constant.

use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::geometry::{
    check_positive, geometry_from_derivatives, point_geometry, q_density_raw, q_point, weight_at_cylinder, weight_eval,
    CurvaturePair, RadialProfile, WeightModel,
};
use crate::grid::GridCalculus;
use crate::roots::safeguarded_newton;
use crate::special::binomial_f;
use crate::speed::Speed;

/// `Qt(eta) = sum_a c_a (n-1)^(n-a) C(n,a) eta^-(n-a)`.
pub fn qtilde(eta: f64, w: &WeightModel, n: usize) -> f64 {
    let n1 = (n - 1) as f64;
    (0..=w.degree().min(n))
        .map(|a| {
            let ca = w.c(a);
            if ca == 0.0 {
                0.0
            } else {
                let e = (n - a) as i32;
                ca * n1.powi(e) * binomial_f(n as i64, a as i64) * eta.powi(-e)
            }
        })
        .sum()
}

/// `Qt'(eta) = -n (n-1)^n / eta^(n+1) * Xi(cylinder)`.
pub fn qtilde_derivative(eta: f64, w: &WeightModel, n: usize) -> f64 {
    let n1 = (n - 1) as f64;
    -(n as f64) * n1.powi(n as i32) / eta.powi(n as i32 + 1) * weight_at_cylinder(w, eta, n)
}

/// Inverse of `Qt` on `[lo, hi]`.
pub fn qtilde_inv(x: f64, w: &WeightModel, n: usize, bracket: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(CurvError::domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    // monotone iff the cylinder weight keeps one sign
    const SAMPLES: usize = 64;
    let ratio = (hi / lo).ln();
    let sign = weight_at_cylinder(w, lo, n).signum();
    for i in 0..=SAMPLES {
        let eta = lo * (ratio * i as f64 / SAMPLES as f64).exp();
        let xi = weight_at_cylinder(w, eta, n);
        if xi == 0.0 || xi.signum() != sign {
            return Err(CurvError::domain(format!(
                "Qt is not strictly monotone on [{lo}, {hi}] (weight vanishes near eta = {eta})"
            )));
        }
    }
    let (qlo, qhi) = (qtilde(lo, w, n), qtilde(hi, w, n));
    let (ymin, ymax) = if qlo < qhi { (qlo, qhi) } else { (qhi, qlo) };
    if !(x >= ymin && x <= ymax) {
        return Err(CurvError::Range(format!("value {x} outside the image [{ymin}, {ymax}] of [{lo}, {hi}]")));
    }
    let tol = 1e-13 * x.abs().max(1.0);
    // Newton in log(eta) keeps the iteration well scaled over wide brackets
    let t = safeguarded_newton(
        |t| {
            let eta = t.exp();
            Ok((qtilde(eta, w, n) - x, qtilde_derivative(eta, w, n) * eta))
        },
        lo.ln(),
        hi.ln(),
        (lo * hi).sqrt().ln(),
        tol,
        200,
    )?;
    Ok(t.exp())
}

/// `qtilde_inv` with the bracket `[guess/10, 10 guess]`, widened tenfold at each
/// end up to four times when `x` falls outside its image.
pub fn qtilde_inv_near(x: f64, w: &WeightModel, n: usize, guess: f64) -> Result<f64> {
    let (mut lo, mut hi) = (guess / 10.0, guess * 10.0);
    let mut last = None;
    for _ in 0..5 {
        match qtilde_inv(x, w, n, (lo, hi)) {
            Err(CurvError::Range(m)) => {
                last = Some(CurvError::Range(m));
                lo /= 10.0;
                hi *= 10.0;
            }
            other => return other,
        }
    }
    Err(last.unwrap())
}

/// Mean-free perturbation and volume parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub ubar: Vec<f64>,
    pub eta: f64,
}

impl ReducedState {
    pub fn new(ubar: Vec<f64>, eta: f64, g: &GridCalculus) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(CurvError::domain(format!("eta must be positive, got {eta}")));
        }
        let scale = ubar.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mean = g.circle_mean(&ubar);
        if mean.abs() > 1e-12 * scale {
            return Err(CurvError::domain(format!("perturbation has nonzero mean {mean:e}")));
        }
        Ok(ReducedState { ubar, eta })
    }

    pub fn cylinder(eta: f64, g: &GridCalculus) -> Self {
        ReducedState { ubar: vec![0.0; g.len()], eta }
    }
}

/// Residual, derivative and smallest pointwise weight of the scalar equation
/// `mean Q(ubar + c) = Qt(eta)`.
struct ShiftProblem<'a> {
    ubar: &'a [f64],
    du: Vec<f64>,
    d2u: Vec<f64>,
    n: usize,
    w: &'a WeightModel,
    g: &'a GridCalculus,
    target: f64,
}

impl ShiftProblem<'_> {
    fn eval(&self, c: f64) -> Result<(f64, f64, f64)> {
        let u: Vec<f64> = self.ubar.iter().map(|x| x + c).collect();
        check_positive(&u)?;
        let geo = geometry_from_derivatives(&u, &self.du, &self.d2u);
        let n = self.n;
        let mut q = Vec::with_capacity(u.len());
        let mut dq = Vec::with_capacity(u.len());
        let mut min_xi = f64::INFINITY;
        for j in 0..u.len() {
            q.push(q_point(self.w, geo.curv[j], u[j], geo.area[j], n));
            let xi = weight_eval(self.w, geo.curv[j], n);
            min_xi = min_xi.min(xi);
            dq.push(n as f64 * xi * u[j].powi(n as i32 - 1));
        }
        Ok((self.g.circle_mean(&q) - self.target, self.g.circle_mean(&dq), min_xi))
    }
}

/// Shift of `ubar` that restores the weighted volume `Qt(eta)`.
pub fn psi_shift(s: &ReducedState, n: usize, w: &WeightModel, g: &GridCalculus) -> Result<f64> {
    let (du, d2u) = g.derivatives(&s.ubar)?;
    let prob = ShiftProblem { ubar: &s.ubar, du, d2u, n, w, g, target: qtilde(s.eta, w, n) };
    let floor = -s.ubar.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-13 * prob.target.abs().max(1.0);
    let mut c = (n - 1) as f64 / s.eta;
    let mut residual = f64::INFINITY;
    const MAX_ITER: usize = 100;
    for _ in 0..MAX_ITER {
        let (phi, dphi, _) = prob.eval(c)?;
        residual = phi.abs();
        if residual <= tol {
            let (_, _, min_xi) = prob.eval(c)?;
            if !(min_xi > 0.0) {
                return Err(CurvError::domain(format!(
                    "weight is not positive on the reconstructed profile (min {min_xi:e})"
                )));
            }
            return Ok(c);
        }
        if !(dphi > 0.0 && dphi.is_finite()) {
            return Err(CurvError::Convergence {
                iterations: 0,
                residual,
                context: format!("weighted volume is not increasing in the shift at c = {c} (slope {dphi:e})"),
            });
        }
        let mut step = -phi / dphi;
        while c + step <= floor {
            step *= 0.5;
        }
        c += step;
    }
    Err(CurvError::Convergence { iterations: MAX_ITER, residual, context: "shift solve".into() })
}

/// `psi(ubar, eta)`: the profile with mean-free part `ubar` and weighted volume
/// parameter `eta`.
pub fn psi_solve(s: &ReducedState, n: usize, w: &WeightModel, g: &GridCalculus) -> Result<RadialProfile> {
    let c = psi_shift(s, n, w, g)?;
    RadialProfile::new(n, g.d(), s.ubar.iter().map(|x| x + c).collect())
}

/// `psi^-1(u) = (P0[u], Qt^-1(mean Q(u)))`.
pub fn psi_inverse(p: &RadialProfile, w: &WeightModel, g: &GridCalculus) -> Result<ReducedState> {
    p.check_grid(g)?;
    let n = p.n_dim();
    let q = q_density_raw(p.values(), n, w, g)?;
    let guess = (n - 1) as f64 / g.circle_mean(p.values());
    let eta = qtilde_inv_near(g.circle_mean(&q), w, n, guess)?;
    Ok(ReducedState { ubar: g.project_meanzero(p.values()), eta })
}

/// Velocity field and diagnostics of the full flow at one state.
#[derive(Debug, Clone)]
pub(crate) struct RhsEval {
    pub rhs: Vec<f64>,
    pub min_xi: f64,
}

pub(crate) fn full_rhs_raw(
    u: &[f64],
    n: usize,
    speed: &dyn Speed,
    w: &WeightModel,
    g: &GridCalculus,
) -> Result<RhsEval> {
    let geo = point_geometry(u, g)?;
    let len = u.len();
    let mut f = Vec::with_capacity(len);
    let mut xi_mu = Vec::with_capacity(len);
    let mut min_xi = f64::INFINITY;
    for j in 0..len {
        let c: CurvaturePair = geo.curv[j];
        let fj = speed.eval(c);
        if !fj.is_finite() {
            return Err(CurvError::domain(format!("speed is not finite at node {j}")));
        }
        let xi = weight_eval(w, c, n);
        min_xi = min_xi.min(xi);
        f.push(fj);
        xi_mu.push(xi * u[j].powi(n as i32 - 1) * geo.area[j]);
    }
    let denom = g.circle_integral(&xi_mu);
    let fx: Vec<f64> = f.iter().zip(&xi_mu).map(|(a, b)| a * b).collect();
    let numer = g.circle_integral(&fx);
    let scale = g.circle_integral(&xi_mu.iter().map(|x| x.abs()).collect::<Vec<_>>());
    if !(denom.abs() > 1e-14 * scale) || !(denom.abs() > 0.0) {
        return Err(CurvError::Degenerate(format!("weighted area vanishes ({denom:e})")));
    }
    let avg = numer / denom;
    let rhs = (0..len).map(|j| geo.area[j] * (avg - f[j])).collect();
    Ok(RhsEval { rhs, min_xi })
}

/// `G(u) = sqrt(1 + u'^2) (integral(F Xi dmu) / integral(Xi dmu) - F)`.
pub fn full_rhs(p: &RadialProfile, speed: &dyn Speed, w: &WeightModel, g: &GridCalculus) -> Result<Vec<f64>> {
    p.check_grid(g)?;
    Ok(full_rhs_raw(p.values(), p.n_dim(), speed, w, g)?.rhs)
}

/// `Gbar(ubar, eta) = P0[G(psi(ubar, eta))]`.
pub fn reduced_rhs(s: &ReducedState, speed: &dyn Speed, w: &WeightModel, g: &GridCalculus) -> Result<Vec<f64>> {
    let n = speed.n_dim();
    let p = psi_solve(s, n, w, g)?;
    Ok(g.project_meanzero(&full_rhs(&p, speed, w, g)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speed::{MeanCurvature, MeanCurvaturePow};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn qtilde_examples() {
        assert!((qtilde(1.0, &WeightModel::constant(), 2) - 1.0).abs() < 1e-15);
        assert!((qtilde(2.0, &WeightModel::mixed_volume(1), 3) - 3.0).abs() < 1e-15);
        let w = WeightModel::new(vec![0.5, 0.2, 0.3, 0.7]).unwrap();
        assert!((qtilde(1e9, &w, 3) - 0.7).abs() < 1e-8);
    }

    #[test]
    fn qtilde_inverse_examples() {
        let eta = qtilde_inv(1.0, &WeightModel::constant(), 2, (0.1, 10.0)).unwrap();
        assert!((eta - 1.0).abs() < 1e-12);
        for n in 2..8usize {
            for b in 0..n {
                let w = WeightModel::mixed_volume(b);
                let x = 0.83;
                let exact = (n - 1) as f64 * (binomial_f(n as i64, b as i64) / x).powf(1.0 / (n - b) as f64);
                let eta = qtilde_inv_near(x, &w, n, exact * 3.0).unwrap();
                assert!((eta - exact).abs() < 1e-12 * exact, "n={n} b={b}");
            }
        }
        let w = WeightModel::new(vec![1.0, 0.4, 0.1]).unwrap();
        for eta in [0.5, 1.0, 3.0] {
            let back = qtilde_inv_near(qtilde(eta, &w, 4), &w, 4, 1.0).unwrap();
            assert!((back - eta).abs() < 1e-12 * eta);
        }
    }

    #[test]
    fn qtilde_inverse_errors() {
        let w = WeightModel::constant();
        assert!(matches!(qtilde_inv(1e6, &w, 2, (0.5, 2.0)), Err(CurvError::Range(_))));
        // Xi = 1 - E_1 changes sign on the cylinder family
        let w = WeightModel::new(vec![1.0, -1.0]).unwrap();
        assert!(matches!(qtilde_inv(1.0, &w, 2, (0.1, 10.0)), Err(CurvError::Domain(_))));
    }

    #[test]
    fn qtilde_derivative_matches_difference() {
        let w = WeightModel::new(vec![0.5, 0.2, 0.3]).unwrap();
        let (eta, h) = (1.3, 1e-4);
        let fd = (8.0 * (qtilde(eta + h, &w, 4) - qtilde(eta - h, &w, 4))
            - (qtilde(eta + 2.0 * h, &w, 4) - qtilde(eta - 2.0 * h, &w, 4)))
            / (12.0 * h);
        let exact = qtilde_derivative(eta, &w, 4);
        assert!((fd - exact).abs() < 1e-9 * exact.abs(), "{fd} vs {exact}");
    }

    #[test]
    fn psi_of_zero_is_cylinder() {
        let g = GridCalculus::spectral(32, 1.0).unwrap();
        for n in 2..6 {
            let p = psi_solve(&ReducedState::cylinder(1.7, &g), n, &WeightModel::mixed_volume(1), &g).unwrap();
            for v in p.values() {
                assert!((v - (n - 1) as f64 / 1.7).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn psi_closed_form_for_constant_weight() {
        let g = GridCalculus::spectral(64, 1.0).unwrap();
        let ubar: Vec<f64> = g.cosine_mode(1).iter().map(|c| 0.01 * c).collect();
        let s = ReducedState::new(ubar, 1.0, &g).unwrap();
        let c = psi_shift(&s, 2, &WeightModel::constant(), &g).unwrap();
        assert!((c - (1.0f64 - 0.00005).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn full_rhs_vanishes_on_cylinders() {
        let g = GridCalculus::spectral(32, 1.0).unwrap();
        let speed = MeanCurvaturePow::new(3, 2.0).unwrap();
        let p = RadialProfile::cylinder(3, 1.0, 32, 0.9).unwrap();
        let w = WeightModel::new(vec![1.0, 0.5]).unwrap();
        assert!(full_rhs(&p, &speed, &w, &g).unwrap().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn full_rhs_leading_order_mode() {
        let (d, eps) = (1.0, 1e-5);
        let g = GridCalculus::spectral(64, d).unwrap();
        let speed = MeanCurvature { n: 2 };
        let r = 0.7;
        let p = RadialProfile::cylinder_with_modes(2, &g, r, &[(1, eps)]).unwrap();
        let rhs = full_rhs(&p, &speed, &WeightModel::constant(), &g).unwrap();
        let eta = 1.0 / r;
        let lambda = eta * eta - (PI / d).powi(2);
        let c1 = g.cosine_mode(1);
        for j in 0..64 {
            assert!((rhs[j] - lambda * r * eps * c1[j]).abs() < 1e-8, "j={j}");
        }
    }

    #[test]
    fn full_rhs_is_weight_orthogonal() {
        let g = GridCalculus::spectral(64, 1.3).unwrap();
        let n = 3;
        let speed = MeanCurvaturePow::new(n, 2.0).unwrap();
        let w = WeightModel::new(vec![1.0, 0.6, 0.2]).unwrap();
        let p = RadialProfile::cylinder_with_modes(n, &g, 1.1, &[(1, 0.08), (3, -0.03)]).unwrap();
        let rhs = full_rhs(&p, &speed, &w, &g).unwrap();
        let curv = crate::geometry::principal_curvatures(&p, &g).unwrap();
        let weighted: Vec<f64> =
            (0..64).map(|j| rhs[j] * weight_eval(&w, curv[j], n) * p.values()[j].powi(n as i32 - 1)).collect();
        let scale: f64 = weighted.iter().map(|x| x.abs()).sum::<f64>() / 64.0;
        assert!(g.circle_mean(&weighted).abs() < 1e-10 * scale.max(1.0));
    }

    #[test]
    fn reduced_rhs_is_mean_free_and_zero_at_cylinder() {
        let g = GridCalculus::spectral(32, 1.0).unwrap();
        let speed = MeanCurvature { n: 3 };
        let w = WeightModel::mixed_volume(1);
        let z = reduced_rhs(&ReducedState::cylinder(2.0, &g), &speed, &w, &g).unwrap();
        assert!(z.iter().all(|x| x.abs() < 1e-12));
        let ubar: Vec<f64> = g.cosine_mode(2).iter().map(|c| 0.03 * c).collect();
        let r = reduced_rhs(&ReducedState::new(ubar, 2.0, &g).unwrap(), &speed, &w, &g).unwrap();
        assert!(g.circle_mean(&r).abs() < 1e-14);
    }

    fn random_ubar(g: &GridCalculus, amps: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; g.len()];
        for (k, a) in amps.iter().enumerate() {
            // decay keeps the curvature perturbation bounded across modes
            let scale = 1.0 / ((k + 1) * (k + 1)) as f64;
            for (x, c) in v.iter_mut().zip(g.cosine_mode(k + 1)) {
                *x += a * scale * c;
            }
        }
        v
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn psi_round_trip(
            n in 2usize..6,
            b in 0usize..3,
            eta in 0.8f64..3.0,
            amps in proptest::collection::vec(-0.003f64..0.003, 4),
        ) {
            prop_assume!(b < n);
            let g = GridCalculus::spectral(48, 1.0).unwrap();
            let w = WeightModel::mixed_volume(b);
            let ubar = random_ubar(&g, &amps);
            let s = ReducedState::new(ubar.clone(), eta, &g).unwrap();
            let p = psi_solve(&s, n, &w, &g).unwrap();
            // psi only shifts by a constant
            let shift: Vec<f64> = p.values().iter().zip(&ubar).map(|(a, b)| a - b).collect();
            for x in &shift {
                prop_assert!((x - shift[0]).abs() < 1e-12);
            }
            let back = psi_inverse(&p, &w, &g).unwrap();
            prop_assert!((back.eta - eta).abs() < 1e-10 * eta);
            for (a, b) in back.ubar.iter().zip(&ubar) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn psi_derivative_formula(
            n in 2usize..5,
            amps in proptest::collection::vec(-0.03f64..0.03, 3),
            vamps in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let g = GridCalculus::spectral(48, 1.0).unwrap();
            let w = WeightModel::new(vec![1.0, 0.5]).unwrap();
            let eta = 1.5;
            let ubar = random_ubar(&g, &amps);
            let v = random_ubar(&g, &vamps);
            let shift_at = |t: f64| {
                let u: Vec<f64> = ubar.iter().zip(&v).map(|(a, b)| a + t * b).collect();
                psi_shift(&ReducedState { ubar: u, eta }, n, &w, &g).unwrap()
            };
            let h = 1e-4;
            let fd = (8.0 * (shift_at(h) - shift_at(-h)) - (shift_at(2.0 * h) - shift_at(-2.0 * h))) / (12.0 * h);
            let p = psi_solve(&ReducedState { ubar: ubar.clone(), eta }, n, &w, &g).unwrap();
            let curv = crate::geometry::principal_curvatures(&p, &g).unwrap();
            let xw: Vec<f64> = (0..g.len()).map(|j| weight_eval(&w, curv[j], n) * p.values()[j].powi(n as i32 - 1)).collect();
            let num: Vec<f64> = xw.iter().zip(&v).map(|(a, b)| a * b).collect();
            let predicted = -g.circle_integral(&num) / g.circle_integral(&xw);
            prop_assert!((fd - predicted).abs() < 1e-7 * predicted.abs().max(1.0));
        }
    }
}
