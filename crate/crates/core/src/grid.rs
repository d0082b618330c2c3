//! Differentiation and quadrature on the even extension of a uniform grid over `[0, d]`.
//!
//! A profile sampled at `z_j = j d / (N - 1)` is extended evenly about both ends to
//! a `2(N - 1)`-periodic sequence on a circle of circumference `2d`. Spectral
//! derivatives are taken in that periodic setting, so the Neumann condition at the
//! ends holds by construction.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};

/// Smallest supported number of grid nodes.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffMode {
    SpectralCosine,
    FiniteDifference4,
}

/// Grid operators for `N` nodes on `[0, d]`.
#[derive(Clone)]
pub struct GridCalculus {
    nodes: usize,
    d: f64,
    mode: DiffMode,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for GridCalculus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridCalculus")
            .field("nodes", &self.nodes)
            .field("d", &self.d)
            .field("mode", &self.mode)
            .finish()
    }
}

impl GridCalculus {
    pub fn new(nodes: usize, d: f64, mode: DiffMode) -> Result<Self> {
        if nodes < MIN_NODES {
            return Err(CurvError::domain(format!("grid needs at least {MIN_NODES} nodes, got {nodes}")));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(CurvError::domain(format!("slab width must be positive, got {d}")));
        }
        let m = 2 * (nodes - 1);
        let mut planner = FftPlanner::new();
        Ok(GridCalculus { nodes, d, mode, forward: planner.plan_fft_forward(m), inverse: planner.plan_fft_inverse(m) })
    }

    pub fn spectral(nodes: usize, d: f64) -> Result<Self> {
        Self::new(nodes, d, DiffMode::SpectralCosine)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn d(&self) -> f64 {
        self.d
    }

    #[inline]
    pub fn mode(&self) -> DiffMode {
        self.mode
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.d / (self.nodes - 1) as f64
    }

    pub fn with_mode(&self, mode: DiffMode) -> Self {
        GridCalculus { mode, ..self.clone() }
    }

    pub fn node(&self, j: usize) -> f64 {
        if j + 1 == self.nodes {
            self.d
        } else {
            j as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nodes).map(|j| self.node(j)).collect()
    }

    /// Samples of `cos(m pi z / d)`.
    pub fn cosine_mode(&self, m: usize) -> Vec<f64> {
        // use the exact phase j*m/(N-1) to keep the samples exactly even
        let denom = (self.nodes - 1) as f64;
        (0..self.nodes).map(|j| (PI * ((j * m) % (2 * (self.nodes - 1))) as f64 / denom).cos()).collect()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.nodes {
            return Err(CurvError::domain(format!("vector has {} entries, grid has {}", v.len(), self.nodes)));
        }
        Ok(())
    }

    /// First and second derivatives. Odd derivatives vanish exactly at both ends.
    pub fn derivatives(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(u)?;
        Ok(match self.mode {
            DiffMode::SpectralCosine => self.spectral_derivatives(u),
            DiffMode::FiniteDifference4 => self.fd4_derivatives(u),
        })
    }

    pub fn first_derivative(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.derivatives(u)?.0)
    }

    pub fn second_derivative(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.derivatives(u)?.1)
    }

    fn spectral_derivatives(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes;
        let m = 2 * (n - 1);
        // shifting by a constant keeps rounding proportional to the variation
        let base = u[0];
        let mut buf: Vec<Complex64> = Vec::with_capacity(m);
        buf.extend(u.iter().map(|&x| Complex64::new(x - base, 0.0)));
        buf.extend(u[1..n - 1].iter().rev().map(|&x| Complex64::new(x - base, 0.0)));
        self.forward.process(&mut buf);

        let scale = PI / self.d;
        let mut d1 = vec![Complex64::new(0.0, 0.0); m];
        let mut d2 = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..m {
            let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            let w = scale * kk;
            if k != m / 2 {
                d1[k] = buf[k] * Complex64::new(0.0, w);
            }
            d2[k] = buf[k] * (-w * w);
        }
        self.inverse.process(&mut d1);
        self.inverse.process(&mut d2);
        let inv = 1.0 / m as f64;
        let mut du: Vec<f64> = d1[..n].iter().map(|c| c.re * inv).collect();
        let d2u: Vec<f64> = d2[..n].iter().map(|c| c.re * inv).collect();
        du[0] = 0.0;
        du[n - 1] = 0.0;
        (du, d2u)
    }

    fn fd4_derivatives(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes as isize;
        let h = self.spacing();
        // even reflection about both ends
        let at = |i: isize| -> f64 {
            let j = if i < 0 {
                -i
            } else if i > n - 1 {
                2 * (n - 1) - i
            } else {
                i
            };
            u[j as usize]
        };
        let mut du = vec![0.0; self.nodes];
        let mut d2u = vec![0.0; self.nodes];
        for i in 0..n {
            let (um2, um1, u0, up1, up2) = (at(i - 2), at(i - 1), at(i), at(i + 1), at(i + 2));
            du[i as usize] = (-up2 + 8.0 * up1 - 8.0 * um1 + um2) / (12.0 * h);
            d2u[i as usize] = (-up2 + 16.0 * up1 - 30.0 * u0 + 16.0 * um1 - um2) / (12.0 * h * h);
        }
        du[0] = 0.0;
        du[self.nodes - 1] = 0.0;
        (du, d2u)
    }

    /// Integral over the full circle of circumference `2d`: twice the trapezoid
    /// rule on `[0, d]`.
    pub fn circle_integral(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.nodes);
        let n = v.len();
        let interior: f64 = v[1..n - 1].iter().sum();
        2.0 * self.spacing() * (0.5 * (v[0] + v[n - 1]) + interior)
    }

    /// Integral over `[0, d]`.
    pub fn half_integral(&self, v: &[f64]) -> f64 {
        0.5 * self.circle_integral(v)
    }

    pub fn circle_mean(&self, v: &[f64]) -> f64 {
        self.circle_integral(v) / (2.0 * self.d)
    }

    /// Removes the circle average.
    pub fn project_meanzero(&self, v: &[f64]) -> Vec<f64> {
        let m = self.circle_mean(v);
        v.iter().map(|x| x - m).collect()
    }

    /// Solves `(I - alpha d^2/dz^2) x = v` with the spectral second derivative,
    /// whatever the differentiation mode.
    pub fn resolvent(&self, v: &[f64], alpha: f64) -> Result<Vec<f64>> {
        self.check_len(v)?;
        if !(alpha >= 0.0) {
            return Err(CurvError::domain(format!("resolvent needs alpha >= 0, got {alpha}")));
        }
        let n = self.nodes;
        let m = 2 * (n - 1);
        let mut buf: Vec<Complex64> = Vec::with_capacity(m);
        buf.extend(v.iter().map(|&x| Complex64::new(x, 0.0)));
        buf.extend(v[1..n - 1].iter().rev().map(|&x| Complex64::new(x, 0.0)));
        self.forward.process(&mut buf);
        let scale = PI / self.d;
        for (k, c) in buf.iter_mut().enumerate() {
            let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            let w = scale * kk;
            *c /= 1.0 + alpha * w * w;
        }
        self.inverse.process(&mut buf);
        let inv = 1.0 / m as f64;
        Ok(buf[..n].iter().map(|c| c.re * inv).collect())
    }

    /// Cosine coefficients `a_k` with `v(z) = sum_k a_k cos(k pi z / d)`, `k = 0..N-1`.
    pub fn cosine_coefficients(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let n = self.nodes;
        let m = 2 * (n - 1);
        let mut buf: Vec<Complex64> = Vec::with_capacity(m);
        buf.extend(v.iter().map(|&x| Complex64::new(x, 0.0)));
        buf.extend(v[1..n - 1].iter().rev().map(|&x| Complex64::new(x, 0.0)));
        self.forward.process(&mut buf);
        let mut a: Vec<f64> = buf[..n].iter().map(|c| 2.0 * c.re / m as f64).collect();
        a[0] *= 0.5;
        a[n - 1] *= 0.5;
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn spectral_derivatives_reproduce_cosines() {
        let d = 1.7;
        let g = GridCalculus::spectral(64, d).unwrap();
        for m in 0..=16usize {
            let u = g.cosine_mode(m);
            let (du, d2u) = g.derivatives(&u).unwrap();
            let w = m as f64 * PI / d;
            for (j, z) in g.nodes().into_iter().enumerate() {
                let exact1 = -w * (w * z).sin();
                let exact2 = -w * w * (w * z).cos();
                assert!((du[j] - exact1).abs() <= 1e-10 * w.max(1.0) * w.max(1.0), "m={m} j={j}");
                assert!(rel(d2u[j], exact2) <= 1e-10 * w.max(1.0) * w.max(1.0), "m={m} j={j}");
            }
        }
    }

    #[test]
    fn resolvent_inverts_helmholtz() {
        let g = GridCalculus::spectral(64, 1.3).unwrap();
        let v: Vec<f64> = g.cosine_mode(3).iter().zip(g.cosine_mode(0)).map(|(a, b)| a + 2.0 * b).collect();
        let x = g.resolvent(&v, 0.01).unwrap();
        let d2 = g.second_derivative(&x).unwrap();
        for j in 0..64 {
            assert!((x[j] - 0.01 * d2[j] - v[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_annihilate_constants() {
        for mode in [DiffMode::SpectralCosine, DiffMode::FiniteDifference4] {
            let g = GridCalculus::new(33, 2.0, mode).unwrap();
            let (du, d2u) = g.derivatives(&vec![3.25; 33]).unwrap();
            assert!(du.iter().chain(d2u.iter()).all(|x| x.abs() < 1e-11));
        }
    }

    #[test]
    fn finite_difference_agrees_with_spectral() {
        let g = GridCalculus::spectral(257, 1.0).unwrap();
        let f = g.with_mode(DiffMode::FiniteDifference4);
        let u: Vec<f64> = g.nodes().iter().map(|z| 1.0 + 0.1 * (PI * z).cos() + 0.02 * (2.0 * PI * z).cos()).collect();
        let (a1, a2) = g.derivatives(&u).unwrap();
        let (b1, b2) = f.derivatives(&u).unwrap();
        for j in 0..u.len() {
            assert!((a1[j] - b1[j]).abs() < 1e-6);
            assert!((a2[j] - b2[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn projection_examples() {
        let g = GridCalculus::spectral(40, 1.0).unwrap();
        let p = g.project_meanzero(&vec![2.0; 40]);
        assert!(p.iter().all(|x| x.abs() < 1e-15));
        let c1 = g.cosine_mode(1);
        let p = g.project_meanzero(&c1);
        assert!(p.iter().zip(&c1).all(|(a, b)| (a - b).abs() < 1e-15));
        let c2 = g.cosine_mode(2);
        let v: Vec<f64> = c2.iter().map(|x| 1.0 + x).collect();
        let p = g.project_meanzero(&v);
        assert!(p.iter().zip(&c2).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn circle_integral_of_constant() {
        let g = GridCalculus::spectral(17, 0.75).unwrap();
        assert!((g.circle_integral(&vec![2.0; 17]) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn cosine_coefficients_recover_modes() {
        let g = GridCalculus::spectral(32, 1.0).unwrap();
        let v: Vec<f64> = (0..32).map(|j| 0.5 + 2.0 * g.cosine_mode(3)[j] - g.cosine_mode(7)[j]).collect();
        let a = g.cosine_coefficients(&v).unwrap();
        assert!((a[0] - 0.5).abs() < 1e-14);
        assert!((a[3] - 2.0).abs() < 1e-14);
        assert!((a[7] + 1.0).abs() < 1e-14);
        assert!(a[5].abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_linear(
            xs in proptest::collection::vec(-10.0f64..10.0, 24),
            ys in proptest::collection::vec(-10.0f64..10.0, 24),
            alpha in -3.0f64..3.0,
        ) {
            let g = GridCalculus::spectral(24, 1.3).unwrap();
            let p = g.project_meanzero(&xs);
            let pp = g.project_meanzero(&p);
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() < 1e-13);
            }
            prop_assert!(g.circle_mean(&p).abs() < 1e-13);
            let comb: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| x + alpha * y).collect();
            let lhs = g.project_meanzero(&comb);
            let py = g.project_meanzero(&ys);
            for j in 0..24 {
                prop_assert!((lhs[j] - (p[j] + alpha * py[j])).abs() < 1e-12);
            }
        }
    }
}
