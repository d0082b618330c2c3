//! Constant mean curvature unduloids between the slab boundaries and the
//! bifurcation curve they trace out.
//!
//! The profile over half a period runs from the neck `rho0` at `z = 0` to the
//! bulge `rho0 (1 + s) / (1 - s)` at `z = d`. In the scaled variable
//! `x = rho / rho0` it satisfies `dz/dx = rho0 g_s(x)`, where `g_s` has an
//! inverse square root singularity at both ends of `(1, X)`, `X = (1+s)/(1-s)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::geometry::RadialProfile;
use crate::grid::GridCalculus;
use crate::quadrature::{QuadResult, TanhSinh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnduloidParams {
    pub n_dim: usize,
    pub d: f64,
    pub s: f64,
}

impl UnduloidParams {
    pub fn new(n_dim: usize, d: f64, s: f64) -> Result<Self> {
        if n_dim < 2 {
            return Err(CurvError::domain(format!("dimension must be at least 2, got {n_dim}")));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(CurvError::domain(format!("slab width must be positive, got {d}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(CurvError::domain(format!("asymmetry s must lie in (0, 1), got {s}")));
        }
        Ok(UnduloidParams { n_dim, d, s })
    }

    /// Right end `(1 + s) / (1 - s)` of the scaled radius range.
    pub fn x_max(&self) -> f64 {
        (1.0 + self.s) / (1.0 - self.s)
    }
}

/// One point on the bifurcating family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationSample {
    pub s: f64,
    pub eta: f64,
    pub eta_bar: f64,
    pub rho0: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub quadrature_error_estimate: f64,
}

/// Values of the kernel at one abscissa.
#[derive(Debug, Clone, Copy)]
struct KernelPoint {
    /// `g_s(x)`
    g: f64,
    /// the ratio `r` with `g = 1 / sqrt(r^2 - 1)`
    r: f64,
    /// `dr/dx`
    rp: f64,
}

/// Precomputed constants of `g_s` for fixed `(n, s)`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    n: usize,
    s: f64,
    x_max: f64,
    /// `(1+s)^n - (1-s)^n`
    p: f64,
    /// `(1+s)^(n-1) - (1-s)^(n-1)`
    k: f64,
    /// `2 s (1+s)^(n-1)`
    c0: f64,
}

impl Kernel {
    fn new(n: usize, s: f64) -> Self {
        let (a, b) = (1.0 + s, 1.0 - s);
        Kernel {
            n,
            s,
            x_max: a / b,
            p: a.powi(n as i32) - b.powi(n as i32),
            k: a.powi(n as i32 - 1) - b.powi(n as i32 - 1),
            c0: 2.0 * s * a.powi(n as i32 - 1),
        }
    }

    fn denom(&self, x: f64) -> f64 {
        self.c0 + self.k * (1.0 - self.s) * x.powi(self.n as i32)
    }

    /// `(r - 1) / (dl dr)`, the cofactor of the two simple zeros of `r - 1`.
    fn rm1_factor(&self, x: f64) -> f64 {
        // after deflating the roots 1 and X the cofactor is
        // 2 s (1-s)^(n-1) sum_j x^j sum_{i<=j} X^(n-2-i), free of cancellation
        let n = self.n;
        let xm = self.x_max;
        let mut xpow_desc = xm.powi(n as i32 - 2);
        let mut partial = 0.0;
        let mut xj = 1.0;
        let mut t = 0.0;
        for _ in 0..=n - 2 {
            partial += xpow_desc;
            xpow_desc /= xm;
            t += xj * partial;
            xj *= x;
        }
        2.0 * self.s * (1.0 - self.s).powi(n as i32 - 1) * t / self.denom(x)
    }

    fn point(&self, x: f64, dl: f64, dr: f64) -> KernelPoint {
        let n = self.n as i32;
        let f = self.rm1_factor(x);
        let rm1 = f * dl * dr;
        let r = 1.0 + rm1;
        let g = 1.0 / (rm1 * (r + 1.0)).sqrt();
        let dd = self.denom(x);
        let rp = self.p
            * x.powi(n - 2)
            * (2.0 * (n - 1) as f64 * self.s * (1.0 + self.s).powi(n - 1) - self.k * (1.0 - self.s) * x.powi(n))
            / (dd * dd);
        KernelPoint { g, r, rp }
    }

    /// `g_s dx / dtheta` under `x = 1 + (X - 1)(1 - cos theta) / 2`; smooth and even
    /// in `theta`.
    fn theta_point(&self, theta: f64) -> (f64, KernelPoint) {
        let w = self.x_max - 1.0;
        let (sh, ch) = (0.5 * theta).sin_cos();
        let dl = w * sh * sh;
        let dr = w * ch * ch;
        let x = if dl <= dr { 1.0 + dl } else { self.x_max - dr };
        let f = self.rm1_factor(x);
        let rm1 = f * dl * dr;
        let r = 1.0 + rm1;
        let weight = 1.0 / (f * (r + 1.0)).sqrt();
        let mut kp = self.point(x, dl.max(f64::MIN_POSITIVE), dr.max(f64::MIN_POSITIVE));
        kp.g = weight;
        (x, kp)
    }

    /// Integrand of the curvature integral for the `b`-th weighted volume,
    /// divided by `g`.
    fn volume_factor(&self, b: usize, x: f64, kp: &KernelPoint) -> f64 {
        let n = self.n as i32;
        let b = b as i32;
        if b == 0 {
            return x.powi(n);
        }
        x.powi(n - b) * kp.r.powi(2 - b)
            - (b - 1) as f64 * x.powi(n + 1 - b) * kp.rp * kp.r.powi(1 - b) / (n + 1 - b) as f64
    }
}

/// `g_s(x) = 1 / sqrt(r(x)^2 - 1)` on the open interval `(1, X)`.
pub fn g_s(x: f64, p: &UnduloidParams) -> Result<f64> {
    let k = Kernel::new(p.n_dim, p.s);
    if !(x > 1.0 && x < k.x_max) {
        return Err(CurvError::domain(format!("x = {x} outside (1, {})", k.x_max)));
    }
    Ok(k.point(x, x - 1.0, k.x_max - x).g)
}

fn quad() -> TanhSinh {
    TanhSinh::with_tol(1e-12)
}

fn integral_g(k: &Kernel) -> Result<QuadResult> {
    quad().integrate(|x, dl, dr| k.point(x, dl, dr).g, 1.0, k.x_max)
}

/// Neck radius `rho0 = d / integral(g_s)`.
pub fn rho0(p: &UnduloidParams) -> Result<f64> {
    let k = Kernel::new(p.n_dim, p.s);
    Ok(p.d / integral_g(&k)?.value)
}

/// Mean curvature `(n - 1) kappa1 + kappan` of the unduloid.
pub fn mean_curvature(p: &UnduloidParams) -> Result<f64> {
    let k = Kernel::new(p.n_dim, p.s);
    Ok(k.k / k.p * p.n_dim as f64 * (1.0 - p.s) / rho0(p)?)
}

/// `eta` of the critical cylinder of the constant mean curvature family,
/// `pi sqrt(n - 1) / d`.
pub fn critical_eta(n: usize, d: f64) -> f64 {
    PI * ((n - 1) as f64).sqrt() / d
}

fn eta_from_integrals(n: usize, b: usize, d: f64, i0: f64, j: f64) -> f64 {
    let e = (n - b) as f64;
    (n - 1) as f64 / d * (i0.powi((n + 1 - b) as i32) / j).powf(1.0 / e)
}

/// Point of the bifurcation curve for the `b`-th mixed-volume weight.
pub fn eta_curve(p: &UnduloidParams, b: usize) -> Result<BifurcationSample> {
    let n = p.n_dim;
    if b >= n {
        return Err(CurvError::domain(format!("b = {b} must be below n = {n}")));
    }
    let k = Kernel::new(n, p.s);
    let i0 = integral_g(&k)?;
    let jq = quad().integrate(
        |x, dl, dr| {
            let kp = k.point(x, dl, dr);
            kp.g * k.volume_factor(b, x, &kp)
        },
        1.0,
        k.x_max,
    )?;
    let eta = eta_from_integrals(n, b, p.d, i0.value, jq.value);
    let rel = ((n + 1 - b) as f64 * i0.error / i0.value.abs() + jq.error / jq.value.abs()) / (n - b) as f64;
    let rho0 = p.d / i0.value;
    Ok(BifurcationSample {
        s: p.s,
        eta,
        eta_bar: eta / critical_eta(n, p.d),
        rho0,
        h: k.k / k.p * n as f64 * (1.0 - p.s) / rho0,
        quadrature_error_estimate: rel * eta,
    })
}

/// Cosine series of the smooth integrand `g_s dx/dtheta`, used for profile
/// reconstruction and as an independent check of the singular quadrature.
#[derive(Debug, Clone)]
pub struct ThetaSeries {
    kernel_n: usize,
    s: f64,
    x_max: f64,
    coeffs: Vec<f64>,
    samples: Vec<(f64, KernelPoint)>,
}

impl ThetaSeries {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        let k = Kernel::new(n, s);
        let mut m = 64usize;
        loop {
            let g = GridCalculus::spectral(m + 1, PI)?;
            let samples: Vec<(f64, KernelPoint)> = g.nodes().iter().map(|&t| k.theta_point(t)).collect();
            let vals: Vec<f64> = samples.iter().map(|(_, kp)| kp.g).collect();
            let coeffs = g.cosine_coefficients(&vals)?;
            let tail = coeffs[3 * m / 4..].iter().fold(0.0f64, |a, c| a.max(c.abs()));
            // coefficients below the rounding floor of the samples carry no information
            let floor = 64.0 * f64::EPSILON * vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if tail <= (1e-15 * coeffs[0].abs()).max(floor) {
                return Ok(ThetaSeries { kernel_n: n, s, x_max: k.x_max, coeffs, samples });
            }
            if m >= 1 << 17 {
                return Err(CurvError::Accuracy { estimate: tail / coeffs[0].abs(), value: coeffs[0] });
            }
            m *= 2;
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `integral(g_s)` over `(1, X)`.
    pub fn integral_g(&self) -> f64 {
        PI * self.coeffs[0]
    }

    /// Trapezoid value of the `b`-th curvature integral; spectrally accurate
    /// since the substituted integrand is smooth and periodic.
    pub fn volume_integral(&self, b: usize) -> f64 {
        let k = Kernel::new(self.kernel_n, self.s);
        let m = self.samples.len() - 1;
        let h = PI / m as f64;
        let mut acc = 0.0;
        for (j, (x, kp)) in self.samples.iter().enumerate() {
            let v = kp.g * k.volume_factor(b, *x, kp);
            acc += if j == 0 || j == m { 0.5 * v } else { v };
        }
        acc * h
    }

    /// `Z(theta) = integral_0^theta g_s dx/dtheta`.
    fn z_of(&self, theta: f64) -> (f64, f64) {
        let mut z = self.coeffs[0] * theta;
        let mut dz = self.coeffs[0];
        for (k, a) in self.coeffs.iter().enumerate().skip(1) {
            let (sk, ck) = (k as f64 * theta).sin_cos();
            z += a * sk / k as f64;
            dz += a * ck;
        }
        (z, dz)
    }

    /// Scaled radius `x` at the fraction `tau` of the total height.
    fn x_at_fraction(&self, tau: f64) -> Result<f64> {
        let target = tau * PI * self.coeffs[0];
        let (mut lo, mut hi) = (0.0, PI);
        let mut t = tau * PI;
        for _ in 0..200 {
            let (z, dz) = self.z_of(t);
            let f = z - target;
            if f.abs() <= 1e-15 * PI * self.coeffs[0] {
                break;
            }
            if f < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let nt = t - f / dz;
            t = if nt > lo && nt < hi { nt } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-16 {
                break;
            }
        }
        let w = self.x_max - 1.0;
        let (sh, ch) = (0.5 * t).sin_cos();
        let dl = w * sh * sh;
        let dr = w * ch * ch;
        Ok(if dl <= dr { 1.0 + dl } else { self.x_max - dr })
    }
}

/// Unduloid profile sampled on `nodes` uniform points of `[0, d]`.
pub fn profile(p: &UnduloidParams, nodes: usize) -> Result<RadialProfile> {
    let series = ThetaSeries::new(p.n_dim, p.s)?;
    let r0 = rho0(p)?;
    let g = GridCalculus::spectral(nodes, p.d)?;
    let mut values = Vec::with_capacity(nodes);
    for j in 0..nodes {
        let x = if j == 0 {
            1.0
        } else if j + 1 == nodes {
            series.x_max
        } else {
            series.x_at_fraction(g.node(j) / p.d)?
        };
        values.push(r0 * x);
    }
    RadialProfile::new(p.n_dim, p.d, values)
}

/// Same curve point as [`eta_curve`], computed from the cosine series instead
/// of the singular quadrature.
pub fn eta_curve_series(p: &UnduloidParams, b: usize) -> Result<BifurcationSample> {
    let n = p.n_dim;
    if b >= n {
        return Err(CurvError::domain(format!("b = {b} must be below n = {n}")));
    }
    let series = ThetaSeries::new(n, p.s)?;
    let k = Kernel::new(n, p.s);
    let i0 = series.integral_g();
    let eta = eta_from_integrals(n, b, p.d, i0, series.volume_integral(b));
    let rho0 = p.d / i0;
    Ok(BifurcationSample {
        s: p.s,
        eta,
        eta_bar: eta / critical_eta(n, p.d),
        rho0,
        h: k.k / k.p * n as f64 * (1.0 - p.s) / rho0,
        quadrature_error_estimate: 0.0,
    })
}

/// `samples` points on `[0.01, 0.97]`, geometrically spaced so that small `s`
/// is resolved.
pub fn default_s_grid(samples: usize) -> Vec<f64> {
    let (lo, hi) = (0.01f64, 0.97f64);
    if samples <= 1 {
        return vec![lo];
    }
    (0..samples)
        .map(|i| if i + 1 == samples { hi } else { lo * (hi / lo).powf(i as f64 / (samples - 1) as f64) })
        .collect()
}

/// Uniform grid of `samples` points on `[lo, hi]`.
pub fn uniform_s_grid(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect()
}

/// Bifurcation samples over a grid of `s` values, in parallel. Failed points
/// are reported per entry.
pub fn eta_curve_sweep(n: usize, b: usize, d: f64, s_grid: &[f64]) -> Vec<Result<BifurcationSample>> {
    s_grid.par_iter().map(|&s| UnduloidParams::new(n, d, s).and_then(|p| eta_curve(&p, b))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurningKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    pub s: f64,
    pub kind: TurningKind,
}

/// Interior extrema of `eta_bar(s)` located by sign changes of the centered
/// difference quotient.
pub fn turning_points(n: usize, b: usize, s_grid: &[f64]) -> Result<Vec<TurningPoint>> {
    if s_grid.len() < 100 {
        return Err(CurvError::InsufficientData(format!(
            "turning point scan needs at least 100 samples, got {}",
            s_grid.len()
        )));
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) || !(s_grid[0] > 0.0 && *s_grid.last().unwrap() < 1.0) {
        return Err(CurvError::domain("s grid must be increasing inside (0, 1)"));
    }
    let vals: Vec<f64> =
        eta_curve_sweep(n, b, 1.0, s_grid).into_iter().map(|r| r.map(|x| x.eta_bar)).collect::<Result<_>>()?;
    let slopes: Vec<(f64, f64)> = (1..s_grid.len() - 1)
        .map(|i| (s_grid[i], (vals[i + 1] - vals[i - 1]) / (s_grid[i + 1] - s_grid[i - 1])))
        .collect();
    let mut out = Vec::new();
    for w in slopes.windows(2) {
        let ((s0, d0), (s1, d1)) = (w[0], w[1]);
        if d0 > 0.0 && d1 <= 0.0 {
            out.push(TurningPoint { s: 0.5 * (s0 + s1), kind: TurningKind::Max });
        } else if d0 < 0.0 && d1 >= 0.0 {
            out.push(TurningPoint { s: 0.5 * (s0 + s1), kind: TurningKind::Min });
        }
    }
    Ok(out)
}
