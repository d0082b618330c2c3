//! Curvatures, symmetric functions, weights and volumes of axially symmetric graphs.

use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::grid::{GridCalculus, MIN_NODES};
use crate::special::{binomial_f, unit_ball_volume};

/// Radial profile sampled on the uniform grid of `[0, d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    n_dim: usize,
    d: f64,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(n_dim: usize, d: f64, values: Vec<f64>) -> Result<Self> {
        if n_dim < 2 {
            return Err(CurvError::domain(format!("dimension must be at least 2, got {n_dim}")));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(CurvError::domain(format!("slab width must be positive, got {d}")));
        }
        if values.len() < MIN_NODES {
            return Err(CurvError::domain(format!("profile needs at least {MIN_NODES} samples, got {}", values.len())));
        }
        check_positive(&values)?;
        Ok(RadialProfile { n_dim, d, values })
    }

    /// Constant profile of radius `r`.
    pub fn cylinder(n_dim: usize, d: f64, nodes: usize, r: f64) -> Result<Self> {
        Self::new(n_dim, d, vec![r; nodes])
    }

    /// `r (1 + sum_k eps_k cos(m_k pi z / d))`.
    pub fn cylinder_with_modes(n_dim: usize, grid: &GridCalculus, r: f64, modes: &[(usize, f64)]) -> Result<Self> {
        let mut v = vec![1.0; grid.len()];
        for &(m, eps) in modes {
            for (x, c) in v.iter_mut().zip(grid.cosine_mode(m)) {
                *x += eps * c;
            }
        }
        Self::new(n_dim, grid.d(), v.into_iter().map(|x| r * x).collect())
    }

    #[inline]
    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    #[inline]
    pub fn d(&self) -> f64 {
        self.d
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn check_grid(&self, g: &GridCalculus) -> Result<()> {
        if g.len() != self.values.len() || (g.d() - self.d).abs() > 1e-14 * self.d {
            return Err(CurvError::domain(format!(
                "profile ({} nodes, d={}) does not match grid ({} nodes, d={})",
                self.values.len(),
                self.d,
                g.len(),
                g.d()
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_positive(values: &[f64]) -> Result<()> {
    if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(CurvError::domain(format!("profile value at node {j} is not positive ({v})")));
    }
    Ok(())
}

/// The two distinct principal curvatures of an axisymmetric graph: `kappa1`
/// with multiplicity `n - 1` and the profile curvature `kappan`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvaturePair {
    pub kappa1: f64,
    pub kappan: f64,
}

impl CurvaturePair {
    pub fn new(kappa1: f64, kappan: f64) -> Self {
        CurvaturePair { kappa1, kappan }
    }

    /// Curvatures of the cylinder of radius `r`.
    pub fn cylinder(r: f64) -> Self {
        CurvaturePair { kappa1: 1.0 / r, kappan: 0.0 }
    }

    /// Mean curvature `(n - 1) kappa1 + kappan`.
    pub fn mean(&self, n: usize) -> f64 {
        (n - 1) as f64 * self.kappa1 + self.kappan
    }
}

/// Pointwise geometry of a sampled profile.
#[derive(Debug, Clone)]
pub(crate) struct PointGeometry {
    pub curv: Vec<CurvaturePair>,
    /// `sqrt(1 + u'^2)`
    pub area: Vec<f64>,
}

pub(crate) fn point_geometry(u: &[f64], g: &GridCalculus) -> Result<PointGeometry> {
    check_positive(u)?;
    let (du, d2u) = g.derivatives(u)?;
    Ok(geometry_from_derivatives(u, &du, &d2u))
}

pub(crate) fn geometry_from_derivatives(u: &[f64], du: &[f64], d2u: &[f64]) -> PointGeometry {
    let mut curv = Vec::with_capacity(u.len());
    let mut area = Vec::with_capacity(u.len());
    for j in 0..u.len() {
        let l = (1.0 + du[j] * du[j]).sqrt();
        curv.push(CurvaturePair { kappa1: 1.0 / (u[j] * l), kappan: -d2u[j] / (l * l * l) });
        area.push(l);
    }
    PointGeometry { curv, area }
}

/// Principal curvatures at every node.
pub fn principal_curvatures(p: &RadialProfile, g: &GridCalculus) -> Result<Vec<CurvaturePair>> {
    p.check_grid(g)?;
    Ok(point_geometry(&p.values, g)?.curv)
}

/// `E_a` at an axisymmetric curvature vector in dimension `n`.
pub fn elementary_symmetric(a: usize, c: CurvaturePair, n: usize) -> Result<f64> {
    if a > n {
        return Err(CurvError::domain(format!("E_{a} undefined in dimension {n}")));
    }
    Ok(esym(a, c, n))
}

#[inline]
pub(crate) fn esym(a: usize, c: CurvaturePair, n: usize) -> f64 {
    let n1 = n as i64 - 1;
    let a = a as i64;
    let mut v = binomial_f(n1, a) * powi(c.kappa1, a);
    if a >= 1 {
        v += binomial_f(n1, a - 1) * powi(c.kappa1, a - 1) * c.kappan;
    }
    v
}

#[inline]
fn powi(x: f64, k: i64) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k as i32)
    }
}

/// Coefficients `(c_0, ..., c_m)` of the weight `Xi = sum_a c_a E_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightModel {
    coeffs: Vec<f64>,
}

impl WeightModel {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().all(|&c| c == 0.0) {
            return Err(CurvError::domain("weight coefficients are all zero"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CurvError::domain("weight coefficients must be finite"));
        }
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(WeightModel { coeffs })
    }

    /// The constant weight, whose conserved quantity is the enclosed volume.
    pub fn constant() -> Self {
        WeightModel { coeffs: vec![1.0] }
    }

    /// `c_a = delta_{ab}`, conserving the mixed volume `V_{n+1-b}`.
    pub fn mixed_volume(b: usize) -> Self {
        let mut coeffs = vec![0.0; b + 1];
        coeffs[b] = 1.0;
        WeightModel { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient `c_a`, zero beyond the stored length.
    #[inline]
    pub fn c(&self, a: usize) -> f64 {
        self.coeffs.get(a).copied().unwrap_or(0.0)
    }

    /// Highest index with a nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `Some(b)` when the weight is a single `delta_{ab}` with unit coefficient.
    pub fn mixed_volume_index(&self) -> Option<usize> {
        let nz: Vec<usize> = (0..self.coeffs.len()).filter(|&a| self.coeffs[a] != 0.0).collect();
        match nz.as_slice() {
            [b] if self.coeffs[*b] == 1.0 => Some(*b),
            _ => None,
        }
    }

    /// Checks the weight is usable in dimension `n`: degree at most `n` and not a
    /// pure multiple of `E_n`.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        if self.degree() > n {
            return Err(CurvError::domain(format!("weight has degree {} above the dimension {n}", self.degree())));
        }
        if self.degree() == n && self.coeffs[..n].iter().all(|&c| c == 0.0) {
            return Err(CurvError::domain("a weight built from E_n alone does not define a weighted volume"));
        }
        Ok(())
    }
}

/// `Xi(c) = sum_a c_a E_a(c)`.
pub fn weight_eval(w: &WeightModel, c: CurvaturePair, n: usize) -> f64 {
    w.coeffs.iter().enumerate().map(|(a, &ca)| if ca == 0.0 { 0.0 } else { ca * esym(a, c, n) }).sum()
}

/// `Xi` at the cylinder of radius `(n - 1) / eta`.
pub fn weight_at_cylinder(w: &WeightModel, eta: f64, n: usize) -> f64 {
    weight_eval(w, CurvaturePair::new(eta / (n - 1) as f64, 0.0), n)
}

#[inline]
pub(crate) fn q_point(w: &WeightModel, c: CurvaturePair, u: f64, l: f64, n: usize) -> f64 {
    let mut q = w.c(0) * u.powi(n as i32);
    let mut tail = 0.0;
    for a in 1..w.coeffs.len() {
        let ca = w.coeffs[a];
        if ca != 0.0 {
            tail += n as f64 * ca / a as f64 * esym(a - 1, c, n);
        }
    }
    q += tail * u.powi(n as i32 - 1) * l;
    q
}

/// Pointwise density `Q(u)` of the weighted volume.
pub fn q_density(p: &RadialProfile, w: &WeightModel, g: &GridCalculus) -> Result<Vec<f64>> {
    p.check_grid(g)?;
    q_density_raw(&p.values, p.n_dim, w, g)
}

pub(crate) fn q_density_raw(u: &[f64], n: usize, w: &WeightModel, g: &GridCalculus) -> Result<Vec<f64>> {
    let geo = point_geometry(u, g)?;
    Ok((0..u.len()).map(|j| q_point(w, geo.curv[j], u[j], geo.area[j], n)).collect())
}

/// `WVol = integral of Q` over the circle of circumference `2d`.
pub fn weighted_volume(p: &RadialProfile, w: &WeightModel, g: &GridCalculus) -> Result<f64> {
    Ok(g.circle_integral(&q_density(p, w, g)?))
}

pub(crate) fn weighted_volume_raw(u: &[f64], n: usize, w: &WeightModel, g: &GridCalculus) -> Result<f64> {
    Ok(g.circle_integral(&q_density_raw(u, n, w, g)?))
}

/// Mixed volume `V_b`, `1 <= b <= n + 1`, of the solid of revolution over `[0, d]`.
/// `V_{n+1}` is the enclosed volume. For `b <= n` it is the area integral of
/// `E_{n-b}`, scaled by `n omega_n / ((n + 1) C(n, n - b))` so that the
/// weighted volume expands as `(2 / omega_n)(c_0 V_{n+1} + sum_a c_a C(n+1, a) V_{n+1-a})`.
pub fn mixed_volume(b: usize, p: &RadialProfile, g: &GridCalculus) -> Result<f64> {
    p.check_grid(g)?;
    let n = p.n_dim;
    if b == 0 || b > n + 1 {
        return Err(CurvError::domain(format!("mixed volume V_{b} undefined for n={n}")));
    }
    let omega = unit_ball_volume(n);
    let u = &p.values;
    if b == n + 1 {
        let f: Vec<f64> = u.iter().map(|x| x.powi(n as i32)).collect();
        return Ok(omega * g.half_integral(&f));
    }
    let geo = point_geometry(u, g)?;
    let f: Vec<f64> =
        (0..u.len()).map(|j| esym(n - b, geo.curv[j], n) * u[j].powi(n as i32 - 1) * geo.area[j]).collect();
    let scale = n as f64 * omega / ((n + 1) as f64 * binomial_f(n as i64, (n - b) as i64));
    Ok(scale * g.half_integral(&f))
}
