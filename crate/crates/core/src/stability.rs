//! Linear spectra at cylinders, the critical radius, and the curvature of the
//! bifurcation curve and of the critical eigenvalue along it.
//!
//! Only signs and normalization-free brackets are reported for the second
//! derivatives: the true values carry positive factors that depend on how the
//! critical mode is normalized.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::geometry::WeightModel;
use crate::grid::GridCalculus;
use crate::reduction::{reduced_rhs, ReducedState};
use crate::roots::brent;
use crate::special::{binomial_f, Sign};
use crate::speed::{CylinderSpeed, EtaProfile, Speed};

/// `lambda_m(eta) = -Fn(eta) (m pi / d)^2 + eta^2 F1(eta) / (n - 1)`.
pub fn linear_eigenvalue(m: usize, eta: f64, speed: &dyn CylinderSpeed, n: usize, d: f64) -> Result<f64> {
    let p = speed.eta_profile(eta)?;
    Ok(eigenvalue_from(m, eta, &p, n, d))
}

fn eigenvalue_from(m: usize, eta: f64, p: &EtaProfile, n: usize, d: f64) -> f64 {
    let k = m as f64 * PI / d;
    -p.fn_ * k * k + eta * eta * p.f1 / (n - 1) as f64
}

/// Size of the two competing terms of `lambda_m`, the natural scale for
/// relative comparisons near a zero eigenvalue.
pub fn eigenvalue_scale(m: usize, eta: f64, speed: &dyn CylinderSpeed, n: usize, d: f64) -> Result<f64> {
    let p = speed.eta_profile(eta)?;
    let k = m as f64 * PI / d;
    Ok((p.fn_ * k * k).abs() + (eta * eta * p.f1 / (n - 1) as f64).abs())
}

/// Radius of the cylinder whose first eigenvalue vanishes, searched as a root of
/// `lambda_1` in `eta` on `bracket`. `None` when `lambda_1` keeps its sign.
pub fn r_crit_find(speed: &dyn CylinderSpeed, n: usize, d: f64, bracket: (f64, f64)) -> Result<Option<f64>> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(CurvError::domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    const SCAN: usize = 4000;
    let f = |eta: f64| linear_eigenvalue(1, eta, speed, n, d);
    let ratio = (hi / lo).ln();
    let etas: Vec<f64> =
        (0..=SCAN).map(|i| if i == SCAN { hi } else { lo * (ratio * i as f64 / SCAN as f64).exp() }).collect();
    let vals: Vec<f64> = etas.iter().map(|&e| f(e)).collect::<Result<_>>()?;
    let mut roots = Vec::new();
    let mut i = 0;
    while i < SCAN {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 {
            roots.push(etas[i]);
        } else if b != 0.0 && a.signum() != b.signum() {
            let root = brent(|e| f(e).unwrap_or(f64::NAN), etas[i], etas[i + 1], 1e-15 * etas[i], 200)?;
            roots.push(root);
        } else if b == 0.0 && i + 1 == SCAN {
            roots.push(etas[i + 1]);
        }
        i += 1;
    }
    match roots.as_slice() {
        [] => Ok(None),
        [eta] => Ok(Some((n - 1) as f64 / eta)),
        _ => Err(CurvError::Ambiguous { roots }),
    }
}

/// `2 F1 + eta (F1' - F1 Fn' / Fn)`; nonzero means the bifurcation at `eta` is
/// transversal.
pub fn bif_condition(eta: f64, speed: &dyn CylinderSpeed) -> Result<f64> {
    let p = speed.eta_profile(eta)?;
    bif_from(eta, &p)
}

fn bif_from(eta: f64, p: &EtaProfile) -> Result<f64> {
    if p.fn_ == 0.0 {
        return Err(CurvError::Degenerate("Fn vanishes at the bifurcation point".into()));
    }
    Ok(2.0 * p.f1 + eta * (p.f1p - p.f1 * p.fnp / p.fn_))
}

/// Speed data at the bifurcation point together with the composite
/// coefficients entering the second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifShapeCoefficients {
    pub n_dim: usize,
    pub eta0: f64,
    #[serde(flatten)]
    pub profile: EtaProfile,
    pub script_f: f64,
    pub script_f1: f64,
    pub script_f2: f64,
    pub script_f3: f64,
    pub script_f4: f64,
    pub bif: f64,
}

impl BifShapeCoefficients {
    pub fn new(n: usize, eta0: f64, p: EtaProfile) -> Result<Self> {
        if p.f1 == 0.0 || p.fn_ == 0.0 {
            return Err(CurvError::Degenerate(format!("F1 = {} and Fn = {} must both be nonzero", p.f1, p.fn_)));
        }
        let (f1, f2, f3, f4) = partial_terms(n, eta0, &p);
        Ok(BifShapeCoefficients {
            n_dim: n,
            eta0,
            profile: p,
            script_f: script_f(n, eta0, &p),
            script_f1: f1,
            script_f2: f2,
            script_f3: f3,
            script_f4: f4,
            bif: bif_from(eta0, &p)?,
        })
    }

    pub fn from_speed(speed: &dyn CylinderSpeed, eta0: f64) -> Result<Self> {
        Self::new(speed.n_dim(), eta0, speed.eta_profile(eta0)?)
    }

    /// The composite coefficient rebuilt from its four partial terms.
    pub fn script_f_composite(&self) -> f64 {
        let p = &self.profile;
        let n1 = (self.n_dim - 1) as f64;
        let r = p.f1 * p.f1 / p.fn_;
        3.0 / n1 * (self.script_f3 + self.script_f4 + 2.0 * self.bif)
            + (self.script_f1 + r) * (self.script_f2 - 2.0 * r) / p.f1
    }
}

/// Expanded form of the composite coefficient.
fn script_f(n: usize, eta: f64, p: &EtaProfile) -> f64 {
    let n1 = (n - 1) as f64;
    let nf = n as f64;
    let (f1, fnv) = (p.f1, p.fn_);
    let e2 = eta * eta / (n1 * n1);
    let mut s = 0.0;
    s += 3.0 * e2 * p.f1pp;
    s -= 9.0 * e2 * f1 * p.fnpp / fnv;
    s += 9.0 * e2 * f1 * f1 * p.fnnp / (fnv * fnv);
    s -= 3.0 * e2 * f1.powi(3) * p.fnnn / fnv.powi(3);
    s += e2 * p.f1p * p.f1p / f1;
    s -= 7.0 * e2 * p.f1p * p.fnp / fnv;
    s += 5.0 * e2 * f1 * p.f1p * p.fnn / (fnv * fnv);
    s += 10.0 * e2 * f1 * p.fnp * p.fnp / (fnv * fnv);
    s -= 13.0 * e2 * f1 * f1 * p.fnp * p.fnn / fnv.powi(3);
    s += 4.0 * e2 * f1.powi(3) * p.fnn * p.fnn / fnv.powi(4);
    s += 2.0 * (3.0 * nf + 8.0) * eta * p.f1p / (n1 * n1);
    s -= 4.0 * eta * f1 * p.f1p / (n1 * fnv);
    s -= 2.0 * (3.0 * nf + 13.0) * eta * f1 * p.fnp / (n1 * n1 * fnv);
    s += 2.0 * eta * f1 * f1 * p.fnp / (n1 * fnv * fnv);
    s += 10.0 * eta * f1 * f1 * p.fnn / (n1 * n1 * fnv * fnv);
    s += 2.0 * eta * f1.powi(3) * p.fnn / (n1 * fnv.powi(3));
    s += 2.0 * (6.0 * nf + 5.0) * f1 / (n1 * n1);
    s += 4.0 * f1 * f1 / (n1 * fnv);
    s -= 2.0 * f1.powi(3) / (fnv * fnv);
    s
}

fn partial_terms(n: usize, eta: f64, p: &EtaProfile) -> (f64, f64, f64, f64) {
    let n1 = (n - 1) as f64;
    let (f1, fnv) = (p.f1, p.fn_);
    let lead = eta * p.f1p / n1 + 2.0 * f1 / n1;
    let a = eta * f1 * p.fnp / (n1 * fnv);
    let b = eta * f1 * f1 * p.fnn / (n1 * fnv * fnv);
    let sf1 = lead - 2.0 * a + b;
    let sf2 = lead - 5.0 * a + 4.0 * b;
    let e2 = eta * eta / n1;
    let sf3 = e2 * p.f1pp - 3.0 * e2 * f1 * p.fnpp / fnv + 3.0 * e2 * f1 * f1 * p.fnnp / (fnv * fnv)
        - e2 * f1.powi(3) * p.fnnn / fnv.powi(3)
        + 6.0 * eta * p.f1p / n1
        - 6.0 * eta * f1 * p.fnp / (n1 * fnv)
        + 6.0 * f1 / n1;
    let sf4 = -eta * f1 * p.f1p / fnv + eta * f1 * f1 * p.fnp / (fnv * fnv) + 2.0 * f1 * f1 / fnv;
    (sf1, sf2, sf3, sf4)
}

/// Weight sums of the correction term: the numerator built from the `kappa1`
/// and `kappan` derivatives of the weight, and the weight itself, at the cylinder.
fn weight_sums(w: &WeightModel, n: usize, eta0: f64, f1_over_fn: f64) -> (f64, f64) {
    let n1 = (n - 1) as f64;
    let (ni, t) = (n as i64, eta0 / n1);
    let mut num = 0.0;
    let mut den = 0.0;
    for a in 0..=w.degree().min(n) {
        let ca = w.c(a);
        if ca == 0.0 {
            continue;
        }
        let ai = a as i64;
        let ta = t.powi(a as i32);
        if a >= 1 {
            num += ca * ta * (binomial_f(ni - 2, ai - 1) - f1_over_fn * binomial_f(ni - 1, ai - 1));
        }
        den += ca * ta * binomial_f(ni - 1, ai);
    }
    (num, den)
}

fn correction(c: &BifShapeCoefficients, w: &WeightModel) -> Result<f64> {
    let n = c.n_dim;
    let (num, den) = weight_sums(w, n, c.eta0, c.profile.f1 / c.profile.fn_);
    if den == 0.0 {
        return Err(CurvError::Degenerate("weight vanishes at the critical cylinder".into()));
    }
    Ok(6.0 * num / ((n - 1) as f64 * den))
}

/// Normalization-free bracket of the second derivative of the bifurcation curve
/// and the resulting sign of `eta''(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSign {
    pub bracket: f64,
    pub sign: Sign,
}

const SIGN_TOL: f64 = 1e-12;

fn bracket_scale(c: &BifShapeCoefficients) -> f64 {
    let p = &c.profile;
    let n1 = (c.n_dim - 1) as f64;
    // both brackets are sums of terms of the size of F1 / (n - 1)^2 and larger
    (p.f1.abs() / (n1 * n1)).max(f64::MIN_POSITIVE)
}

/// `eta''(0)` equals `-(positive) * bracket`.
pub fn eta_dd_analytic(c: &BifShapeCoefficients, w: &WeightModel) -> Result<CurvatureSign> {
    if c.bif == 0.0 {
        return Err(CurvError::Degenerate("bifurcation condition vanishes".into()));
    }
    let bracket = c.script_f / c.bif - correction(c, w)?;
    let scale = bracket_scale(c) / c.bif.abs();
    Ok(CurvatureSign { bracket, sign: Sign::of(bracket, SIGN_TOL * scale).flip() })
}

/// `lambda''(0)` equals `(positive) * bracket`; stable when negative.
pub fn lambda_dd_sign(c: &BifShapeCoefficients, w: &WeightModel) -> Result<CurvatureSign> {
    let bracket = c.script_f - correction(c, w)? * c.bif;
    Ok(CurvatureSign { bracket, sign: Sign::of(bracket, SIGN_TOL * bracket_scale(c)) })
}

/// Stability condition for speeds homogeneous of degree `k`, in terms of the
/// speed data at `eta = 1`; negative means stable.
#[allow(clippy::too_many_arguments)]
pub fn homog_condition(
    n: usize,
    k: f64,
    f1: f64,
    fnv: f64,
    fnn: f64,
    fnnn: f64,
    w: &WeightModel,
    d: f64,
) -> Result<f64> {
    if f1 == 0.0 || fnv == 0.0 {
        return Err(CurvError::Degenerate("F1 and Fn must be nonzero".into()));
    }
    let n1 = (n - 1) as f64;
    let nf = n as f64;
    let q = fnv / (n1 * f1);
    if q <= 0.0 {
        return Err(CurvError::domain("Fn / F1 must be positive for a critical cylinder"));
    }
    // (pi/d)^a (Fn / ((n-1) F1))^(a/2) is (eta0 / (n-1))^a
    let t = PI / d * q.sqrt();
    let ni = n as i64;
    let (mut num, mut den) = (0.0, 0.0);
    for a in 0..=w.degree().min(n) {
        let ca = w.c(a);
        if ca == 0.0 {
            continue;
        }
        let ai = a as i64;
        let ta = t.powi(a as i32);
        if a >= 1 {
            num += ca * ta * (binomial_f(ni - 2, ai - 1) - f1 / fnv * binomial_f(ni - 1, ai - 1));
        }
        den += ca * ta * binomial_f(ni - 1, ai);
    }
    if den == 0.0 {
        return Err(CurvError::Degenerate("weight vanishes at the critical cylinder".into()));
    }
    let r = f1 / fnv;
    Ok(-6.0 * n1 * num / den - k * k + 6.0 * nf + 6.0 - 1.5 * r * r * fnnn / fnv
        + 2.0 * r * r * fnn * fnn / (fnv * fnv)
        + 0.5 * k * r * fnn / fnv
        + n1 * r * r * fnn / fnv
        - n1 * n1 * r * r
        - n1 * (k - 3.0) * r)
}

/// Cubic whose sign decides stability for mixed-volume weights,
/// `n^3 - (b+10) n^2 + 2(5b-1) n - 2b(3b-4)`.
pub fn mixed_volume_cubic(n: i64, b: i64) -> i64 {
    n * n * n - (b + 10) * n * n + 2 * (5 * b - 1) * n - 2 * b * (3 * b - 4)
}

/// Exact stability condition for the mean curvature speed with weight `E_b`;
/// negative means stable.
pub fn mixed_volume_condition(n: usize, b: usize) -> Result<Ratio<i64>> {
    if b >= n {
        return Err(CurvError::domain(format!("b = {b} must be below n = {n}")));
    }
    let (ni, bi) = (n as i64, b as i64);
    Ok(Ratio::new(-mixed_volume_cubic(ni, bi), ni - bi))
}

fn cubic_f(n: f64, b: f64) -> f64 {
    ((n - (b + 10.0)) * n + 2.0 * (5.0 * b - 1.0)) * n - 2.0 * b * (3.0 * b - 4.0)
}

/// Real root of the mixed-volume cubic for `b >= 2`.
pub fn gamma_root(b: usize) -> Result<f64> {
    if b < 2 {
        return Err(CurvError::domain(format!("the cubic has a single real root only for b >= 2, got {b}")));
    }
    let bf = b as f64;
    // p(0) = -2b(3b - 4) < 0
    let mut hi = bf + 12.0;
    while cubic_f(hi, bf) <= 0.0 {
        hi *= 2.0;
    }
    let mut x = brent(|n| cubic_f(n, bf), 0.0, hi, 1e-15 * hi, 200)?;
    // one Newton polish in case Brent stopped on the far side of the rounding band
    let dp = (3.0 * x - 2.0 * (bf + 10.0)) * x + 2.0 * (5.0 * bf - 1.0);
    let polished = x - cubic_f(x, bf) / dp;
    if cubic_f(polished, bf).abs() < cubic_f(x, bf).abs() {
        x = polished;
    }
    Ok(x)
}

/// Radical closed form of the real root, for cross-checking [`gamma_root`].
pub fn gamma_closed_form(b: usize) -> f64 {
    let b = b as f64;
    let inner = 2.0 * b.powi(5) + 40.0 * b.powi(4) - 288.0 * b.powi(3) + 1733.0 * b * b - 2540.0 * b - 36.0;
    let t = (b.powi(3) + 66.0 * b * b - 249.0 * b + 1090.0 + 9.0 * inner.sqrt()).cbrt();
    (b + 10.0 + (b * b - 10.0 * b + 106.0) / t + t) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub n: usize,
    pub b: usize,
    pub condition_value_num: i64,
    pub condition_value_den: i64,
    pub stable: bool,
}

/// Exact verdicts for `2 <= n <= n_max`, `0 <= b <= min(b_max, n - 1)`.
pub fn stability_table(n_max: usize, b_max: usize) -> Result<Vec<StabilityRow>> {
    if n_max < 12 {
        return Err(CurvError::domain(format!("table needs n_max >= 12, got {n_max}")));
    }
    let cells: Vec<(usize, usize)> = (2..=n_max).flat_map(|n| (0..=b_max.min(n - 1)).map(move |b| (n, b))).collect();
    cells
        .par_iter()
        .map(|&(n, b)| {
            let v = mixed_volume_condition(n, b)?;
            Ok(StabilityRow {
                n,
                b,
                condition_value_num: *v.numer(),
                condition_value_den: *v.denom(),
                stable: *v.numer() < 0,
            })
        })
        .collect()
}

/// Finite-difference response of the reduced flow at a cylinder to one cosine mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeResponse {
    pub m: usize,
    /// Projection of the response onto the mode.
    pub rayleigh: f64,
    /// Fraction of the response energy outside the mode.
    pub leakage: f64,
    pub step: f64,
}

/// Directional derivatives of the reduced vector field at `ubar = 0` along
/// `cos(m pi z / d)`, with Richardson extrapolation over halved steps.
pub fn jacobian_fd(
    eta: f64,
    speed: &dyn Speed,
    w: &WeightModel,
    g: &GridCalculus,
    modes: &[usize],
) -> Result<Vec<ModeResponse>> {
    let n = speed.n_dim();
    let r = (n - 1) as f64 / eta;
    modes
        .iter()
        .map(|&m| {
            if m == 0 {
                return Err(CurvError::domain("mode 0 is not mean-free"));
            }
            let v = g.cosine_mode(m);
            let vv = g.circle_integral(&v.iter().map(|x| x * x).collect::<Vec<_>>());
            let central = |h: f64| -> Result<Vec<f64>> {
                let eval = |t: f64| {
                    let ubar: Vec<f64> = v.iter().map(|x| t * x).collect();
                    reduced_rhs(&ReducedState { ubar, eta }, speed, w, g)
                };
                let (a, b) = (eval(h)?, eval(-h)?);
                Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
            };
            const LEVELS: usize = 6;
            let h0 = 2e-2 * r;
            let raw: Vec<Vec<f64>> =
                (0..LEVELS).map(|k| central(h0 / f64::powi(2.0, k as i32))).collect::<Result<_>>()?;
            let extrap: Vec<Vec<f64>> = (1..LEVELS)
                .map(|k| raw[k].iter().zip(&raw[k - 1]).map(|(a, b)| (4.0 * a - b) / 3.0).collect())
                .collect();
            let mut best = (f64::INFINITY, 1usize);
            for k in 1..extrap.len() {
                let diff = extrap[k].iter().zip(&extrap[k - 1]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if diff < best.0 {
                    best = (diff, k);
                }
            }
            let resp = &extrap[best.1];
            let proj = g.circle_integral(&resp.iter().zip(&v).map(|(a, b)| a * b).collect::<Vec<_>>()) / vv;
            let rest: Vec<f64> = resp.iter().zip(&v).map(|(a, b)| (a - proj * b).powi(2)).collect();
            let total: Vec<f64> = resp.iter().map(|a| a * a).collect();
            let te = g.circle_integral(&total);
            Ok(ModeResponse {
                m,
                rayleigh: proj,
                leakage: if te > 0.0 { g.circle_integral(&rest) / te } else { 0.0 },
                step: h0 / f64::powi(2.0, (best.1 + 1) as i32),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Degenerate,
}

/// Everything known about the critical cylinder of a speed and weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub n_dim: usize,
    pub speed: String,
    pub weight: Vec<f64>,
    pub d: f64,
    #[serde(rename = "R_crit")]
    pub r_crit: f64,
    pub eta0: f64,
    /// Eigenvalues `lambda_m(eta0)` keyed by `m`.
    pub lambda: BTreeMap<usize, f64>,
    pub bif_cond_value: f64,
    pub eta_dd_bracket: f64,
    pub eta_dd_sign: i8,
    pub lambda_dd_bracket: f64,
    pub lambda_dd_sign: i8,
    pub verdict: Verdict,
    /// How each number was obtained.
    pub provenance: BTreeMap<String, String>,
}

/// Locates the critical cylinder in `bracket` and classifies the nearby
/// stationary solutions.
pub fn analyze(
    speed: &dyn CylinderSpeed,
    w: &WeightModel,
    d: f64,
    bracket: (f64, f64),
    modes: usize,
) -> Result<StabilityReport> {
    let n = speed.n_dim();
    w.validate_for(n)?;
    let r_crit = r_crit_find(speed, n, d, bracket)?.ok_or_else(|| {
        CurvError::Degenerate(format!("the first eigenvalue keeps its sign on eta in [{}, {}]", bracket.0, bracket.1))
    })?;
    let eta0 = (n - 1) as f64 / r_crit;
    let coeffs = BifShapeCoefficients::from_speed(speed, eta0)?;
    let ed = eta_dd_analytic(&coeffs, w)?;
    let ld = lambda_dd_sign(&coeffs, w)?;
    let lambda =
        (1..=modes).map(|m| Ok((m, linear_eigenvalue(m, eta0, speed, n, d)?))).collect::<Result<BTreeMap<_, _>>>()?;
    let verdict = match ld.sign {
        Sign::Negative => Verdict::Stable,
        Sign::Positive => Verdict::Unstable,
        Sign::Zero => Verdict::Degenerate,
    };
    let mut provenance = BTreeMap::new();
    let mut note = |k: &str, v: &str| provenance.insert(k.to_string(), v.to_string());
    note("R_crit", "Brent root of lambda_1(eta) after a 4000-point log scan of the bracket");
    note("eta0", "(n - 1) / R_crit");
    note("lambda", "closed form -Fn (m pi/d)^2 + eta^2 F1 / (n - 1) at eta0");
    note("bif_cond_value", "2 F1 + eta0 (F1' - F1 Fn' / Fn) at eta0");
    note("eta_dd_bracket", "normalization-free bracket of eta''(0); eta''(0) has the opposite sign");
    note("lambda_dd_bracket", "normalization-free bracket of lambda''(0); negative means stable");
    note(
        "speed_data",
        if speed.homogeneity_degree().is_some() {
            "analytic derivatives of the speed along the cylinder family"
        } else {
            "speed derivatives supplied by the speed model"
        },
    );
    Ok(StabilityReport {
        n_dim: n,
        speed: speed.label(),
        weight: w.coeffs().to_vec(),
        d,
        r_crit,
        eta0,
        lambda,
        bif_cond_value: coeffs.bif,
        eta_dd_bracket: ed.bracket,
        eta_dd_sign: ed.sign.as_i8(),
        lambda_dd_bracket: ld.bracket,
        lambda_dd_sign: ld.sign.as_i8(),
        verdict,
        provenance,
    })
}

/// Stable cases of the mixed-volume stability table, as four ranges of `(n, b)`.
pub fn mixed_volume_stable_ranges(n: usize, b: usize) -> bool {
    match b {
        0..=3 => n >= 11,
        4 | 5 => n >= 12,
        6..=8 => n >= b + 7,
        _ => n >= b + 6,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speed::{numeric_eta_profile, Elementary, MeanCurvature, MeanCurvaturePow, QuarticExample};

    #[test]
    fn vpmcf_eigenvalues() {
        let s = MeanCurvature { n: 3 };
        let d = 1.5;
        let eta0 = critical_eta_vpmcf(3, d);
        assert!(linear_eigenvalue(1, eta0, &s, 3, d).unwrap().abs() < 1e-13);
        assert!(linear_eigenvalue(1, 0.99 * eta0, &s, 3, d).unwrap() < 0.0);
        assert!(linear_eigenvalue(40, eta0, &s, 3, d).unwrap() < -1e3);
    }

    fn critical_eta_vpmcf(n: usize, d: f64) -> f64 {
        PI * ((n - 1) as f64).sqrt() / d
    }

    #[test]
    fn critical_radius_examples() {
        for n in 2..=13 {
            for d in [0.5, 1.0, 2.0] {
                let r = r_crit_find(&MeanCurvature { n }, n, d, (0.1, 100.0)).unwrap().unwrap();
                let exact = d * ((n - 1) as f64).sqrt() / PI;
                assert!((r - exact).abs() < 1e-12 * exact);
            }
        }
        for d in [0.7, 1.0, 3.0] {
            let r = r_crit_find(&QuarticExample::first(d), 4, d, (0.1, 100.0)).unwrap().unwrap();
            assert!((r - 1.0).abs() < 1e-10);
            assert_eq!(r_crit_find(&QuarticExample::second(d), 4, d, (0.1, 100.0)).unwrap(), None);
        }
    }

    #[test]
    fn bifurcation_condition_examples() {
        assert!((bif_condition(PI, &MeanCurvature { n: 2 }).unwrap() - 2.0).abs() < 1e-15);
        for k in [1.5, 2.0, 3.0] {
            let s = MeanCurvaturePow::new(4, k).unwrap();
            for eta in [0.5, 2.0] {
                let f1 = s.eta_profile(eta).unwrap().f1;
                assert!((bif_condition(eta, &s).unwrap() - 2.0 * f1).abs() < 1e-12 * f1);
            }
        }
        assert!(bif_condition(3.0, &QuarticExample::first(1.0)).unwrap().abs() > 1e-3);
    }

    #[test]
    fn vpmcf_composite_coefficient() {
        for n in 2..=30usize {
            let c = BifShapeCoefficients::from_speed(&MeanCurvature { n }, 1.3).unwrap();
            let n1 = (n - 1) as f64;
            let expect = -2.0 * ((n * n) as f64 - 10.0 * n as f64 - 2.0) / (n1 * n1);
            assert!((c.script_f - expect).abs() < 1e-13 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn expanded_and_composite_forms_agree() {
        let mut speeds: Vec<Box<dyn CylinderSpeed>> = Vec::new();
        for n in 2..=9usize {
            speeds.push(Box::new(MeanCurvature { n }));
            speeds.push(Box::new(MeanCurvaturePow::new(n, 2.5).unwrap()));
            for r in 1..n.min(5) {
                speeds.push(Box::new(Elementary::new(n, r).unwrap()));
            }
        }
        speeds.push(Box::new(QuarticExample::first(1.0)));
        speeds.push(Box::new(QuarticExample::second(2.0)));
        for s in &speeds {
            for eta in [0.6, 1.7, 3.0] {
                let c = match BifShapeCoefficients::from_speed(s.as_ref(), eta) {
                    Ok(c) => c,
                    Err(_) => continue,
                };
                let a = c.script_f;
                let b = c.script_f_composite();
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{} eta={eta}: {a} vs {b}", s.label());
            }
        }
    }

    #[test]
    fn vpmcf_signs_flip_between_ten_and_eleven() {
        for n in 2..=30usize {
            let eta0 = critical_eta_vpmcf(n, 1.0);
            let c = BifShapeCoefficients::from_speed(&MeanCurvature { n }, eta0).unwrap();
            let w = WeightModel::constant();
            let ed = eta_dd_analytic(&c, &w).unwrap();
            let ld = lambda_dd_sign(&c, &w).unwrap();
            let expect = if n <= 10 { Sign::Negative } else { Sign::Positive };
            assert_eq!(ed.sign, expect, "n={n}");
            assert_eq!(ld.sign, expect.flip(), "n={n}");
        }
    }

    #[test]
    fn lambda_bracket_is_bif_times_eta_bracket() {
        let w = WeightModel::new(vec![1.0, 0.3, 0.2]).unwrap();
        for n in 3..=8usize {
            let s = MeanCurvaturePow::new(n, 2.0).unwrap();
            let c = BifShapeCoefficients::from_speed(&s, 1.1).unwrap();
            let e = eta_dd_analytic(&c, &w).unwrap();
            let l = lambda_dd_sign(&c, &w).unwrap();
            assert!((l.bracket - c.bif * e.bracket).abs() < 1e-12 * l.bracket.abs().max(1.0));
            // sign(lambda'') = -sign(eta'') * sign(bif)
            let bif_sign = Sign::of(c.bif, 0.0);
            assert_eq!(l.sign.as_i8(), -e.sign.as_i8() * bif_sign.as_i8());
        }
    }

    #[test]
    fn homogeneous_condition_is_scaled_general_condition() {
        let weights =
            [WeightModel::constant(), WeightModel::mixed_volume(1), WeightModel::new(vec![1.0, 0.4, 0.1]).unwrap()];
        let d = 1.3;
        for n in 3..=12usize {
            let speeds: Vec<Box<dyn CylinderSpeed>> = vec![
                Box::new(MeanCurvature { n }),
                Box::new(MeanCurvaturePow::new(n, 2.0).unwrap()),
                Box::new(MeanCurvaturePow::new(n, 0.5).unwrap()),
                Box::new(Elementary::new(n, 2).unwrap()),
            ];
            for s in &speeds {
                let k = s.homogeneity_degree().unwrap();
                let one = s.eta_profile(1.0).unwrap();
                let eta0 = PI / d * ((n - 1) as f64 * one.fn_ / one.f1).sqrt();
                let c = BifShapeCoefficients::from_speed(s.as_ref(), eta0).unwrap();
                for w in &weights {
                    let fc = lambda_dd_sign(&c, w).unwrap().bracket;
                    let hc = homog_condition(n, k, one.f1, one.fn_, one.fnn, one.fnnn, w, d).unwrap();
                    let n1 = (n - 1) as f64;
                    let scaled = fc * n1 * n1 / (2.0 * eta0.powf(k - 1.0) * one.f1);
                    assert!((hc - scaled).abs() < 1e-9 * hc.abs().max(1.0), "{} n={n}: {hc} vs {scaled}", s.label());
                }
            }
        }
    }

    #[test]
    fn mixed_volume_condition_examples() {
        assert_eq!(mixed_volume_condition(10, 0).unwrap(), Ratio::from_integer(2));
        assert_eq!(mixed_volume_condition(11, 0).unwrap(), Ratio::from_integer(-9));
        assert!(*mixed_volume_condition(12, 4).unwrap().numer() < 0);
        assert!(mixed_volume_condition(5, 5).is_err());
    }

    #[test]
    fn homogeneous_mean_curvature_matches_exact_condition() {
        for n in 2..=30usize {
            for b in 0..n {
                let w = WeightModel::mixed_volume(b);
                let hc = homog_condition(n, 1.0, 1.0, 1.0, 0.0, 0.0, &w, 1.0).unwrap();
                let exact = mixed_volume_condition(n, b).unwrap();
                let ev = *exact.numer() as f64 / *exact.denom() as f64;
                assert!((hc - ev).abs() < 1e-8 * ev.abs().max(1.0), "n={n} b={b}");
            }
        }
    }

    #[test]
    fn gamma_root_properties() {
        for b in 9..=50usize {
            let g = gamma_root(b).unwrap();
            assert!(g > (b + 5) as f64 && g < (b + 6) as f64);
            assert!(cubic_f(g, b as f64).abs() <= 1e-10);
        }
        let g2 = gamma_root(2).unwrap();
        assert!(g2 > 10.0 && g2 < 11.0);
        for b in 2..=12usize {
            assert!((gamma_root(b).unwrap() - gamma_closed_form(b)).abs() < 1e-8);
        }
    }

    #[test]
    fn cubic_has_one_real_root_from_two() {
        for b in 2..=50i64 {
            let (a2, a1, a0) = (-(b + 10) as f64, (2 * (5 * b - 1)) as f64, (-2 * b * (3 * b - 4)) as f64);
            let disc =
                18.0 * a2 * a1 * a0 - 4.0 * a2.powi(3) * a0 + a2 * a2 * a1 * a1 - 4.0 * a1.powi(3) - 27.0 * a0 * a0;
            assert!(disc < 0.0, "b={b}");
        }
    }

    #[test]
    fn stability_table_examples() {
        let t = stability_table(30, 12).unwrap();
        let get = |n, b| t.iter().find(|r| r.n == n && r.b == b).copied();
        assert!(get(13, 6).unwrap().stable);
        assert!(!get(12, 6).unwrap().stable);
        assert!(get(15, 9).unwrap().stable);
        assert!(get(5, 5).is_none());
        for r in &t {
            assert_eq!(r.stable, mixed_volume_stable_ranges(r.n, r.b), "n={} b={}", r.n, r.b);
        }
        assert!(stability_table(11, 3).is_err());
    }

    #[test]
    fn finite_difference_jacobian_matches_eigenvalues() {
        let g = GridCalculus::spectral(48, 1.0).unwrap();
        let s = MeanCurvature { n: 2 };
        let eta0 = critical_eta_vpmcf(2, 1.0);
        for f in [0.8, 1.2] {
            let eta = f * eta0;
            let res = jacobian_fd(eta, &s, &WeightModel::constant(), &g, &[1, 2, 3]).unwrap();
            for r in res {
                let exact = linear_eigenvalue(r.m, eta, &s, 2, 1.0).unwrap();
                assert!((r.rayleigh - exact).abs() < 1e-6 * exact.abs(), "m={}", r.m);
                assert!(r.leakage < 1e-6);
            }
        }
    }

    #[test]
    fn quartic_example_eigenvalue_changes_sign_at_three() {
        let g = GridCalculus::spectral(32, 1.0).unwrap();
        let s = QuarticExample::first(1.0);
        let w = WeightModel::constant();
        let below = jacobian_fd(2.9, &s, &w, &g, &[1]).unwrap()[0].rayleigh;
        let above = jacobian_fd(3.1, &s, &w, &g, &[1]).unwrap()[0].rayleigh;
        assert!(below < 0.0 && above > 0.0);
    }

    #[test]
    fn numeric_speed_data_give_same_verdicts() {
        let w = WeightModel::constant();
        for n in [4usize, 9, 12] {
            let s = MeanCurvaturePow::new(n, 2.0).unwrap();
            let eta = 1.4;
            let a = BifShapeCoefficients::from_speed(&s, eta).unwrap();
            let b = BifShapeCoefficients::new(n, eta, numeric_eta_profile(&s, eta).unwrap()).unwrap();
            assert_eq!(lambda_dd_sign(&a, &w).unwrap().sign, lambda_dd_sign(&b, &w).unwrap().sign);
        }
    }

    #[test]
    fn report_for_vpmcf() {
        let r = analyze(&MeanCurvature { n: 11 }, &WeightModel::constant(), 1.0, (0.1, 100.0), 5).unwrap();
        assert_eq!(r.verdict, Verdict::Stable);
        assert!(r.lambda[&1].abs() < 1e-12);
        assert!(r.lambda[&2] < 0.0);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"R_crit\""));
        let r = analyze(&MeanCurvature { n: 10 }, &WeightModel::constant(), 1.0, (0.1, 100.0), 5).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
    }
}
