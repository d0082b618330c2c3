//! Speed functions `F(kappa)` and their derivatives at cylinders.
//!
//! All cylinder quantities are functions of `eta = (n - 1) / R`, evaluated at
//! `kappa1 = eta / (n - 1)`, `kappan = 0`. A trailing `p` means a derivative in
//! `eta`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::geometry::{esym, CurvaturePair};
use crate::special::binomial_f;

/// Speed derivatives along the cylinder family.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EtaProfile {
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "Fn")]
    pub fn_: f64,
    #[serde(rename = "F1p")]
    pub f1p: f64,
    #[serde(rename = "Fnp")]
    pub fnp: f64,
    #[serde(rename = "F1pp")]
    pub f1pp: f64,
    #[serde(rename = "Fnpp")]
    pub fnpp: f64,
    #[serde(rename = "Fnn")]
    pub fnn: f64,
    #[serde(rename = "Fnnp")]
    pub fnnp: f64,
    #[serde(rename = "Fnnn")]
    pub fnnn: f64,
}

impl EtaProfile {
    fn as_array(&self) -> [f64; 9] {
        [self.f1, self.fn_, self.f1p, self.fnp, self.f1pp, self.fnpp, self.fnn, self.fnnp, self.fnnn]
    }

    fn from_array(a: [f64; 9]) -> Self {
        EtaProfile {
            f1: a[0],
            fn_: a[1],
            f1p: a[2],
            fnp: a[3],
            f1pp: a[4],
            fnpp: a[5],
            fnn: a[6],
            fnnp: a[7],
            fnnn: a[8],
        }
    }
}

/// What the stability analysis needs: derivative data along cylinders.
pub trait CylinderSpeed: Send + Sync {
    fn n_dim(&self) -> usize;
    fn eta_profile(&self, eta: f64) -> Result<EtaProfile>;
    fn homogeneity_degree(&self) -> Option<f64> {
        None
    }
    fn label(&self) -> String;
}

/// A speed that can also be evaluated at arbitrary axisymmetric curvatures,
/// as needed by the flow.
pub trait Speed: CylinderSpeed {
    fn eval(&self, c: CurvaturePair) -> f64;
    /// Derivative in one of the `n - 1` equal slots.
    fn d_kappa1(&self, c: CurvaturePair) -> f64;
    fn d_kappan(&self, c: CurvaturePair) -> f64;
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(CurvError::domain(format!("eta must be positive, got {eta}")));
    }
    Ok(())
}

/// `c t^p` and its first two derivatives in `eta` where `t = eta / (n - 1)`.
fn monomial_in_eta(c: f64, p: i32, eta: f64, n: usize) -> (f64, f64, f64) {
    let s = 1.0 / (n - 1) as f64;
    let t = eta * s;
    let pf = p as f64;
    let pow = |k: i32| if k == 0 { 1.0 } else { t.powi(k) };
    let v = c * pow(p);
    let d1 = if p >= 1 { c * pf * pow(p - 1) * s } else { 0.0 };
    let d2 = if p >= 2 { c * pf * (pf - 1.0) * pow(p - 2) * s * s } else { 0.0 };
    (v, d1, d2)
}

/// `F = (n - 1) kappa1 + kappan`.
#[derive(Debug, Clone, Copy)]
pub struct MeanCurvature {
    pub n: usize,
}

impl CylinderSpeed for MeanCurvature {
    fn n_dim(&self) -> usize {
        self.n
    }
    fn eta_profile(&self, eta: f64) -> Result<EtaProfile> {
        check_eta(eta)?;
        Ok(EtaProfile { f1: 1.0, fn_: 1.0, ..Default::default() })
    }
    fn homogeneity_degree(&self) -> Option<f64> {
        Some(1.0)
    }
    fn label(&self) -> String {
        "mean-curvature".into()
    }
}

impl Speed for MeanCurvature {
    fn eval(&self, c: CurvaturePair) -> f64 {
        c.mean(self.n)
    }
    fn d_kappa1(&self, _: CurvaturePair) -> f64 {
        1.0
    }
    fn d_kappan(&self, _: CurvaturePair) -> f64 {
        1.0
    }
}

/// `F = E_r`.
#[derive(Debug, Clone, Copy)]
pub struct Elementary {
    pub n: usize,
    pub r: usize,
}

impl Elementary {
    pub fn new(n: usize, r: usize) -> Result<Self> {
        if r == 0 || r > n {
            return Err(CurvError::domain(format!("E_{r} is not a speed in dimension {n}")));
        }
        Ok(Elementary { n, r })
    }
}

impl CylinderSpeed for Elementary {
    fn n_dim(&self) -> usize {
        self.n
    }
    fn eta_profile(&self, eta: f64) -> Result<EtaProfile> {
        check_eta(eta)?;
        let (n, r) = (self.n as i64, self.r as i64);
        let p = (r - 1) as i32;
        let (f1, f1p, f1pp) = monomial_in_eta(binomial_f(n - 2, r - 1), p, eta, self.n);
        let (fn_, fnp, fnpp) = monomial_in_eta(binomial_f(n - 1, r - 1), p, eta, self.n);
        Ok(EtaProfile { f1, fn_, f1p, fnp, f1pp, fnpp, ..Default::default() })
    }
    fn homogeneity_degree(&self) -> Option<f64> {
        Some(self.r as f64)
    }
    fn label(&self) -> String {
        format!("elementary:{}", self.r)
    }
}

impl Speed for Elementary {
    fn eval(&self, c: CurvaturePair) -> f64 {
        esym(self.r, c, self.n)
    }
    fn d_kappa1(&self, c: CurvaturePair) -> f64 {
        // E_{r-1} of the remaining n - 2 copies of kappa1 and kappan
        let (n, r) = (self.n as i64, self.r as i64);
        let mut v = binomial_f(n - 2, r - 1) * pw(c.kappa1, r - 1);
        if r >= 2 {
            v += binomial_f(n - 2, r - 2) * pw(c.kappa1, r - 2) * c.kappan;
        }
        v
    }
    fn d_kappan(&self, c: CurvaturePair) -> f64 {
        binomial_f(self.n as i64 - 1, self.r as i64 - 1) * pw(c.kappa1, self.r as i64 - 1)
    }
}

fn pw(x: f64, k: i64) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k as i32)
    }
}

/// `F = H^k` with `H = (n - 1) kappa1 + kappan`, `k > 0`.
#[derive(Debug, Clone, Copy)]
pub struct MeanCurvaturePow {
    pub n: usize,
    pub k: f64,
}

impl MeanCurvaturePow {
    pub fn new(n: usize, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(CurvError::domain(format!("power must be positive, got {k}")));
        }
        Ok(MeanCurvaturePow { n, k })
    }

    fn pow(&self, h: f64, e: f64) -> f64 {
        if e == 0.0 {
            1.0
        } else if e.fract() == 0.0 && e.abs() < 64.0 {
            h.powi(e as i32)
        } else {
            h.powf(e)
        }
    }
}

impl CylinderSpeed for MeanCurvaturePow {
    fn n_dim(&self) -> usize {
        self.n
    }
    fn eta_profile(&self, eta: f64) -> Result<EtaProfile> {
        check_eta(eta)?;
        let k = self.k;
        let d1 = k * self.pow(eta, k - 1.0);
        let d2 = k * (k - 1.0) * self.pow(eta, k - 2.0);
        let d3 = k * (k - 1.0) * (k - 2.0) * self.pow(eta, k - 3.0);
        Ok(EtaProfile { f1: d1, fn_: d1, f1p: d2, fnp: d2, f1pp: d3, fnpp: d3, fnn: d2, fnnp: d3, fnnn: d3 })
    }
    fn homogeneity_degree(&self) -> Option<f64> {
        Some(self.k)
    }
    fn label(&self) -> String {
        format!("mean-curvature-pow:{}", self.k)
    }
}

impl Speed for MeanCurvaturePow {
    fn eval(&self, c: CurvaturePair) -> f64 {
        self.pow(c.mean(self.n), self.k)
    }
    fn d_kappa1(&self, c: CurvaturePair) -> f64 {
        self.k * self.pow(c.mean(self.n), self.k - 1.0)
    }
    fn d_kappan(&self, c: CurvaturePair) -> f64 {
        self.d_kappa1(c)
    }
}

/// `F = E_4 + alpha sum kappa_i^2 + beta sum kappa_i^3` in dimension four.
/// With `alpha = pi^2 / (12 d^2)`, `beta = pi^2 / (18 d^2)` the critical cylinder
/// has radius one; with `alpha = pi^2 / (6 d^2)` no cylinder is critical.
#[derive(Debug, Clone, Copy)]
pub struct QuarticExample {
    pub alpha: f64,
    pub beta: f64,
    variant: u8,
}

impl QuarticExample {
    pub fn first(d: f64) -> Self {
        let k2 = (std::f64::consts::PI / d).powi(2);
        QuarticExample { alpha: k2 / 12.0, beta: k2 / 18.0, variant: 1 }
    }

    pub fn second(d: f64) -> Self {
        let k2 = (std::f64::consts::PI / d).powi(2);
        QuarticExample { alpha: k2 / 6.0, beta: k2 / 18.0, variant: 2 }
    }
}

impl CylinderSpeed for QuarticExample {
    fn n_dim(&self) -> usize {
        4
    }
    fn eta_profile(&self, eta: f64) -> Result<EtaProfile> {
        check_eta(eta)?;
        let (a, b) = (self.alpha, self.beta);
        Ok(EtaProfile {
            f1: 2.0 * a * eta / 3.0 + b * eta * eta / 3.0,
            fn_: eta.powi(3) / 27.0,
            f1p: 2.0 * a / 3.0 + 2.0 * b * eta / 3.0,
            fnp: eta * eta / 9.0,
            f1pp: 2.0 * b / 3.0,
            fnpp: 2.0 * eta / 9.0,
            fnn: 2.0 * a,
            fnnp: 0.0,
            fnnn: 6.0 * b,
        })
    }
    fn label(&self) -> String {
        format!("remark-example-{}", self.variant)
    }
}

impl Speed for QuarticExample {
    fn eval(&self, c: CurvaturePair) -> f64 {
        let (k1, kn) = (c.kappa1, c.kappan);
        k1.powi(3) * kn + self.alpha * (3.0 * k1 * k1 + kn * kn) + self.beta * (3.0 * k1.powi(3) + kn.powi(3))
    }
    fn d_kappa1(&self, c: CurvaturePair) -> f64 {
        let (k1, kn) = (c.kappa1, c.kappan);
        k1 * k1 * kn + 2.0 * self.alpha * k1 + 3.0 * self.beta * k1 * k1
    }
    fn d_kappan(&self, c: CurvaturePair) -> f64 {
        let (k1, kn) = (c.kappa1, c.kappan);
        k1.powi(3) + 2.0 * self.alpha * kn + 3.0 * self.beta * kn * kn
    }
}

/// Cylinder data read from a table, linearly interpolated in `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSpeed {
    n: usize,
    eta: Vec<f64>,
    rows: Vec<EtaProfile>,
    source: String,
}

#[derive(Debug, Deserialize)]
struct TableRow {
    eta: f64,
    #[serde(flatten)]
    profile: EtaProfile,
}

impl TabulatedSpeed {
    pub fn new(n: usize, mut data: Vec<(f64, EtaProfile)>, source: impl Into<String>) -> Result<Self> {
        if data.len() < 2 {
            return Err(CurvError::InsufficientData("speed table needs at least two rows".into()));
        }
        data.sort_by(|a, b| a.0.total_cmp(&b.0));
        if data.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(CurvError::Parse("speed table has repeated eta values".into()));
        }
        let (eta, rows) = data.into_iter().unzip();
        Ok(TabulatedSpeed { n, eta, rows, source: source.into() })
    }

    pub fn from_csv_reader<R: std::io::Read>(n: usize, reader: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut data = Vec::new();
        for row in rdr.deserialize::<TableRow>() {
            let row = row.map_err(|e| CurvError::Parse(format!("{source}: {e}")))?;
            data.push((row.eta, row.profile));
        }
        Self::new(n, data, source)
    }

    pub fn from_csv_path(n: usize, path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv_reader(n, f, &path.display().to_string())
    }

    pub fn eta_range(&self) -> (f64, f64) {
        (self.eta[0], *self.eta.last().unwrap())
    }
}

impl CylinderSpeed for TabulatedSpeed {
    fn n_dim(&self) -> usize {
        self.n
    }
    fn eta_profile(&self, eta: f64) -> Result<EtaProfile> {
        check_eta(eta)?;
        let (lo, hi) = self.eta_range();
        if eta < lo || eta > hi {
            return Err(CurvError::Range(format!("eta {eta} outside table [{lo}, {hi}]")));
        }
        let i = self.eta.partition_point(|&e| e <= eta).clamp(1, self.eta.len() - 1);
        let (e0, e1) = (self.eta[i - 1], self.eta[i]);
        let t = (eta - e0) / (e1 - e0);
        let (a, b) = (self.rows[i - 1].as_array(), self.rows[i].as_array());
        let mut out = [0.0; 9];
        for k in 0..9 {
            out[k] = a[k] + t * (b[k] - a[k]);
        }
        Ok(EtaProfile::from_array(out))
    }
    fn label(&self) -> String {
        format!("table:{}", self.source)
    }
}

/// Richardson-extrapolated central difference.
pub fn richardson_derivative<F: FnMut(f64) -> f64>(mut f: F, x: f64, h0: f64) -> f64 {
    const LEVELS: usize = 5;
    let mut tab = [[0.0f64; LEVELS]; LEVELS];
    let mut h = h0;
    for i in 0..LEVELS {
        tab[i][0] = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut fac = 4.0;
        for j in 1..=i {
            tab[i][j] = tab[i][j - 1] + (tab[i][j - 1] - tab[i - 1][j - 1]) / (fac - 1.0);
            fac *= 4.0;
        }
        h *= 0.5;
    }
    tab[LEVELS - 1][LEVELS - 1]
}

/// Cylinder data of an arbitrary speed from its curvature derivatives by
/// Richardson differentiation.
pub fn numeric_eta_profile<S: Speed + ?Sized>(speed: &S, eta: f64) -> Result<EtaProfile> {
    check_eta(eta)?;
    let n1 = (speed.n_dim() - 1) as f64;
    let at = |e: f64, kn: f64| CurvaturePair::new(e / n1, kn);
    let h = 0.05 * eta;
    let hk = 0.05 * (eta / n1).max(1e-3);
    let f1 = |e: f64| speed.d_kappa1(at(e, 0.0));
    let fnf = |e: f64| speed.d_kappan(at(e, 0.0));
    let fnn_at = |e: f64| richardson_derivative(|k| speed.d_kappan(at(e, k)), 0.0, hk);
    let fnnn_at =
        |e: f64| richardson_derivative(|k| richardson_derivative(|k2| speed.d_kappan(at(e, k2)), k, hk), 0.0, hk);
    Ok(EtaProfile {
        f1: f1(eta),
        fn_: fnf(eta),
        f1p: richardson_derivative(f1, eta, h),
        fnp: richardson_derivative(fnf, eta, h),
        f1pp: richardson_derivative(|e| richardson_derivative(f1, e, h), eta, h),
        fnpp: richardson_derivative(|e| richardson_derivative(fnf, e, h), eta, h),
        fnn: fnn_at(eta),
        fnnp: richardson_derivative(fnn_at, eta, h),
        fnnn: fnnn_at(eta),
    })
}

/// Named speed presets.
#[derive(Debug, Clone, PartialEq)]
pub enum SpeedSpec {
    MeanCurvature,
    Elementary(usize),
    MeanCurvaturePow(f64),
    RemarkExample1,
    RemarkExample2,
}

impl FromStr for SpeedSpec {
    type Err = CurvError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || CurvError::Parse(format!("unknown speed '{s}'"));
        match s {
            "mean-curvature" => return Ok(SpeedSpec::MeanCurvature),
            "remark-example-1" => return Ok(SpeedSpec::RemarkExample1),
            "remark-example-2" => return Ok(SpeedSpec::RemarkExample2),
            _ => {}
        }
        if let Some(r) = s.strip_prefix("elementary:") {
            return r.parse().map(SpeedSpec::Elementary).map_err(|_| bad());
        }
        if let Some(k) = s.strip_prefix("mean-curvature-pow:") {
            return k.parse().map(SpeedSpec::MeanCurvaturePow).map_err(|_| bad());
        }
        Err(bad())
    }
}

impl fmt::Display for SpeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpeedSpec::MeanCurvature => write!(f, "mean-curvature"),
            SpeedSpec::Elementary(r) => write!(f, "elementary:{r}"),
            SpeedSpec::MeanCurvaturePow(k) => write!(f, "mean-curvature-pow:{k}"),
            SpeedSpec::RemarkExample1 => write!(f, "remark-example-1"),
            SpeedSpec::RemarkExample2 => write!(f, "remark-example-2"),
        }
    }
}

impl SpeedSpec {
    pub fn build(&self, n: usize, d: f64) -> Result<Box<dyn Speed>> {
        if n < 2 {
            return Err(CurvError::domain(format!("dimension must be at least 2, got {n}")));
        }
        Ok(match *self {
            SpeedSpec::MeanCurvature => Box::new(MeanCurvature { n }),
            SpeedSpec::Elementary(r) => Box::new(Elementary::new(n, r)?),
            SpeedSpec::MeanCurvaturePow(k) => Box::new(MeanCurvaturePow::new(n, k)?),
            SpeedSpec::RemarkExample1 | SpeedSpec::RemarkExample2 => {
                if n != 4 {
                    return Err(CurvError::domain(format!("{self} is defined for n = 4 only")));
                }
                if *self == SpeedSpec::RemarkExample1 {
                    Box::new(QuarticExample::first(d))
                } else {
                    Box::new(QuarticExample::second(d))
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    fn assert_profiles_close(a: &EtaProfile, b: &EtaProfile, tol: f64) {
        let (x, y) = (a.as_array(), b.as_array());
        for k in 0..9 {
            assert!(close(x[k], y[k], tol), "component {k}: {} vs {}", x[k], y[k]);
        }
    }

    fn presets(n: usize) -> Vec<Box<dyn Speed>> {
        let mut v: Vec<Box<dyn Speed>> = vec![
            Box::new(MeanCurvature { n }),
            Box::new(MeanCurvaturePow::new(n, 3.0).unwrap()),
            Box::new(MeanCurvaturePow::new(n, 1.5).unwrap()),
        ];
        for r in 1..=n.min(4) {
            v.push(Box::new(Elementary::new(n, r).unwrap()));
        }
        if n == 4 {
            v.push(Box::new(QuarticExample::first(1.3)));
            v.push(Box::new(QuarticExample::second(0.7)));
        }
        v
    }

    #[test]
    fn analytic_profiles_match_numeric_differentiation() {
        for n in 2..=6 {
            for s in presets(n) {
                for eta in [0.7, 1.9, 3.0] {
                    let a = s.eta_profile(eta).unwrap();
                    let b = numeric_eta_profile(s.as_ref(), eta).unwrap();
                    assert_profiles_close(&a, &b, 1e-6);
                }
            }
        }
    }

    #[test]
    fn profiles_consistent_with_curvature_derivatives() {
        for n in 2..=6 {
            for s in presets(n) {
                let eta = 2.3;
                let c = CurvaturePair::new(eta / (n - 1) as f64, 0.0);
                let p = s.eta_profile(eta).unwrap();
                assert!(close(p.f1, s.d_kappa1(c), 1e-13), "{}", s.label());
                assert!(close(p.fn_, s.d_kappan(c), 1e-13), "{}", s.label());
            }
        }
    }

    #[test]
    fn quartic_example_values() {
        let s = QuarticExample::first(1.0);
        let p = s.eta_profile(3.0).unwrap();
        let f = 9.0 * p.f1 / 3.0 - std::f64::consts::PI.powi(2) * p.fn_;
        assert!(f.abs() < 1e-13);
    }

    #[test]
    fn elementary_symmetric_speed_is_symmetric_sum() {
        let s = Elementary::new(5, 3).unwrap();
        let c = CurvaturePair::new(0.4, -0.9);
        // brute force over 4 copies of kappa1 and one kappan
        let k = [0.4, 0.4, 0.4, 0.4, -0.9];
        let mut e3 = 0.0;
        for i in 0..5 {
            for j in i + 1..5 {
                for l in j + 1..5 {
                    e3 += k[i] * k[j] * k[l];
                }
            }
        }
        assert!(close(s.eval(c), e3, 1e-14));
    }

    #[test]
    fn spec_parsing_round_trip() {
        for s in ["mean-curvature", "elementary:2", "mean-curvature-pow:3", "remark-example-1", "remark-example-2"] {
            let spec: SpeedSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("elementary:x".parse::<SpeedSpec>().is_err());
        assert!("gauss".parse::<SpeedSpec>().is_err());
        assert!(SpeedSpec::RemarkExample1.build(3, 1.0).is_err());
    }

    #[test]
    fn table_interpolates_linearly() {
        let text = "eta,F1,Fn,F1p,Fnp,F1pp,Fnpp,Fnn,Fnnp,Fnnn\n1,1,1,0,0,0,0,0,0,0\n3,3,5,0,0,0,0,2,0,0\n";
        let t = TabulatedSpeed::from_csv_reader(3, text.as_bytes(), "inline").unwrap();
        let p = t.eta_profile(2.0).unwrap();
        assert_eq!((p.f1, p.fn_, p.fnn), (2.0, 3.0, 1.0));
        assert!(t.eta_profile(3.5).is_err());
    }

    proptest! {
        #[test]
        fn homogeneous_scaling(n in 2usize..8, k in 0.5f64..4.0, eta in 0.2f64..5.0) {
            let s = MeanCurvaturePow::new(n, k).unwrap();
            let p = s.eta_profile(eta).unwrap();
            let one = s.eta_profile(1.0).unwrap();
            prop_assert!(close(p.f1, eta.powf(k - 1.0) * one.f1, 1e-12));
            prop_assert!(close(p.fn_, eta.powf(k - 1.0) * one.fn_, 1e-12));
            prop_assert!(close(p.fnn, eta.powf(k - 2.0) * one.fnn, 1e-12));
            prop_assert!(close(p.fnnn, eta.powf(k - 3.0) * one.fnnn, 1e-12));
        }

        #[test]
        fn elementary_homogeneous_scaling(n in 2usize..9, r in 1usize..5, eta in 0.2f64..5.0) {
            prop_assume!(r <= n);
            let s = Elementary::new(n, r).unwrap();
            let p = s.eta_profile(eta).unwrap();
            let one = s.eta_profile(1.0).unwrap();
            let k = r as f64;
            prop_assert!(close(p.f1, eta.powf(k - 1.0) * one.f1, 1e-12));
            prop_assert!(close(p.fn_, eta.powf(k - 1.0) * one.fn_, 1e-12));
        }
    }
}
