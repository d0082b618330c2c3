//! Time integration of the full and reduced axisymmetric flows.

mod rk;

use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::geometry::{weighted_volume_raw, RadialProfile, WeightModel};
use crate::grid::{DiffMode, GridCalculus};
use crate::reduction::{full_rhs_raw, psi_inverse, psi_shift, ReducedState};
use crate::speed::{Speed, SpeedSpec};
use crate::stability::r_crit_find;
use crate::unduloid::{profile as unduloid_profile, UnduloidParams};

use rk::{Attempt, DormandPrince, Eval, ImexArs222};

/// Default axis-approach threshold for the `min-rho` event.
pub const DEFAULT_MIN_RHO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowMode {
    Full,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Explicit below 257 nodes, implicit-explicit above.
    Auto,
    DormandPrince,
    Imex,
}

/// Base radius of a cylinder start, absolute or as a multiple of the critical radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusSpec {
    Absolute(f64),
    CriticalMultiple(f64),
}

/// Closed-form initial data, optionally modulated by `1 + sum eps_k cos(m_k pi z / d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum InitialFamily {
    Cylinder { radius: RadiusSpec, modes: Vec<(usize, f64)> },
    Unduloid { s: f64, modes: Vec<(usize, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub n_dim: usize,
    pub d: f64,
    pub nodes: usize,
    pub speed: String,
    pub weight: WeightModel,
    pub initial: InitialFamily,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub mode: FlowMode,
    pub record_every: f64,
    pub min_rho: f64,
    pub diff: DiffMode,
    pub integrator: Integrator,
    pub max_steps: usize,
}

impl FlowConfig {
    /// Mean-curvature flow of a cylinder, everything else at defaults.
    pub fn new(n_dim: usize, d: f64, nodes: usize, initial: InitialFamily) -> Self {
        FlowConfig {
            n_dim,
            d,
            nodes,
            speed: "mean-curvature".into(),
            weight: WeightModel::constant(),
            initial,
            t_end: 1.0,
            rtol: 1e-8,
            atol: 1e-10,
            mode: FlowMode::Full,
            record_every: 0.01,
            min_rho: DEFAULT_MIN_RHO,
            diff: DiffMode::SpectralCosine,
            integrator: Integrator::Auto,
            max_steps: 5_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CurvError::Domain(m));
        if self.n_dim < 2 {
            return bad(format!("n_dim must be at least 2, got {}", self.n_dim));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return bad(format!("d must be positive, got {}", self.d));
        }
        for (name, v) in [("rtol", self.rtol), ("atol", self.atol)] {
            if !(v > 1e-14 && v < 1e-2) {
                return bad(format!("{name} must lie in (1e-14, 1e-2), got {v}"));
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.record_every.is_finite() && self.record_every > 0.0) {
            return bad(format!("record_every must be positive, got {}", self.record_every));
        }
        if !(self.min_rho.is_finite() && self.min_rho > 0.0) {
            return bad(format!("min_rho must be positive, got {}", self.min_rho));
        }
        self.weight.validate_for(self.n_dim)?;
        self.speed_model()?;
        Ok(())
    }

    pub fn speed_model(&self) -> Result<Box<dyn Speed>> {
        self.speed.parse::<SpeedSpec>()?.build(self.n_dim, self.d)
    }

    pub fn grid(&self) -> Result<GridCalculus> {
        GridCalculus::new(self.nodes, self.d, self.diff)
    }

    fn uses_imex(&self) -> bool {
        match self.integrator {
            Integrator::Auto => self.nodes > 256,
            Integrator::DormandPrince => false,
            Integrator::Imex => true,
        }
    }

    /// Samples the initial profile on the configured grid.
    pub fn initial_profile(&self) -> Result<RadialProfile> {
        let g = self.grid()?;
        let (base, modes) = match &self.initial {
            InitialFamily::Cylinder { radius, modes } => {
                let r = match *radius {
                    RadiusSpec::Absolute(r) => r,
                    RadiusSpec::CriticalMultiple(f) => {
                        let speed = self.speed_model()?;
                        let rc = r_crit_find(speed.as_ref(), self.n_dim, self.d, (1e-3, 1e3))?
                            .ok_or_else(|| CurvError::domain("speed has no critical radius on eta in [1e-3, 1e3]"))?;
                        f * rc
                    }
                };
                (vec![r; self.nodes], modes)
            }
            InitialFamily::Unduloid { s, modes } => {
                let p = UnduloidParams::new(self.n_dim, self.d, *s)?;
                (unduloid_profile(&p, self.nodes)?.into_values(), modes)
            }
        };
        let mut factor = vec![1.0; self.nodes];
        for &(m, eps) in modes {
            for (x, c) in factor.iter_mut().zip(g.cosine_mode(m)) {
                *x += eps * c;
            }
        }
        RadialProfile::new(self.n_dim, self.d, base.iter().zip(&factor).map(|(a, b)| a * b).collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    MinRho,
    XiNonpositive,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::MinRho => "min-rho",
            Termination::XiNonpositive => "xi-nonpositive",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Profiles at the recorded times; in reduced mode these are `psi(ubar, eta)`.
    pub states: Vec<RadialProfile>,
    pub wvol: Vec<f64>,
    /// `sup |P0 u|` at the recorded times.
    pub sup_dev: Vec<f64>,
    pub step_stats: StepStats,
    pub termination: Termination,
    /// `eta` of the conserved weighted volume at the start.
    pub eta: f64,
}

/// Runs the configured flow and records the state every `record_every`.
pub fn integrate(cfg: &FlowConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let g = cfg.grid()?;
    let speed = cfg.speed_model()?;
    let u0 = cfg.initial_profile()?;
    let n = cfg.n_dim;
    let w = &cfg.weight;
    let reduced0 = psi_inverse(&u0, w, &g)?;
    let eta = reduced0.eta;

    // reduced mode evolves ubar at fixed eta; `lift` maps a state back to a profile
    let lift = |y: &[f64]| -> Result<Vec<f64>> {
        match cfg.mode {
            FlowMode::Full => Ok(y.to_vec()),
            FlowMode::Reduced => {
                let s = ReducedState { ubar: y.to_vec(), eta };
                let c = psi_shift(&s, n, w, &g)?;
                Ok(y.iter().map(|x| x + c).collect())
            }
        }
    };
    let mut rhs = |y: &[f64]| -> Result<Eval> {
        let u = lift(y)?;
        let e = full_rhs_raw(&u, n, speed.as_ref(), w, &g)?;
        let dy = match cfg.mode {
            FlowMode::Full => e.rhs,
            FlowMode::Reduced => g.project_meanzero(&e.rhs),
        };
        let min_rho = u.iter().fold(f64::INFINITY, |m, &x| m.min(x));
        Ok(Eval { dy, min_rho, min_xi: e.min_xi })
    };

    let mut y = match cfg.mode {
        FlowMode::Full => u0.values().to_vec(),
        FlowMode::Reduced => reduced0.ubar.clone(),
    };
    let mut k = rhs(&y)?;
    if !(k.min_xi > 0.0) {
        return Err(CurvError::domain(format!("weight is not positive on the initial profile (min {:e})", k.min_xi)));
    }
    if !(k.min_rho > cfg.min_rho) {
        return Err(CurvError::domain(format!("initial profile reaches below min_rho ({:e})", k.min_rho)));
    }

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        wvol: Vec::new(),
        sup_dev: Vec::new(),
        step_stats: StepStats::default(),
        termination: Termination::Completed,
        eta,
    };
    let record = |traj: &mut Trajectory, t: f64, y: &[f64]| -> Result<()> {
        let u = lift(y)?;
        traj.wvol.push(weighted_volume_raw(&u, n, w, &g)?);
        let dev = g.project_meanzero(&u).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        // deviations at the rounding level of the profile are recorded as zero
        let floor = 16.0 * f64::EPSILON * u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        traj.sup_dev.push(if dev <= floor { 0.0 } else { dev });
        traj.times.push(t);
        traj.states.push(RadialProfile::new(n, cfg.d, u)?);
        Ok(())
    };
    record(&mut traj, 0.0, &y)?;

    let h0 = rk::initial_step(&y, &k.dy, cfg.rtol, cfg.atol, 5.0, cfg.record_every.min(cfg.t_end));
    let imex = cfg.uses_imex();
    let mut dp = DormandPrince::new(h0, cfg.rtol, cfg.atol);
    let stiff = if imex {
        let p = speed.eta_profile(eta)?;
        p.fn_.max(0.0)
    } else {
        0.0
    };
    let mut ars = ImexArs222::new(h0, cfg.rtol, cfg.atol, stiff);
    let d2 = |v: &[f64]| g.second_derivative(v);
    let resolve = |v: &[f64], a: f64| g.resolvent(v, a);

    let mut t = 0.0;
    let mut next_index = 1usize;
    let n_records = (cfg.t_end / cfg.record_every).ceil() as usize;
    let record_time = |i: usize| if i >= n_records { cfg.t_end } else { i as f64 * cfg.record_every };
    let steps_total = |s: &StepStats| s.accepted + s.rejected;

    while t < cfg.t_end {
        let target = record_time(next_index);
        let h_cap = target - t;
        let attempt = if imex {
            ars.attempt(&mut rhs, &d2, &resolve, &y, &k, h_cap)
        } else {
            dp.attempt(&mut rhs, &y, &k, h_cap)
        };
        match attempt {
            Attempt::Accepted { y: y_new, at_new, h } => {
                traj.step_stats.accepted += 1;
                let hit = h >= h_cap;
                t = if hit { target } else { t + h };
                y = y_new;
                k = at_new;
                let event = if k.min_rho <= cfg.min_rho {
                    Some(Termination::MinRho)
                } else if k.min_xi <= 0.0 {
                    Some(Termination::XiNonpositive)
                } else {
                    None
                };
                if hit || event.is_some() {
                    record(&mut traj, t, &y)?;
                    if hit {
                        next_index += 1;
                    }
                }
                if let Some(e) = event {
                    traj.termination = e;
                    return Ok(traj);
                }
            }
            Attempt::Rejected => traj.step_stats.rejected += 1,
        }
        let h_next = if imex { ars.ctl.h } else { dp.ctl.h };
        let underflow = h_next < 1e-14 * t.abs().max(cfg.record_every);
        if underflow || steps_total(&traj.step_stats) >= cfg.max_steps {
            let reason = if underflow {
                format!("step size underflow (h = {h_next:e})")
            } else {
                format!("step budget of {} exhausted", cfg.max_steps)
            };
            return Err(CurvError::Integration { reason, time: t, last_state: lift(&y).unwrap_or(y) });
        }
    }
    Ok(traj)
}

/// `max_j |wvol_j - wvol_0| / |wvol_0|`.
pub fn conservation_drift(t: &Trajectory) -> Result<f64> {
    let w0 = *t.wvol.first().ok_or_else(|| CurvError::InsufficientData("empty trajectory".into()))?;
    Ok(t.wvol.iter().fold(0.0f64, |m, w| m.max((w - w0).abs())) / w0.abs())
}

/// Least-squares fit of `log sup_dev = rate t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log fit.
    pub residual: f64,
    pub samples: usize,
}

pub fn decay_rate_fit(t: &Trajectory, window: (f64, f64)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = t
        .times
        .iter()
        .zip(&t.sup_dev)
        .filter(|(&ti, &s)| ti >= window.0 && ti <= window.1 && s > 0.0)
        .map(|(&ti, &s)| (ti, s.ln()))
        .collect();
    fit_line(&pts)
}

fn fit_line(pts: &[(f64, f64)]) -> Result<RateFit> {
    if pts.len() < 5 {
        return Err(CurvError::InsufficientData(format!("{} positive samples in the fit window, need 5", pts.len())));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    if sxx == 0.0 {
        return Err(CurvError::InsufficientData("fit window has a single time".into()));
    }
    let rate = sxy / sxx;
    let intercept = ym - rate * tm;
    let residual = (pts.iter().map(|p| (p.1 - intercept - rate * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(RateFit { rate, intercept, residual, samples: pts.len() })
}

/// Sup over the common recorded times of `|u_full - psi(ubar_reduced, eta)|`.
pub fn equivalence_check(cfg: &FlowConfig) -> Result<f64> {
    let mut full = cfg.clone();
    full.mode = FlowMode::Full;
    let mut reduced = cfg.clone();
    reduced.mode = FlowMode::Reduced;
    let (a, b) = rayon::join(|| integrate(&full), || integrate(&reduced));
    let (a, b) = (a?, b?);
    let mut sup = 0.0f64;
    for ((ta, pa), (tb, pb)) in a.times.iter().zip(&a.states).zip(b.times.iter().zip(&b.states)) {
        if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
            return Err(CurvError::domain(format!("record times diverged ({ta} vs {tb})")));
        }
        for (x, y) in pa.values().iter().zip(pb.values()) {
            sup = sup.max((x - y).abs());
        }
    }
    Ok(sup)
}
