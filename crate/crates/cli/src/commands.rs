use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use curvlab::export::{write_bifurcation, write_profile, write_stability_table, write_trajectory};
use curvlab::flow::{conservation_drift, decay_rate_fit};
use curvlab::speed::TabulatedSpeed;
use curvlab::stability::{analyze, linear_eigenvalue, stability_table};
use curvlab::unduloid::{default_s_grid, eta_curve_sweep, profile, UnduloidParams};
use curvlab::verify::{run_suite, Suite};
use curvlab::{integrate, CurvError, CylinderSpeed, RadialProfile, Termination, Trajectory};

use crate::config::{self, RunKind, Scenario, SpeedSource};
use crate::error::CliError;
use crate::manifest::{manifest_path_for, RunManifest};

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> curvlab::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn json_bytes(v: &Value) -> Result<Vec<u8>, CliError> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    b.push(b'\n');
    Ok(b)
}

/// Single-file commands: to `out` with a sidecar manifest, or to stdout.
fn emit_single(mut manifest: RunManifest, out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => {
            manifest.emit(p, bytes)?;
            manifest.save(&manifest_path_for(p))
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn profile_bytes(p: &RadialProfile) -> Result<Vec<u8>, CliError> {
    csv_bytes(|b| write_profile(p, b))
}

pub fn simulate(config_path: &Path, out: &Path) -> Result<(), CliError> {
    let sc = config::load(config_path)?;
    let mut manifest = RunManifest::new("simulate");
    manifest.param("config", config_path.display());
    for (k, v) in &sc.raw {
        manifest.param(&format!("config.{k}"), v);
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let result = match sc.run {
        RunKind::Analysis => simulate_analysis(&sc, out, &mut manifest),
        RunKind::Flow => simulate_flow(&sc, out, &mut manifest),
    };
    // the manifest is written even when the run stops early
    manifest.save(&out.join("manifest.json"))?;
    result
}

fn simulate_analysis(sc: &Scenario, out: &Path, manifest: &mut RunManifest) -> Result<(), CliError> {
    let (n, d) = (sc.flow.n_dim, sc.flow.d);
    let speed: Box<dyn CylinderSpeed> = match &sc.speed {
        SpeedSource::Preset(p) => p.build(n, d)?,
        SpeedSource::Table(path) => Box::new(TabulatedSpeed::from_csv_path(n, path)?),
    };
    let bracket = match (&sc.eta_bracket, &sc.speed) {
        (Some(b), _) => *b,
        (None, SpeedSource::Table(path)) => TabulatedSpeed::from_csv_path(n, path)?.eta_range(),
        (None, SpeedSource::Preset(_)) => (1e-3, 1e3),
    };
    let report = analyze(speed.as_ref(), &sc.flow.weight, d, bracket, 5)?;
    let v = json!({ "kind": "analysis", "eta_bracket": [bracket.0, bracket.1], "analysis": report });
    manifest.emit(&out.join("report.json"), &json_bytes(&v)?)
}

fn default_window(t: &Trajectory) -> (f64, f64) {
    let end = t.times.last().copied().unwrap_or(0.0);
    (0.3 * end, end)
}

/// Linear prediction vs. the fitted exponential rate.
fn flow_report(sc: &Scenario, t: &Trajectory) -> Result<Value, CliError> {
    let cfg = &sc.flow;
    let speed = cfg.speed_model()?;
    let lambda1 = linear_eigenvalue(1, t.eta, speed.as_ref(), cfg.n_dim, cfg.d)?;
    let drift = conservation_drift(t)?;
    let window = sc.decay_window.unwrap_or_else(|| default_window(t));
    let stationary = t.sup_dev.iter().all(|&s| s == 0.0);
    let fit = decay_rate_fit(t, window);
    let (fit_json, verdict, rel_err) = match (&fit, stationary) {
        (_, true) => (Value::Null, "stationary", Value::Null),
        (Ok(f), false) => {
            let rel = (f.rate - lambda1).abs() / lambda1.abs();
            let verdict = if f.rate.signum() != lambda1.signum() {
                "inconsistent"
            } else if rel <= 0.05 {
                "consistent"
            } else {
                "sign-only"
            };
            (serde_json::to_value(f).map_err(|e| CliError::Io(e.to_string()))?, verdict, json!(rel))
        }
        (Err(_), false) => (Value::Null, "undetermined", Value::Null),
    };
    let mut provenance = BTreeMap::new();
    provenance.insert("wvol_drift", "max over recorded samples of |wvol - wvol(0)| / |wvol(0)|");
    provenance.insert("eta", "curvature of the cylinder with the initial weighted volume, by Brent root");
    provenance.insert("lambda1", "closed-form first eigenvalue of the linearization at eta");
    provenance.insert("decay_fit", "least-squares slope of log sup_dev over decay_window");
    provenance.insert("sup_dev", "sup of the mean-free part of the profile, rounding noise recorded as 0");
    provenance.insert("verdict", "consistent: same sign and within 5% of lambda1; sign-only: same sign");
    Ok(json!({
        "kind": "flow",
        "termination": t.termination.as_str(),
        "t_final": t.times.last(),
        "records": t.times.len(),
        "steps": t.step_stats,
        "eta": t.eta,
        "wvol_drift": drift,
        "lambda1": lambda1,
        "predicted": if lambda1 < 0.0 { "decay" } else { "growth" },
        "decay_window": [window.0, window.1],
        "decay_fit": fit_json,
        "decay_fit_error": fit.as_ref().err().map(|e| e.to_string()),
        "decay_rate_relative_error": rel_err,
        "verdict": verdict,
        "config": cfg,
        "provenance": provenance,
    }))
}

fn simulate_flow(sc: &Scenario, out: &Path, manifest: &mut RunManifest) -> Result<(), CliError> {
    let cfg = &sc.flow;
    let traj = match integrate(cfg) {
        Ok(t) => t,
        Err(CurvError::Integration { reason, time, last_state }) => {
            let v = json!({
                "kind": "flow",
                "termination": "integration-failure",
                "reason": reason,
                "time": time,
                "config": cfg,
            });
            manifest.emit(&out.join("report.json"), &json_bytes(&v)?)?;
            if let Ok(p) = RadialProfile::new(cfg.n_dim, cfg.d, last_state) {
                manifest.emit(&out.join("profile_final.csv"), &profile_bytes(&p)?)?;
            }
            return Err(CliError::Stopped { reason, time });
        }
        Err(e) => return Err(e.into()),
    };
    manifest.emit(&out.join("trajectory.csv"), &csv_bytes(|b| write_trajectory(&traj, b))?)?;
    if sc.profile_every > 0 {
        for (i, p) in traj.states.iter().enumerate().step_by(sc.profile_every) {
            manifest.emit(&out.join(format!("profile_{i:05}.csv")), &profile_bytes(p)?)?;
        }
    }
    if let Some(last) = traj.states.last() {
        manifest.emit(&out.join("profile_final.csv"), &profile_bytes(last)?)?;
    }
    let report = match flow_report(sc, &traj) {
        Ok(r) => r,
        Err(e) if traj.termination != Termination::Completed => json!({
            "kind": "flow",
            "termination": traj.termination.as_str(),
            "t_final": traj.times.last(),
            "report_error": e.to_string(),
            "config": cfg,
        }),
        Err(e) => return Err(e),
    };
    manifest.emit(&out.join("report.json"), &json_bytes(&report)?)?;
    match traj.termination {
        Termination::Completed => Ok(()),
        other => Err(CliError::Stopped {
            reason: other.as_str().to_string(),
            time: traj.times.last().copied().unwrap_or(0.0),
        }),
    }
}

pub fn bifurcation(n: usize, b: usize, samples: usize, d: f64, out: Option<&Path>) -> Result<(), CliError> {
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
    }
    if b > n - 1 {
        return Err(CliError::Usage(format!("--b must satisfy 0 <= b <= n - 1 = {}, got {b}", n - 1)));
    }
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let grid = default_s_grid(samples);
    let rows: Vec<(f64, curvlab::Result<_>)> = grid.iter().copied().zip(eta_curve_sweep(n, b, d, &grid)).collect();
    let failed: Vec<String> =
        rows.iter().filter_map(|(s, r)| r.as_ref().err().map(|e| format!("s = {s}: {e}"))).collect();
    for f in &failed {
        eprintln!("warning: {f}");
    }
    let bytes = csv_bytes(|buf| write_bifurcation(&rows, buf))?;
    let mut m = RunManifest::new("bifurcation");
    m.param("n", n).param("b", b).param("samples", samples).param("d", d).param("failed_rows", failed.len());
    emit_single(m, out, &bytes)
}

pub fn stability(n_max: usize, b_max: usize, out: Option<&Path>) -> Result<(), CliError> {
    let rows = stability_table(n_max, b_max)?;
    let bytes = csv_bytes(|buf| write_stability_table(&rows, buf))?;
    let mut m = RunManifest::new("stability-table");
    m.param("n_max", n_max).param("b_max", b_max);
    emit_single(m, out, &bytes)
}

pub fn unduloid(n: usize, s: f64, d: f64, nodes: usize, out: Option<&Path>) -> Result<(), CliError> {
    let p = UnduloidParams::new(n, d, s)?;
    let prof = profile(&p, nodes)?;
    let bytes = profile_bytes(&prof)?;
    let mut m = RunManifest::new("unduloid");
    m.param("n", n).param("s", s).param("d", d).param("nodes", nodes);
    emit_single(m, out, &bytes)
}

pub fn verify(suite: &str, seed: u64, out: Option<&PathBuf>) -> Result<bool, CliError> {
    let suite: Suite = suite.parse().map_err(|e: CurvError| CliError::Usage(e.to_string()))?;
    let report = run_suite(suite, seed);
    for r in &report.results {
        println!("{r}");
    }
    let passed = report.results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", report.results.len());
    if let Some(p) = out {
        let v = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
        let mut m = RunManifest::new("verify");
        m.param("suite", suite);
        m.seed = Some(seed);
        m.emit(p, &json_bytes(&v)?)?;
        m.save(&manifest_path_for(p))?;
    }
    Ok(report.all_passed)
}
