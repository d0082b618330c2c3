//! Flat `key = value` scenario files for `simulate`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use curvlab::flow::{FlowConfig, FlowMode, InitialFamily, Integrator, RadiusSpec};
use curvlab::{DiffMode, SpeedSpec, WeightModel};

use crate::error::CliError;

const KEYS: &[&str] = &[
    "n",
    "d",
    "N",
    "nodes",
    "speed",
    "weight",
    "initial",
    "radius",
    "radius_factor",
    "s",
    "modes",
    "t_end",
    "rtol",
    "atol",
    "mode",
    "record_every",
    "min_rho",
    "diff",
    "integrator",
    "max_steps",
    "decay_window",
    "profile_every",
    "run",
    "eta_bracket",
];

/// What `simulate` does with the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Flow,
    /// Stability analysis of the critical cylinder only; the one option for tabulated speeds.
    Analysis,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpeedSource {
    Preset(SpeedSpec),
    Table(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub flow: FlowConfig,
    pub speed: SpeedSource,
    pub run: RunKind,
    pub decay_window: Option<(f64, f64)>,
    /// Write every k-th recorded profile; 0 keeps only the final one.
    pub profile_every: usize,
    pub eta_bracket: Option<(f64, f64)>,
    /// Every key as written, for the manifest.
    pub raw: BTreeMap<String, String>,
}

/// Splits the text into keys and values, rejecting unknown and repeated keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(p) => &line[..p],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config {
                key: line.to_string(),
                msg: format!("line {} is not of the form key = value", i + 1),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(CliError::Config { key: k.into(), msg: "unknown key".into() });
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Config { key: k.into(), msg: format!("repeated on line {}", i + 1) });
        }
    }
    Ok(out)
}

fn bad(key: &str, msg: impl Into<String>) -> CliError {
    CliError::Config { key: key.into(), msg: msg.into() }
}

fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    map.get(key).map(|v| v.parse::<T>().map_err(|_| bad(key, format!("cannot parse '{v}'")))).transpose()
}

fn pair(map: &BTreeMap<String, String>, key: &str) -> Result<Option<(f64, f64)>, CliError> {
    let Some(v) = map.get(key) else { return Ok(None) };
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) if a < b => Ok(Some((a, b))),
            _ => Err(bad(key, format!("expected 'lo, hi' with lo < hi, got '{v}'"))),
        },
        _ => Err(bad(key, format!("expected 'lo, hi', got '{v}'"))),
    }
}

/// `"1:0.05, 2:-0.01"` into `[(1, 0.05), (2, -0.01)]`.
fn modes(v: &str) -> Result<Vec<(usize, f64)>, CliError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|item| {
            let (m, e) =
                item.split_once(':').ok_or_else(|| bad("modes", format!("expected m:eps, got '{}'", item.trim())))?;
            let m: usize = m.trim().parse().map_err(|_| bad("modes", format!("bad mode number '{}'", m.trim())))?;
            let e: f64 = e.trim().parse().map_err(|_| bad("modes", format!("bad amplitude '{}'", e.trim())))?;
            if m == 0 {
                return Err(bad("modes", "mode numbers start at 1"));
            }
            Ok((m, e))
        })
        .collect()
}

/// `volume`, `mixed-volume:b` or `coeffs:c0,c1,...`.
pub fn parse_weight(v: &str) -> Result<WeightModel, CliError> {
    if v == "volume" {
        return Ok(WeightModel::constant());
    }
    if let Some(b) = v.strip_prefix("mixed-volume:") {
        let b: usize = b.trim().parse().map_err(|_| bad("weight", format!("bad index in '{v}'")))?;
        return Ok(WeightModel::mixed_volume(b));
    }
    if let Some(c) = v.strip_prefix("coeffs:") {
        let cs: Result<Vec<f64>, _> = c.split(',').map(|x| x.trim().parse::<f64>()).collect();
        let cs = cs.map_err(|_| bad("weight", format!("bad coefficient list in '{v}'")))?;
        return WeightModel::new(cs).map_err(|e| bad("weight", e.to_string()));
    }
    Err(bad("weight", format!("expected volume, mixed-volume:b or coeffs:..., got '{v}'")))
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    from_text(&text, base)
}

pub fn from_text(text: &str, base: &Path) -> Result<Scenario, CliError> {
    let map = parse_pairs(text)?;
    if map.contains_key("N") && map.contains_key("nodes") {
        return Err(bad("nodes", "give either N or nodes, not both"));
    }
    let n: usize = num(&map, "n")?.unwrap_or(2);
    let d: f64 = num(&map, "d")?.unwrap_or(1.0);
    let nodes: usize = match num(&map, "N")? {
        Some(v) => v,
        None => num(&map, "nodes")?.unwrap_or(128),
    };

    let speed_text = map.get("speed").cloned().unwrap_or_else(|| "mean-curvature".into());
    let speed = match speed_text.strip_prefix("table:") {
        Some(p) => SpeedSource::Table(base.join(p.trim())),
        None => SpeedSource::Preset(speed_text.parse().map_err(|e: curvlab::CurvError| bad("speed", e.to_string()))?),
    };
    let run = match map.get("run").map(String::as_str) {
        None | Some("flow") => RunKind::Flow,
        Some("analysis") => RunKind::Analysis,
        Some(o) => return Err(bad("run", format!("expected flow or analysis, got '{o}'"))),
    };
    if run == RunKind::Flow && matches!(speed, SpeedSource::Table(_)) {
        return Err(bad("speed", "tabulated speeds only support run = analysis"));
    }

    let weight = match map.get("weight") {
        Some(v) => parse_weight(v)?,
        None => WeightModel::constant(),
    };
    weight.validate_for(n).map_err(|e| bad("weight", e.to_string()))?;

    let mode_list = match map.get("modes") {
        Some(v) => modes(v)?,
        None => Vec::new(),
    };
    let initial = match map.get("initial").map(String::as_str).unwrap_or("cylinder") {
        "cylinder" => {
            let radius = match (num::<f64>(&map, "radius")?, num::<f64>(&map, "radius_factor")?) {
                (Some(_), Some(_)) => return Err(bad("radius_factor", "give either radius or radius_factor")),
                (Some(r), None) => RadiusSpec::Absolute(r),
                (None, Some(f)) => RadiusSpec::CriticalMultiple(f),
                (None, None) => RadiusSpec::CriticalMultiple(1.2),
            };
            if map.contains_key("s") {
                return Err(bad("s", "only used with initial = unduloid"));
            }
            InitialFamily::Cylinder { radius, modes: mode_list }
        }
        "unduloid" => {
            let s = num(&map, "s")?.ok_or_else(|| bad("s", "required with initial = unduloid"))?;
            for k in ["radius", "radius_factor"] {
                if map.contains_key(k) {
                    return Err(bad(k, "not used with initial = unduloid"));
                }
            }
            InitialFamily::Unduloid { s, modes: mode_list }
        }
        o => return Err(bad("initial", format!("expected cylinder or unduloid, got '{o}'"))),
    };

    let mut flow = FlowConfig::new(n, d, nodes, initial);
    flow.speed = speed_text.clone();
    flow.weight = weight;
    if let Some(v) = num(&map, "t_end")? {
        flow.t_end = v;
    }
    if let Some(v) = num(&map, "rtol")? {
        flow.rtol = v;
    }
    if let Some(v) = num(&map, "atol")? {
        flow.atol = v;
    }
    if let Some(v) = num(&map, "record_every")? {
        flow.record_every = v;
    }
    if let Some(v) = num(&map, "min_rho")? {
        flow.min_rho = v;
    }
    if let Some(v) = num(&map, "max_steps")? {
        flow.max_steps = v;
    }
    flow.mode = match map.get("mode").map(String::as_str) {
        None | Some("full") => FlowMode::Full,
        Some("reduced") => FlowMode::Reduced,
        Some(o) => return Err(bad("mode", format!("expected full or reduced, got '{o}'"))),
    };
    flow.diff = match map.get("diff").map(String::as_str) {
        None | Some("spectral") => DiffMode::SpectralCosine,
        Some("fd4") => DiffMode::FiniteDifference4,
        Some(o) => return Err(bad("diff", format!("expected spectral or fd4, got '{o}'"))),
    };
    flow.integrator = match map.get("integrator").map(String::as_str) {
        None | Some("auto") => Integrator::Auto,
        Some("dp54") => Integrator::DormandPrince,
        Some("imex") => Integrator::Imex,
        Some(o) => return Err(bad("integrator", format!("expected auto, dp54 or imex, got '{o}'"))),
    };

    // checks that depend on one key each, reported under that key
    let checks: [(&str, bool); 7] = [
        ("n", n >= 2),
        ("d", d.is_finite() && d > 0.0),
        (if map.contains_key("N") { "N" } else { "nodes" }, nodes >= curvlab::grid::MIN_NODES),
        ("t_end", flow.t_end.is_finite() && flow.t_end > 0.0),
        ("rtol", flow.rtol > 1e-14 && flow.rtol < 1e-2),
        ("atol", flow.atol > 1e-14 && flow.atol < 1e-2),
        ("record_every", flow.record_every.is_finite() && flow.record_every > 0.0),
    ];
    for (key, ok) in checks {
        if !ok {
            return Err(bad(
                key,
                format!("value '{}' is out of range", map.get(key).map(String::as_str).unwrap_or("")),
            ));
        }
    }
    if !(flow.min_rho.is_finite() && flow.min_rho > 0.0) {
        return Err(bad("min_rho", "must be positive"));
    }
    if let SpeedSource::Preset(p) = &speed {
        p.build(n, d).map_err(|e| bad("speed", e.to_string()))?;
    }

    let decay_window = pair(&map, "decay_window")?;
    let eta_bracket = pair(&map, "eta_bracket")?;
    if let Some((lo, _)) = eta_bracket {
        if lo <= 0.0 {
            return Err(bad("eta_bracket", "must be positive"));
        }
    }
    Ok(Scenario {
        flow,
        speed,
        run,
        decay_window,
        profile_every: num(&map, "profile_every")?.unwrap_or(0),
        eta_bracket,
        raw: map,
    })
}
