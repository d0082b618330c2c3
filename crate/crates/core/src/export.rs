//! CSV writers for trajectories, profiles, bifurcation curves and stability tables.
//!
//! Floats are written with 17 significant digits so that they read back bit-exactly.

use std::io::Write;

use crate::error::Result;
use crate::flow::Trajectory;
use crate::geometry::RadialProfile;
use crate::stability::StabilityRow;
use crate::unduloid::BifurcationSample;

/// Shortest scientific form carrying 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out)
}

pub fn write_trajectory<W: Write>(t: &Trajectory, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["time", "wvol", "sup_dev"])?;
    for i in 0..t.times.len() {
        w.write_record([fmt_f64(t.times[i]), fmt_f64(t.wvol[i]), fmt_f64(t.sup_dev[i])])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile<W: Write>(p: &RadialProfile, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["z", "rho"])?;
    let h = p.d() / (p.len() - 1) as f64;
    for (j, v) in p.values().iter().enumerate() {
        let z = if j + 1 == p.len() { p.d() } else { j as f64 * h };
        w.write_record([fmt_f64(z), fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per sample; a failed sample keeps its `s` and carries `NaN` elsewhere.
pub fn write_bifurcation<W: Write>(rows: &[(f64, Result<BifurcationSample>)], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["s", "eta", "eta_bar", "rho0", "H", "err_estimate"])?;
    for (s, r) in rows {
        let rec = match r {
            Ok(b) => [b.s, b.eta, b.eta_bar, b.rho0, b.h, b.quadrature_error_estimate],
            Err(_) => [*s, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN],
        };
        w.write_record(rec.iter().map(|x| fmt_f64(*x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_stability_table<W: Write>(rows: &[StabilityRow], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["n", "b", "condition_value_num", "condition_value_den", "stable"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.b.to_string(),
            r.condition_value_num.to_string(),
            r.condition_value_den.to_string(),
            r.stable.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
