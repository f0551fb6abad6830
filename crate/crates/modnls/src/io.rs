//! CSV and manifest output. Numeric columns are printed with 15 significant
//! digits; repeated runs with fixed seeds produce byte-identical numeric
//! content at any parallelism degree.

use crate::error::Result;
use crate::experiments::{MartingaleDiagnostic, SchemeSweep};
use crate::integrators::TrajectoryResult;
use crate::modulation::ModulationPath;
use crate::scalar::Scalar;
use crate::spectral::{transform_inverse, SpectralField};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

fn sig15(x: f64) -> String {
    format!("{:.14e}", x)
}

/// Snapshot of a d = 1 field: CSV with columns (index, x, Re u, Im u).
pub fn write_field_snapshot<T: Scalar>(path: &Path, field: &SpectralField<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "index,x,re_u,im_u")?;
    let values = transform_inverse(field);
    for (j, v) in values.iter().enumerate() {
        let x = field.grid().node(j % field.grid().modes_per_axis());
        writeln!(
            w,
            "{},{},{},{}",
            j,
            sig15(x.as_f64()),
            sig15(v.re.as_f64()),
            sig15(v.im.as_f64())
        )?;
    }
    Ok(())
}

/// Per-step norm log: (step, t, H⁰ norm, H¹ norm, consumed ξ). The ξ column
/// is empty for deterministic schemes.
pub fn write_norm_log<T: Scalar>(path: &Path, trajectory: &TrajectoryResult<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "step,t,h0_norm,h1_norm,xi")?;
    let norms = trajectory
        .norms
        .as_ref()
        .expect("trajectory was run with store_norms");
    for (n, (h0, h1)) in norms.iter().enumerate() {
        let xi = if n >= 1 && n <= trajectory.consumed_xi.len() {
            sig15(trajectory.consumed_xi[n - 1].as_f64())
        } else {
            String::new()
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            n,
            sig15(trajectory.times[n].as_f64()),
            sig15(h0.as_f64()),
            sig15(h1.as_f64()),
            xi
        )?;
    }
    Ok(())
}

/// Modulation path sampled on an equidistant output grid: (t, g(t)).
pub fn write_modulation_csv<T: Scalar>(
    path: &Path,
    g: &ModulationPath<T>,
    t_end: T,
    points: usize,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,g")?;
    for j in 0..=points {
        let t = t_end * T::from_count(j) / T::from_count(points);
        writeln!(w, "{},{}", sig15(t.as_f64()), sig15(g.evaluate(t)?.as_f64()))?;
    }
    Ok(())
}

/// Sweep results: one row per (scheme, τ).
pub fn write_sweep_csv<T: Scalar>(path: &Path, sweeps: &[SchemeSweep<T>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "scheme,tau,n_steps,m,rms_error,stddev,excluded_count")?;
    for sweep in sweeps {
        for r in &sweep.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.scheme.label(),
                sig15(r.tau.as_f64()),
                r.n_steps,
                r.m,
                sig15(r.rms.as_f64()),
                sig15(r.stddev.as_f64()),
                r.excluded
            )?;
        }
    }
    Ok(())
}

/// Plot-ready (log τ, log error) rows per scheme.
pub fn write_loglog_csv<T: Scalar>(path: &Path, sweeps: &[SchemeSweep<T>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "scheme,log_tau,log_error")?;
    for sweep in sweeps {
        for r in &sweep.records {
            if r.rms > T::zero() {
                writeln!(
                    w,
                    "{},{},{}",
                    r.scheme.label(),
                    sig15(r.tau.as_f64().ln()),
                    sig15(r.rms.as_f64().ln())
                )?;
            }
        }
    }
    Ok(())
}

/// Martingale diagnostic partial sums: (steps, rms_error).
pub fn write_partial_sums_csv<T: Scalar>(
    path: &Path,
    diagnostic: &MartingaleDiagnostic<T>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "steps,rms_partial_sum")?;
    for (m, v) in diagnostic.partial_sum_rms.iter().enumerate() {
        writeln!(w, "{},{}", m, sig15(v.as_f64()))?;
    }
    Ok(())
}

/// Serialize any manifest record as pretty JSON.
pub fn write_manifest<S: Serialize>(path: &Path, manifest: &S) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| crate::error::Error::Config(format!("manifest serialization: {e}")))?;
    w.write_all(text.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}
