//! JSON and CSV rendering. Reals in CSV use 17 significant digits.

use std::io::Write;

use hybrid_lattice::cbc::GeneratingVectorRecord;
use hybrid_lattice::wce::ErrorBreakdown;

use crate::commands::{AdviceReport, ConvergenceReport, ErrorReport};
use crate::error::Result;

/// Header of the convergence table.
pub const CONVERGENCE_HEADER: [&str; 7] = [
    "N",
    "d_used",
    "exact_total",
    "mc_term",
    "lattice_term",
    "theorem1_bound",
    "wallclock_ms",
];

/// Prefix of the trailing line carrying the fitted slope.
pub const SLOPE_PREFIX: &str = "# fitted_slope=";

/// A real with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn json<T: serde::Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn construct_csv<W: Write>(rec: &GeneratingVectorRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["j", "z", "error_trace"])?;
    for (j, (z, e)) in rec.z.iter().zip(&rec.error_trace).enumerate() {
        w.write_record([(j + 1).to_string(), z.to_string(), real(*e)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn error_csv<W: Write>(report: &ErrorReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["record", "mc_term", "lattice_term", "total", "std_error", "z_score"])?;
    let mut breakdown = |name: &str, b: &ErrorBreakdown| {
        w.write_record([
            name.to_string(),
            real(b.mc_term),
            real(b.lattice_term),
            real(b.total),
            String::new(),
            String::new(),
        ])
    };
    if let Some(b) = &report.concatenated {
        breakdown("concatenated", b)?;
    }
    if let Some(b) = &report.truncated {
        breakdown("truncated", b)?;
    }
    if let Some(p) = &report.pure_mc {
        breakdown("pure_mc_extension", &p.breakdown)?;
    }
    if let Some(e) = &report.empirical {
        w.write_record([
            "empirical".to_string(),
            String::new(),
            String::new(),
            real(e.mean),
            real(e.std_error),
            real(e.z_score),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn convergence_csv<W: Write>(report: &ConvergenceReport, mut out: W) -> Result<()> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(CONVERGENCE_HEADER)?;
        for r in &report.rows {
            w.write_record([
                r.n.to_string(),
                r.d_used.to_string(),
                real(r.exact_total),
                real(r.mc_term),
                real(r.lattice_term),
                real(r.theorem1_bound),
                real(r.wallclock_ms),
            ])?;
        }
        w.flush()?;
    }
    writeln!(out, "{SLOPE_PREFIX}{}", real(report.fitted_slope))?;
    Ok(())
}

pub fn advise_csv<W: Write>(report: &AdviceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "N",
        "d_concat",
        "d_truncated",
        "cost_concat",
        "cost_truncated",
        "reduced_cost",
        "reduced_estimate",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.n.to_string(),
            r.d_concat.to_string(),
            r.d_truncated.to_string(),
            r.cost_concat.to_string(),
            r.cost_truncated.to_string(),
            r.reduced.as_ref().map(|x| x.cost.to_string()).unwrap_or_default(),
            opt_real(r.reduced.as_ref().and_then(|x| x.estimate)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
