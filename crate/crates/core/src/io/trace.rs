use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::driver::{IterateRecord, SolveReport};
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "iter,t,f,norm_Gf,lambda_pred,eta,inner_iters,cum_fev,cum_gev,cum_prox,elapsed_sec";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub status: String,
    pub f_final: f64,
    #[serde(rename = "norm_Gf_final")]
    pub norm_gf_final: f64,
    pub method: String,
    pub policy: String,
    pub seed: u64,
    pub wall_sec: f64,
}

impl TraceSummary {
    pub fn from_report(report: &SolveReport) -> Self {
        TraceSummary {
            status: report.status.to_string(),
            f_final: report.f_final,
            norm_gf_final: report.norm_gf_final,
            method: report.method.to_string(),
            policy: report.policy.to_string(),
            seed: report.seed,
            wall_sec: report.wall_sec,
        }
    }
}

fn row(r: &IterateRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        r.iter,
        format_real(r.t),
        format_real(r.f),
        format_real(r.norm_gf),
        format_real(r.lambda_pred),
        format_real(r.eta),
        r.inner_iters,
        r.cum_fev,
        r.cum_gev,
        r.cum_prox,
        format_real(r.elapsed_sec),
    )
}

/// Writes the CSV trace only.
pub fn write_trace_to<W: Write>(mut out: W, trace: &[IterateRecord]) -> std::io::Result<()> {
    let mut text = String::with_capacity(64 * (trace.len() + 1));
    text.push_str(TRACE_HEADER);
    text.push('\n');
    for r in trace {
        text.push_str(&row(r));
    }
    out.write_all(text.as_bytes())
}

/// `run.csv` -> `run.json`.
pub fn summary_path(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("json")
}

/// Writes the CSV trace to `path` and the JSON summary next to it.
pub fn write_trace(report: &SolveReport, path: &Path) -> Result<()> {
    let mut csv = Vec::new();
    write_trace_to(&mut csv, &report.trace).map_err(|e| Error::io(path, e))?;
    fs::write(path, csv).map_err(|e| Error::io(path, e))?;
    let json_path = summary_path(path);
    let json = serde_json::to_string_pretty(&TraceSummary::from_report(report))?;
    fs::write(&json_path, json + "\n").map_err(|e| Error::io(json_path, e))?;
    Ok(())
}
