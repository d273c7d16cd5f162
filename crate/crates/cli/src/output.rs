//! CSV and JSON writers. Both embed the resolved config: JSON under
//! `"config"`, CSV as a leading `# config: {...}` comment line.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use hbgic_core::region::csv_float;
use hbgic_core::sim::{Estimate, SimResult};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn json_document(command: &str, config: &Value, result: &impl Serialize) -> Result<String, CliError> {
    let doc = serde_json::json!({
        "command": command,
        "config": config,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn csv_document<R: Serialize>(config: &Value, rows: impl IntoIterator<Item = R>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    writeln!(buf, "# config: {config}").map_err(|e| CliError::Internal(e.to_string()))?;
    let mut w = csv::Writer::from_writer(buf);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

#[derive(Debug, Serialize)]
pub struct P2pCsvRow {
    pub n: u64,
    #[serde(with = "csv_float")]
    pub snr: f64,
    #[serde(with = "csv_float")]
    pub eps: f64,
    #[serde(with = "csv_float")]
    pub rate: f64,
    #[serde(with = "csv_float")]
    pub capacity: f64,
    #[serde(with = "csv_float")]
    pub dispersion: f64,
}

#[derive(Debug, Serialize)]
pub struct EdMinCsvRow {
    #[serde(with = "csv_float")]
    pub a21: f64,
    pub n1: u64,
    pub n2: u64,
    pub n1_tilde: u64,
    #[serde(with = "csv_float")]
    pub real_bound: f64,
    pub feasible: bool,
    pub margin: i64,
}

/// One CSV record per simulator metric.
#[derive(Debug, Serialize)]
pub struct SimCsvRow {
    pub metric: &'static str,
    pub count: u64,
    pub trials: u64,
    #[serde(with = "csv_float")]
    pub rate: f64,
    #[serde(with = "csv_float")]
    pub ci_low: f64,
    #[serde(with = "csv_float")]
    pub ci_high: f64,
}

pub fn sim_rows(r: &SimResult) -> Vec<SimCsvRow> {
    let row = |metric, e: &Estimate| SimCsvRow {
        metric,
        count: e.count,
        trials: e.trials,
        rate: e.rate,
        ci_low: e.ci_low,
        ci_high: e.ci_high,
    };
    vec![
        row("err_total", &r.err_total),
        row("err_user1", &r.err_user1),
        row("err_user2", &r.err_user2),
        row("err_sic11", &r.err_sic11),
        row("err_sic12", &r.err_sic12),
        row("err_sic21", &r.err_sic21),
        row("err_sic22", &r.err_sic22),
        row("power_violation_rate", &r.power_violation_rate),
        row("err_total_with_power_violations", &r.err_total_with_power_violations),
    ]
}
