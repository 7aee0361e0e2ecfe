//! Output writers: CSV tables with fixed headers and 15-significant-digit
//! scientific formatting, and JSON reports tagged with a result anchor.

use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;

use crate::decay::LpqlrReport;
use crate::energy::{PointwiseReport, SearchReport};
use crate::error::{Error, Result};
use crate::solver::MonitorRow;
use crate::system::SpectrumScan;

/// 15 significant digits, scientific notation.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.14e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Config(format!(
                "row width {} does not match header width {}",
                row.len(),
                header.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|&v| fmt_sci(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

pub fn monitors_csv(path: &Path, monitors: &[MonitorRow]) -> Result<()> {
    let rows: Vec<Vec<f64>> = monitors
        .iter()
        .map(|m| vec![m.t, m.l2, m.h3, m.n_sup, m.d2, m.div_e_res, m.div_h_res])
        .collect();
    write_csv(
        path,
        &["t", "l2", "h3", "N", "D2", "divE_res", "divh_res"],
        &rows,
    )
}

pub fn lpqlr_csv(path: &Path, report: &LpqlrReport) -> Result<()> {
    let rows: Vec<Vec<f64>> = report
        .rows
        .iter()
        .map(|r| vec![r.t, r.lhs_norm, r.rhs_low, r.rhs_high, r.ratio])
        .collect();
    write_csv(path, &["t", "lhs_norm", "rhs_low", "rhs_high", "ratio"], &rows)
}

pub fn spectrum_csv(path: &Path, scan: &SpectrumScan) -> Result<()> {
    let rows: Vec<Vec<f64>> = scan
        .rows
        .iter()
        .map(|r| vec![r.xi_norm, r.dir_id as f64, r.margin, r.eta, r.ratio])
        .collect();
    write_csv(
        path,
        &["xi_norm", "omega_id", "re_lambda_min", "eta", "ratio"],
        &rows,
    )
}

/// Write a JSON report; every report carries an `anchor` naming the result
/// it verifies, plus the payload under `data`.
pub fn json_report<T: Serialize>(path: &Path, anchor: &str, payload: &T) -> Result<()> {
    let value = json!({
        "anchor": anchor,
        "data": serde_json::to_value(payload)?,
    });
    write_json_value(path, &value)
}

pub fn write_json_value(path: &Path, value: &Value) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(serde_json::to_string_pretty(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// The Lyapunov-search report in its published layout.
pub fn lyapunov_json(
    path: &Path,
    search: &SearchReport,
    pointwise: Option<&PointwiseReport>,
    grid_desc: &Value,
) -> Result<()> {
    let mut value = json!({
        "anchor": "frequency-wise Lyapunov functional",
        "params": {
            "alpha1": search.params.alpha1,
            "alpha2": search.params.alpha2,
            "c1": search.params.c1,
        },
        "grid": grid_desc,
        "equivalence": [search.equiv_min, search.equiv_max],
        "worst_point": {
            "xi": search.worst_xi,
            "ratio": search.worst_ratio,
        },
    });
    if let Some(p) = pointwise {
        value["fitted"] = json!({
            "c0": p.c0,
            "C": p.c_big,
            "low_exponent": p.low_exponent,
            "high_exponent": p.high_exponent,
        });
    }
    write_json_value(path, &value)
}

/// Merge previously written JSON reports into one document keyed by file stem.
pub fn merge_reports(paths: &[std::path::PathBuf], out: &Path) -> Result<()> {
    let mut merged = serde_json::Map::new();
    for path in paths {
        let text = std::fs::read_to_string(path)?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let key = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("report")
            .to_string();
        merged.insert(key, value);
    }
    write_json_value(out, &Value::Object(merged))
}
