//! Plotting-ready CSV extracted from artifacts.

use std::path::Path;

use modasm_core::optimizer::CandidateResult;
use modasm_core::SelectionOutcome;

use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    CostsBar,
    Polytope,
    Tracking,
}

impl std::str::FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "costs-bar" => Ok(PlotKind::CostsBar),
            "polytope" => Ok(PlotKind::Polytope),
            "tracking" => Ok(PlotKind::Tracking),
            other => Err(CliError::UnknownKind(other.into())),
        }
    }
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Parse { path: path.to_path_buf(), message: e.to_string() }
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ascii csv")
}

/// `n, config_id, key, feasible, cost` from results JSONL or a selection outcome.
fn costs_bar(path: &Path) -> CliResult<String> {
    let rows: Vec<CandidateResult> =
        if path.extension().is_some_and(|e| e == "jsonl") { io::read_jsonl(path)? } else { io::read_json::<SelectionOutcome>(path)?.table };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "config_id", "key", "feasible", "cost"]).map_err(|e| parse_err(path, e))?;
    for r in rows {
        w.write_record([r.n.to_string(), r.config_id.to_string(), r.key, r.result.feasible.to_string(), format!("{:.9e}", r.result.cost)])
            .map_err(|e| parse_err(path, e))?;
    }
    Ok(finish(w))
}

/// Passes a polytope CSV through with `s_norm = s / max s` appended.
fn polytope(path: &Path) -> CliResult<String> {
    let text = io::read_text(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| parse_err(path, e))?.clone();
    let s_col = headers.iter().position(|h| h == "s").ok_or_else(|| parse_err(path, "missing column 's'"))?;
    let records: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>().map_err(|e| parse_err(path, e))?;
    let values: Vec<Option<f64>> = records
        .iter()
        .map(|rec| rec.get(s_col).filter(|s| !s.is_empty()).map(|s| s.parse::<f64>()).transpose())
        .collect::<Result<_, _>>()
        .map_err(|e| parse_err(path, e))?;
    let max = values.iter().flatten().copied().fold(0.0f64, f64::max);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head: Vec<&str> = headers.iter().collect();
    head.push("s_norm");
    w.write_record(&head).map_err(|e| parse_err(path, e))?;
    for (rec, v) in records.iter().zip(&values) {
        let mut row: Vec<String> = rec.iter().map(String::from).collect();
        row.push(match v {
            Some(s) if max > 0.0 => format!("{:.9e}", s / max),
            _ => String::new(),
        });
        w.write_record(&row).map_err(|e| parse_err(path, e))?;
    }
    Ok(finish(w))
}

/// `t, err_pos, err_ang_deg` from a simulation log, every `every`-th row.
fn tracking(path: &Path, every: usize) -> CliResult<String> {
    let text = io::read_text(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| parse_err(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| parse_err(path, format!("missing column '{name}'")));
    let idx = [col("t")?, col("px")?, col("py")?, col("pz")?, col("ref_px")?, col("ref_py")?, col("ref_pz")?, col("err_ang_deg")?];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "err_pos", "err_ang_deg"]).map_err(|e| parse_err(path, e))?;
    for rec in r.records().step_by(every.max(1)) {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        let v: Vec<f64> =
            idx.iter().map(|&i| rec.get(i).unwrap_or("").parse::<f64>()).collect::<Result<_, _>>().map_err(|e| parse_err(path, e))?;
        let err = ((v[1] - v[4]).powi(2) + (v[2] - v[5]).powi(2) + (v[3] - v[6]).powi(2)).sqrt();
        w.write_record([format!("{:.9e}", v[0]), format!("{err:.9e}"), format!("{:.9e}", v[7])]).map_err(|e| parse_err(path, e))?;
    }
    Ok(finish(w))
}

pub fn emit_plot_data(input: &Path, kind: &str, every: usize) -> CliResult<String> {
    match kind.parse::<PlotKind>()? {
        PlotKind::CostsBar => costs_bar(input),
        PlotKind::Polytope => polytope(input),
        PlotKind::Tracking => tracking(input, every),
    }
}
