use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::config::Scheme;
use crate::experiment::run::{CellRow, ExperimentReport};

pub const CSV_HEADER: &str =
    "scheme,m_intermediate,m0,trials,successes,fraction,mean_iters_success,storage_entries,wall_time_s,seed";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::invalid(format!("unknown report format `{other}` (csv or json)"))),
        }
    }
}

/// Flat CSV form of a [`CellRow`].
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    scheme: Scheme,
    m_intermediate: Option<usize>,
    m0: usize,
    trials: usize,
    successes: usize,
    fraction: f64,
    mean_iters_success: Option<f64>,
    storage_entries: usize,
    wall_time_s: String,
    seed: u64,
}

/// CSV text with LF line endings. Missing values (no intermediate stage, no
/// successful trial) are empty fields.
pub fn to_csv(rows: &[CellRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    for r in rows {
        w.serialize(CsvRow {
            scheme: r.scheme,
            m_intermediate: r.m_intermediate,
            m0: r.m0,
            trials: r.trials,
            successes: r.successes,
            fraction: r.fraction,
            mean_iters_success: r.mean_iters_success,
            storage_entries: r.storage_entries,
            wall_time_s: format!("{:.6}", r.wall_time_s),
            seed: r.seed,
        })
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

pub fn to_json(report: &ExperimentReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

pub fn write_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => to_csv(&report.rows),
        ReportFormat::Json => to_json(report),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report_json(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Parses CSV produced by [`to_csv`]. Per-trial outcomes are not part of the
/// CSV and come back empty.
pub fn parse_csv(text: &str) -> Result<Vec<CellRow>> {
    if text.lines().next() != Some(CSV_HEADER) {
        return Err(Error::Format("missing or unexpected CSV header".into()));
    }
    csv::Reader::from_reader(text.as_bytes())
        .deserialize::<CsvRow>()
        .map(|rec| {
            let r = rec.map_err(|e| Error::Format(e.to_string()))?;
            let wall_time_s = r
                .wall_time_s
                .parse()
                .map_err(|_| Error::Format(format!("bad wall_time_s `{}`", r.wall_time_s)))?;
            Ok(CellRow {
                scheme: r.scheme,
                m_intermediate: r.m_intermediate,
                m0: r.m0,
                trials: r.trials,
                successes: r.successes,
                fraction: r.fraction,
                mean_iters_success: r.mean_iters_success,
                storage_entries: r.storage_entries,
                wall_time_s,
                seed: r.seed,
                outcomes: Vec::new(),
            })
        })
        .collect()
}
