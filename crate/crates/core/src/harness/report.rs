use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{FailureLabel, FunctionReport, HarnessError, RunRecord, SuiteReport};

pub const RUNS_HEADER: [&str; 7] = ["function_id", "seed", "final_gap", "win", "evals_used", "ea_gap", "non_compliant"];
pub const SUMMARY_HEADER: [&str; 6] = ["function_id", "runs", "wins", "mean_gap", "std_gap", "label"];

/// Seventeen significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per run. Wall-clock time is left out so the file depends only on
/// the inputs.
pub fn write_runs_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUNS_HEADER)?;
    for r in records {
        w.write_record([
            r.function_id.to_string(),
            r.seed.to_string(),
            num(r.final_gap),
            r.win.to_string(),
            r.evals_used.to_string(),
            num(r.ea_gap),
            r.non_compliant.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(reports: &[FunctionReport], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in reports {
        w.write_record([
            r.function_id.to_string(),
            r.runs.to_string(),
            r.wins.to_string(),
            num(r.mean_gap),
            num(r.std_gap),
            r.label.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn runs_csv_string(records: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    write_runs_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn summary_csv_string(reports: &[FunctionReport]) -> String {
    let mut buf = Vec::new();
    write_summary_csv(reports, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// A row of `summary.csv`; the label column is optional on input.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub function_id: u32,
    pub runs: usize,
    pub wins: usize,
    pub mean_gap: f64,
    pub std_gap: f64,
    pub label: Option<FailureLabel>,
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Config(format!("summary is missing column {name}")))
    };
    let (id, runs, wins, mean, std) = (col("function_id")?, col("runs")?, col("wins")?, col("mean_gap")?, col("std_gap")?);
    let label = headers.iter().position(|h| h == "label");
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let parse_err = |what: &str, v: &str| HarnessError::Config(format!("bad {what} value {v:?}"));
        let get_num = |i: usize, what: &str| -> Result<f64, HarnessError> {
            let v = field(i);
            v.parse().map_err(|_| parse_err(what, &v))
        };
        let get_int = |i: usize, what: &str| -> Result<usize, HarnessError> {
            let v = field(i);
            v.parse().map_err(|_| parse_err(what, &v))
        };
        rows.push(SummaryRow {
            function_id: get_int(id, "function_id")? as u32,
            runs: get_int(runs, "runs")?,
            wins: get_int(wins, "wins")?,
            mean_gap: get_num(mean, "mean_gap")?,
            std_gap: get_num(std, "std_gap")?,
            label: match label.map(field) {
                Some(s) if !s.is_empty() => Some(s.parse().map_err(HarnessError::Config)?),
                _ => None,
            },
        });
    }
    Ok(rows)
}

pub fn write_report_json<W: Write>(report: &SuiteReport, mut out: W) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes `runs.csv`, `summary.csv` and `report.json` into `dir`.
pub fn write_reports(report: &SuiteReport, dir: impl AsRef<Path>) -> Result<(), HarnessError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_runs_csv(&report.runs, fs::File::create(dir.join("runs.csv"))?)?;
    write_summary_csv(&report.functions, fs::File::create(dir.join("summary.csv"))?)?;
    write_report_json(report, fs::File::create(dir.join("report.json"))?)?;
    Ok(())
}
