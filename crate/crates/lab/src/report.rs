use crate::record::{csv_header, write_csv, ResultRecord};
use crate::LabError;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// A gnuplot figure of CSV columns `ys` against `x` (full header names).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub x: String,
    pub ys: Vec<String>,
    pub logscale_y: bool,
}

/// JSON report: records plus free-form notes printed as a footer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub campaign: String,
    pub config_hash: String,
    pub records: Vec<ResultRecord>,
    pub summary: serde_json::Value,
    pub footer: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Emitted {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub plot: Option<PathBuf>,
}

/// Gnuplot script reading `csv_name`, or `None` if a column is missing.
pub fn plot_script(records: &[ResultRecord], csv_name: &str, plot: &PlotSpec) -> Option<String> {
    let header = csv_header(records);
    let col = |name: &str| header.iter().position(|h| h == name).map(|i| i + 1);
    let x = col(&plot.x)?;
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset key autotitle columnhead\n");
    if plot.logscale_y {
        s.push_str("set logscale y\n");
    }
    s.push_str(&format!("set xlabel '{}'\n", plot.x));
    let mut parts = Vec::new();
    for y in &plot.ys {
        parts.push(format!("'{csv_name}' using {x}:{} with linespoints title '{y}'", col(y)?));
    }
    s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    Some(s)
}

/// Writes `<stem>.csv`, `<stem>.json` and, when a plot is given and every
/// column exists, `<stem>.gp` into `dir`.
pub fn emit_report(report: &Report, dir: &Path, stem: &str, plot: Option<&PlotSpec>) -> Result<Emitted, LabError> {
    if report.records.is_empty() {
        return Err(LabError::Config("no records to report".into()));
    }
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    write_csv(&report.records, fs::File::create(&csv)?)?;
    let json = dir.join(format!("{stem}.json"));
    fs::write(&json, serde_json::to_string_pretty(report)?)?;
    let mut out = Emitted { csv, json, plot: None };
    if let Some(p) = plot {
        if let Some(script) = plot_script(&report.records, &format!("{stem}.csv"), p) {
            let gp = dir.join(format!("{stem}.gp"));
            fs::write(&gp, script)?;
            out.plot = Some(gp);
        }
    }
    Ok(out)
}
