use crate::LabError;
use dgff_ballot::stats::Interval;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

/// One table row of a campaign.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub campaign: String,
    pub row: usize,
    pub master_seed: u64,
    /// Label hashed into the per-row seed (see [`crate::config::seed_row`]).
    pub seed_label: String,
    pub inputs: BTreeMap<String, Value>,
    pub estimates: BTreeMap<String, f64>,
    pub intervals: BTreeMap<String, Interval>,
    pub flags: BTreeMap<String, bool>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

impl ResultRecord {
    pub fn new(campaign: &str, config_hash: &str, row: usize, master_seed: u64, seed_label: impl Into<String>) -> ResultRecord {
        ResultRecord { config_hash: config_hash.into(), campaign: campaign.into(), row, master_seed, seed_label: seed_label.into(), ..Default::default() }
    }

    pub fn input(mut self, key: &str, v: impl Serialize) -> Self {
        self.inputs.insert(key.into(), serde_json::to_value(v).expect("input serializes"));
        self
    }

    /// Non-finite values are dropped, so an absent estimate means "undefined".
    pub fn est(&mut self, key: &str, v: f64) {
        if v.is_finite() {
            self.estimates.insert(key.into(), v);
        }
    }

    pub fn ci(&mut self, key: &str, ci: Interval) {
        if ci.lo.is_finite() && ci.hi.is_finite() {
            self.intervals.insert(key.into(), ci);
        }
    }

    pub fn flag(&mut self, key: &str, v: bool) {
        self.flags.insert(key.into(), v);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.estimates.get(key).copied()
    }

    /// The record without its wall time, for reproducibility comparisons.
    pub fn timeless(&self) -> ResultRecord {
        ResultRecord { wall_time_s: 0.0, ..self.clone() }
    }
}

const FIXED: [&str; 7] = ["config_hash", "campaign", "row", "master_seed", "seed_label", "wall_time_s", "warnings"];

/// Header of the CSV form: fixed columns, then `in:`, `est:`, `lo:`/`hi:` and
/// `flag:` columns with keys in sorted order.
pub fn csv_header(records: &[ResultRecord]) -> Vec<String> {
    let keys = |f: &dyn Fn(&ResultRecord) -> Vec<String>| records.iter().flat_map(f).collect::<BTreeSet<String>>();
    let mut h: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    h.extend(keys(&|r| r.inputs.keys().cloned().collect()).into_iter().map(|k| format!("in:{k}")));
    h.extend(keys(&|r| r.estimates.keys().cloned().collect()).into_iter().map(|k| format!("est:{k}")));
    for k in keys(&|r| r.intervals.keys().cloned().collect()) {
        h.push(format!("lo:{k}"));
        h.push(format!("hi:{k}"));
    }
    h.extend(keys(&|r| r.flags.keys().cloned().collect()).into_iter().map(|k| format!("flag:{k}")));
    h
}

pub fn write_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<(), LabError> {
    let header = csv_header(records);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for r in records {
        let cells: Vec<String> = header
            .iter()
            .map(|col| match col.as_str() {
                "config_hash" => r.config_hash.clone(),
                "campaign" => r.campaign.clone(),
                "row" => r.row.to_string(),
                "master_seed" => r.master_seed.to_string(),
                "seed_label" => r.seed_label.clone(),
                "wall_time_s" => r.wall_time_s.to_string(),
                "warnings" => serde_json::to_string(&r.warnings).expect("strings serialize"),
                c => {
                    let (kind, key) = c.split_once(':').expect("prefixed column");
                    match kind {
                        "in" => r.inputs.get(key).map(|v| v.to_string()).unwrap_or_default(),
                        "est" => r.estimates.get(key).map(|v| v.to_string()).unwrap_or_default(),
                        "lo" => r.intervals.get(key).map(|v| v.lo.to_string()).unwrap_or_default(),
                        "hi" => r.intervals.get(key).map(|v| v.hi.to_string()).unwrap_or_default(),
                        _ => r.flags.get(key).map(|v| v.to_string()).unwrap_or_default(),
                    }
                }
            })
            .collect();
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRecord>, LabError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    let bad = |m: String| LabError::Config(format!("csv: {m}"));
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s}: {e}")));
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let mut r = ResultRecord::default();
        let mut lo = BTreeMap::new();
        for (col, cell) in header.iter().zip(row.iter()) {
            match col.as_str() {
                "config_hash" => r.config_hash = cell.into(),
                "campaign" => r.campaign = cell.into(),
                "row" => r.row = cell.parse().map_err(|e| bad(format!("row: {e}")))?,
                "master_seed" => r.master_seed = cell.parse().map_err(|e| bad(format!("seed: {e}")))?,
                "seed_label" => r.seed_label = cell.into(),
                "wall_time_s" => r.wall_time_s = num(cell)?,
                "warnings" => r.warnings = serde_json::from_str(cell)?,
                c if cell.is_empty() => {
                    if !c.contains(':') {
                        return Err(bad(format!("unknown column {c}")));
                    }
                }
                c => match c.split_once(':') {
                    Some(("in", k)) => {
                        r.inputs.insert(k.into(), serde_json::from_str(cell)?);
                    }
                    Some(("est", k)) => {
                        r.estimates.insert(k.into(), num(cell)?);
                    }
                    Some(("lo", k)) => {
                        lo.insert(k.to_string(), num(cell)?);
                    }
                    Some(("hi", k)) => {
                        let l = lo.remove(k).ok_or_else(|| bad(format!("hi:{k} without lo")))?;
                        r.intervals.insert(k.into(), Interval { lo: l, hi: num(cell)? });
                    }
                    Some(("flag", k)) => {
                        r.flags.insert(k.into(), cell.parse().map_err(|_| bad(format!("flag {cell}")))?);
                    }
                    _ => return Err(bad(format!("unknown column {c}"))),
                },
            }
        }
        out.push(r);
    }
    Ok(out)
}
