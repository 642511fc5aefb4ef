use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::config::ExperimentConfig;
use crate::{Error, Result};

pub type Row = Map<String, Value>;

/// A named pass/fail check evaluated on the rows of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Assertion { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub module: String,
    pub config: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub summary: Map<String, Value>,
    pub assertions: Vec<Assertion>,
    pub pass: bool,
    pub wall_clock_s: f64,
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Header plus one line per row, columns in schema order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(self.columns.iter().map(|c| row.get(c).map(csv_field).unwrap_or_default()))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Io(format!("malformed report: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Writes `<dir>/<experiment>.json` and `<dir>/<experiment>.csv`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.experiment));
        let csv = dir.join(format!("{}.csv", self.experiment));
        std::fs::write(&json, self.to_json() + "\n")?;
        std::fs::write(&csv, self.to_csv())?;
        Ok((json, csv))
    }

    /// Failed assertions, one line each.
    pub fn failures(&self) -> Vec<String> {
        self.assertions.iter().filter(|a| !a.pass).map(|a| format!("{}: {}", a.name, a.detail)).collect()
    }
}

/// Trial-split keys that may differ between merged reports.
const TRIAL_KEYS: [&str; 2] = ["trials", "first_trial"];

/// Concatenates the rows of reports of one experiment and recomputes the
/// summary. Trial ranges must be disjoint and together contiguous.
pub fn merge(mut reports: Vec<Report>) -> Result<Report> {
    let Some(first) = reports.first() else {
        return Err(Error::config("paths", "nothing to merge"));
    };
    let id = first.experiment.clone();
    if let Some(other) = reports.iter().find(|r| r.experiment != id) {
        return Err(Error::config("experiment", format!("cannot merge `{id}` with `{}`", other.experiment)));
    }
    let strip = |c: &Map<String, Value>| -> Map<String, Value> {
        c.iter().filter(|(k, _)| !TRIAL_KEYS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect()
    };
    let base = strip(&first.config);
    for r in &reports[1..] {
        let c = strip(&r.config);
        if let Some((k, _)) = c.iter().find(|(k, v)| base.get(*k) != Some(*v)) {
            return Err(Error::config(k.clone(), "differs between merged reports"));
        }
    }
    let exp = super::find(&id)?;
    let mut config = ExperimentConfig::defaults(&id)?;
    config.params = first.config.clone();
    if let Some(_) = config.trial_range() {
        let range = |r: &Report| -> (u64, u64) {
            let f = r.config.get("first_trial").and_then(Value::as_u64).unwrap_or(0);
            (f, f + r.config.get("trials").and_then(Value::as_u64).unwrap_or(0))
        };
        reports.sort_by_key(range);
        for w in reports.windows(2) {
            if range(&w[0]).1 != range(&w[1]).0 {
                return Err(Error::config("first_trial", "trial ranges must be disjoint and contiguous"));
            }
        }
        let lo = range(&reports[0]).0;
        let hi = range(reports.last().expect("nonempty")).1;
        config.params.insert("first_trial".into(), Value::from(lo));
        config.params.insert("trials".into(), Value::from(hi - lo));
    }
    let rows: Vec<Row> = reports.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    let wall = reports.iter().map(|r| r.wall_clock_s).sum();
    exp.assemble(&config, rows, wall)
}

/// [`merge`] of the reports stored at `paths`.
pub fn merge_reports<P: AsRef<Path>>(paths: &[P]) -> Result<Report> {
    if paths.is_empty() {
        return Err(Error::config("paths", "nothing to merge"));
    }
    merge(paths.iter().map(|p| Report::read(p.as_ref())).collect::<Result<_>>()?)
}
