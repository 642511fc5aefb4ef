use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::{Error, Result};

/// Value type of a configuration key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Non-negative integer.
    Int,
    Float,
    /// Comma-separated powers of two (`512`, `2^9`, `1/8`, `2^-3`).
    Dyadic,
    /// Comma-separated powers of two; a single value is accepted.
    DyadicList,
    FloatList,
    Text(&'static [&'static str]),
    Bool,
}

/// One key of an experiment schema.
#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

impl Param {
    pub const fn new(key: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Self {
        Param { key, kind, default, help }
    }
}

/// Keys handled by every experiment.
pub const COMMON: &[Param] = &[Param::new("seed", Kind::Int, "0", "master seed")];

/// Keys of experiments that repeat over independent trials.
pub const TRIALS: &[Param] = &[
    Param::new("trials", Kind::Int, "1", "number of trials"),
    Param::new("first_trial", Kind::Int, "0", "index of the first trial"),
];

/// Keys that steer a run but are not part of the experiment's parameters.
const RUNTIME: &[&str] = &["experiment", "out", "format", "threads"];

/// A number such as `0.25`, `1e6`, `2^9`, `1/8`, `1/2^3` or `2^-3`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        return Some(parse_number(num)? / parse_number(den)?);
    }
    if let Some((base, exp)) = s.split_once('^') {
        return Some(parse_number(base)?.powf(exp.trim().parse::<f64>().ok()?));
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn is_dyadic(v: f64) -> bool {
    v > 0.0 && v.log2().fract() == 0.0
}

fn parse_value(param: &Param, raw: &str) -> Result<Value> {
    let bad = |what: &str| Error::config(param.key, format!("expected {what}, got `{raw}`"));
    let list = |raw: &str| -> Option<Vec<f64>> { raw.split(',').map(parse_number).collect() };
    Ok(match param.kind {
        Kind::Int => {
            let v = parse_number(raw).filter(|v| *v >= 0.0 && v.fract() == 0.0 && *v < 2f64.powi(63));
            Value::from(v.ok_or_else(|| bad("a non-negative integer"))? as u64)
        }
        Kind::Float => Value::from(parse_number(raw).ok_or_else(|| bad("a number"))?),
        Kind::Dyadic => {
            let v = parse_number(raw).ok_or_else(|| bad("a number"))?;
            if !is_dyadic(v) {
                return Err(Error::config(param.key, format!("{raw} is not a power of two")));
            }
            Value::from(v)
        }
        Kind::DyadicList | Kind::FloatList => {
            let vs = list(raw).filter(|v| !v.is_empty()).ok_or_else(|| bad("a comma-separated list of numbers"))?;
            if param.kind == Kind::DyadicList {
                if let Some(v) = vs.iter().find(|v| !is_dyadic(**v)) {
                    return Err(Error::config(param.key, format!("{v} is not a power of two")));
                }
            }
            Value::from(vs)
        }
        Kind::Text(choices) => {
            let v = raw.trim();
            if !choices.is_empty() && !choices.contains(&v) {
                return Err(Error::config(param.key, format!("`{v}` is not one of {}", choices.join(", "))));
            }
            Value::from(v)
        }
        Kind::Bool => Value::from(match raw.trim() {
            "true" | "yes" | "1" => true,
            "false" | "no" | "0" => false,
            _ => return Err(bad("true or false")),
        }),
    })
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", i + 1), format!("expected `key = value`, got `{line}`")))?;
        let k = k.trim().to_string();
        if k.is_empty() {
            return Err(Error::config(format!("line {}", i + 1), "empty key"));
        }
        if out.iter().any(|(o, _)| *o == k) {
            return Err(Error::config(k, "given twice"));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Output format of the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::config("format", format!("`{other}` is not one of json, csv"))),
        }
    }
}

/// A validated configuration: the experiment, its typed parameters in schema
/// order, and where to write results.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub params: Map<String, Value>,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Worker threads; 0 keeps the global pool.
    pub threads: usize,
}

/// Raw key-value settings before validation; later layers override earlier.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    pairs: Vec<(String, String)>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(ConfigBuilder { pairs: parse_pairs(text)? })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn set(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        let key = key.into();
        self.pairs.retain(|(k, _)| *k != key);
        self.pairs.push((key, value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Checks every key against the experiment's schema and fills defaults.
    pub fn build(&self) -> Result<ExperimentConfig> {
        let id = self.get("experiment").ok_or_else(|| Error::config("experiment", "missing"))?;
        let exp = super::find(id)?;
        for (k, _) in &self.pairs {
            if !RUNTIME.contains(&k.as_str()) && !exp.schema().iter().any(|p| p.key == k) {
                return Err(Error::config(k.clone(), format!("not a parameter of `{id}`")));
            }
        }
        let mut params = Map::new();
        for p in exp.schema() {
            let raw = self.get(p.key).unwrap_or(p.default);
            params.insert(p.key.into(), parse_value(&p, raw)?);
        }
        let threads = match self.get("threads") {
            Some(t) => parse_value(&Param::new("threads", Kind::Int, "0", ""), t)?.as_u64().unwrap_or(0) as usize,
            None => 0,
        };
        Ok(ExperimentConfig {
            experiment: exp.id.into(),
            params,
            out: self.get("out").filter(|s| !s.is_empty()).map(PathBuf::from),
            format: self.get("format").map(str::parse).transpose()?.unwrap_or_default(),
            threads,
        })
    }
}

impl ExperimentConfig {
    /// Validated configuration with every parameter at its default.
    pub fn defaults(experiment: &str) -> Result<Self> {
        ConfigBuilder::new().set("experiment", experiment).build()
    }

    /// Sets one parameter, validating it against the schema.
    pub fn with(mut self, key: &str, value: impl ToString) -> Result<Self> {
        let exp = super::find(&self.experiment)?;
        let p = exp
            .schema()
            .into_iter()
            .find(|p| p.key == key)
            .ok_or_else(|| Error::config(key, format!("not a parameter of `{}`", self.experiment)))?;
        self.params.insert(key.into(), parse_value(&p, &value.to_string())?);
        Ok(self)
    }

    fn value(&self, key: &str) -> Result<&Value> {
        self.params.get(key).ok_or_else(|| Error::config(key, "missing"))
    }

    pub fn int(&self, key: &str) -> Result<u64> {
        self.value(key)?.as_u64().ok_or_else(|| Error::config(key, "not an integer"))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.int(key)? as usize)
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        self.value(key)?.as_f64().ok_or_else(|| Error::config(key, "not a number"))
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        self.value(key)?
            .as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect())
            .ok_or_else(|| Error::config(key, "not a list of numbers"))
    }

    pub fn text(&self, key: &str) -> Result<&str> {
        self.value(key)?.as_str().ok_or_else(|| Error::config(key, "not text"))
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        self.value(key)?.as_bool().ok_or_else(|| Error::config(key, "not a boolean"))
    }

    pub fn seed(&self) -> u64 {
        self.int("seed").unwrap_or(0)
    }

    /// Trial indices covered by this configuration, if the experiment has trials.
    pub fn trial_range(&self) -> Option<std::ops::Range<usize>> {
        let n = self.usize("trials").ok()?;
        let first = self.usize("first_trial").ok()?;
        Some(first..first + n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(parse_number("2^9"), Some(512.0));
        assert_eq!(parse_number("1/8"), Some(0.125));
        assert_eq!(parse_number("1/2^5"), Some(1.0 / 32.0));
        assert_eq!(parse_number("2^-3"), Some(0.125));
        assert_eq!(parse_number("1e6"), Some(1e6));
        assert_eq!(parse_number("abc"), None);
    }

    #[test]
    fn pairs_and_comments() {
        let p = parse_pairs("# sweep\nexperiment = exponents\n\n p = 10 # inline\n").unwrap();
        assert_eq!(p, vec![("experiment".into(), "exponents".into()), ("p".into(), "10".into())]);
        assert!(matches!(parse_pairs("oops"), Err(Error::Config { field, .. }) if field == "line 1"));
        assert!(matches!(parse_pairs("a=1\na=2"), Err(Error::Config { field, .. }) if field == "a"));
    }

    #[test]
    fn typed_values() {
        let d = Param::new("R", Kind::DyadicList, "", "");
        assert_eq!(parse_value(&d, "2^9, 4096").unwrap(), serde_json::json!([512.0, 4096.0]));
        assert!(matches!(parse_value(&d, "500"), Err(Error::Config { field, .. }) if field == "R"));
        let i = Param::new("trials", Kind::Int, "", "");
        assert!(parse_value(&i, "1.5").is_err());
        assert_eq!(parse_value(&i, "1e3").unwrap(), serde_json::json!(1000));
        let t = Param::new("method", Kind::Text(&["exact", "monte-carlo"]), "", "");
        assert!(parse_value(&t, "fast").is_err());
    }
}
