//! Merging of flags with config files, value parsers and the report envelope.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use soficlab_core::group::text::parse_element;
use soficlab_core::group::{GroupElement, GroupSpec};
use thiserror::Error;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] soficlab_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Flags as a JSON object, unset flags dropped.
pub fn flags_to_value<T: Serialize>(args: &T) -> Value {
    let mut v = serde_json::to_value(args).expect("flag structs serialize");
    if let Value::Object(m) = &mut v {
        m.retain(|_, x| !x.is_null());
    }
    v
}

/// Overlay `flags` on the config file contents; flags win.
pub fn merge(file: Option<Value>, flags: Value) -> CliResult<Value> {
    let mut base = match file {
        None => Map::new(),
        Some(Value::Object(m)) => m,
        Some(_) => return Err(CliError::config("config file must hold a JSON object")),
    };
    if let Some(v) = base.remove("schema-version") {
        if v != json!(SCHEMA_VERSION) {
            return Err(CliError::config(format!("unsupported schema-version {v}; expected {SCHEMA_VERSION}")));
        }
    }
    if let Value::Object(m) = flags {
        base.extend(m);
    }
    Ok(Value::Object(base))
}

pub fn decode<T: DeserializeOwned>(command: &str, config: &Value) -> CliResult<T> {
    serde_json::from_value(config.clone()).map_err(|e| CliError::config(format!("{command}: {e}")))
}

/// SHA-256 of the canonical (key-sorted) JSON of command and config.
pub fn config_hash(command: &str, config: &Value) -> String {
    let canonical = serde_json::to_string(&json!({ "command": command, "config": config })).unwrap();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// `a..b` (inclusive), a comma list, or a single value.
pub fn parse_range(s: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::config(format!("cannot read {s:?} as a range like 4..10 or a list like 4,6,8"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

pub fn parse_floats(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| CliError::config(format!("cannot read {x:?} as a number"))))
        .collect()
}

/// A nonnegative integer, also written as `1e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("{s:?} is not a nonnegative integer")),
    }
}

pub fn parse_usizes(s: &str) -> CliResult<Vec<usize>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    parse_range(s).map(|v| v.into_iter().map(|x| x as usize).collect())
}

/// `Z`, `Z^r` or `F<r>`.
pub fn parse_group(s: &str) -> CliResult<GroupSpec> {
    let s = s.trim();
    let bad = || CliError::config(format!("unknown group {s:?}; use Z, Z^2 or F2"));
    let g = if s == "Z" {
        GroupSpec::lattice(1)
    } else if let Some(r) = s.strip_prefix("Z^") {
        GroupSpec::lattice(r.parse().map_err(|_| bad())?)
    } else if let Some(r) = s.strip_prefix('F') {
        GroupSpec::free(r.parse().map_err(|_| bad())?)
    } else {
        return Err(bad());
    };
    Ok(g?)
}

/// A finite window: `ball:r`, an integer range `a..b` on `Z`, or `;`-separated elements.
pub fn parse_window(group: &GroupSpec, s: &str) -> CliResult<Vec<GroupElement>> {
    let s = s.trim();
    if let Some(r) = s.strip_prefix("ball:") {
        let r = r.parse().map_err(|_| CliError::config(format!("bad ball radius in {s:?}")))?;
        return Ok(group.ball(r));
    }
    if let Some((a, b)) = s.split_once("..") {
        if group.rank() == 1 && !s.contains(';') {
            let a: i64 = a.trim().parse().map_err(|_| CliError::config(format!("bad window {s:?}")))?;
            let b: i64 = b.trim().parse().map_err(|_| CliError::config(format!("bad window {s:?}")))?;
            return Ok((a..=b).map(|i| GroupElement::Lattice(vec![i])).collect());
        }
    }
    Ok(s.split(';').map(|x| parse_element(group, x)).collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    /// Some cells were skipped for budget reasons.
    Partial,
    ValidationFailed,
    BudgetExceeded,
    ConfigError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::ValidationFailed => 2,
            Status::Partial | Status::BudgetExceeded => 3,
            Status::ConfigError => 4,
        }
    }
}

/// A command's result before it is wrapped in the envelope.
pub struct Outcome {
    pub status: Status,
    pub result: Value,
}

impl Outcome {
    pub fn ok(result: impl Serialize) -> CliResult<Self> {
        Ok(Outcome { status: Status::Ok, result: to_value(result)? })
    }

    pub fn with_status(status: Status, result: impl Serialize) -> CliResult<Self> {
        Ok(Outcome { status, result: to_value(result)? })
    }
}

pub fn to_value(x: impl Serialize) -> CliResult<Value> {
    serde_json::to_value(x).map_err(|e| CliError::config(format!("serialization failed: {e}")))
}

pub fn status_of(err: &CliError) -> Status {
    use soficlab_core::Error as E;
    match err {
        CliError::Config(_) | CliError::Io { .. } => Status::ConfigError,
        CliError::Core(e) => match e {
            E::Validation(_) | E::InverseResidual { .. } | E::AllSingular => Status::ValidationFailed,
            E::BudgetExceeded(_) => Status::BudgetExceeded,
            _ => Status::ConfigError,
        },
    }
}

pub fn envelope(command: &str, config: &Value, status: Status, result: Option<Value>, error: Option<String>) -> Value {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "schema-version": SCHEMA_VERSION,
        "tool": "soficlab",
        "code-version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "config-hash": config_hash(command, config),
        "timestamp": timestamp,
        "status": status,
        "result": result,
        "error": error,
    })
}

/// `(path, value)` rows for every scalar leaf of `v`.
pub fn flatten(v: &Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, x)| walk(&join(k), x, out)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(&join(&i.to_string()), x, out)),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk("", v, &mut out);
    out
}
