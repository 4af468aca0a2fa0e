use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::CliError;

/// Rounds to 12 significant digits and prints the shortest string that reads
/// back to the rounded value.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(v);
    let (plain, exp) = (format!("{r}"), format!("{r:e}"));
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

/// `v` rounded to 12 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            let f = n.as_f64().expect("number is a float");
            serde_json::Number::from_f64(round_sig(f)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Serializes `value` with every float rounded to 12 significant digits.
pub fn to_rounded_json<T: Serialize>(value: &T) -> Result<Value, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    Ok(round_value(v))
}

fn cell(v: &Value) -> Result<String, CliError> {
    Ok(match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match n.as_u64().map(|u| u.to_string()).or_else(|| n.as_i64().map(|i| i.to_string())) {
            Some(s) => s,
            None => format_number(n.as_f64().expect("number is a float")),
        },
        Value::String(s) => s.clone(),
        _ => return Err(CliError::Numeric("nested value in a CSV row".into())),
    })
}

/// Renders flat serializable rows as CSV with the field order of the struct.
/// `columns` selects and orders a subset of fields; a `(field, header)` pair
/// renames on the way out.
pub fn rows_to_csv<T: Serialize>(rows: &[T], columns: Option<&[(&str, &str)]>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut objects: Vec<Map<String, Value>> = Vec::with_capacity(rows.len());
    for r in rows {
        match serde_json::to_value(r).map_err(|e| CliError::Numeric(e.to_string()))? {
            Value::Object(o) => objects.push(o),
            _ => return Err(CliError::Numeric("CSV rows must be records".into())),
        }
    }
    let fields: Vec<(String, String)> = match columns {
        Some(cols) => cols.iter().map(|(f, h)| (f.to_string(), h.to_string())).collect(),
        None => objects
            .first()
            .map(|o| o.keys().map(|k| (k.clone(), k.clone())).collect())
            .unwrap_or_default(),
    };
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(fields.iter().map(|(_, h)| h)).map_err(io)?;
    for o in &objects {
        let rec = fields
            .iter()
            .map(|(f, _)| cell(o.get(f).unwrap_or(&Value::Null)))
            .collect::<Result<Vec<_>, _>>()?;
        w.write_record(rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn to_json_text<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = to_rounded_json(value)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// `<out>` with `suffix` appended to the file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

/// Run metadata written next to the output file.
#[derive(Debug, Serialize)]
pub struct Meta<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: Value,
    pub config_sha256: String,
    pub reps: Option<usize>,
    pub calibration_reps: Option<usize>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

/// SHA-256 of the compact JSON form of the resolved configuration.
pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
