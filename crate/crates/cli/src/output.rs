use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Round to 7 significant digits so every output format prints the same number.
pub fn sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.6e}").parse().unwrap_or(x)
}

pub fn sig3(v: [f64; 3]) -> [f64; 3] {
    v.map(sig)
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "none".into(),
        other => other.to_string(),
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Object(_) | Value::Array(_))
}

/// Indented `key: value` listing of a JSON summary.
pub fn to_text(title: &str, v: &Value) -> String {
    let mut out = format!("# {title}\n");
    text_into(&mut out, v, 0);
    out
}

fn text_into(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Array(items) if items.iter().all(|i| is_scalar(i) && !i.is_string()) => {
                        let parts: Vec<String> = items.iter().map(scalar).collect();
                        let _ = writeln!(out, "{pad}{k}: [{}]", parts.join(", "));
                    }
                    Value::Array(items) => {
                        let _ = writeln!(out, "{pad}{k}:");
                        for (i, item) in items.iter().enumerate() {
                            if is_scalar(item) {
                                let _ = writeln!(out, "{pad}  - {}", scalar(item));
                            } else {
                                let _ = writeln!(out, "{pad}  [{i}]");
                                text_into(out, item, depth + 2);
                            }
                        }
                    }
                    Value::Object(_) => {
                        let _ = writeln!(out, "{pad}{k}:");
                        text_into(out, val, depth + 1);
                    }
                    _ => {
                        let _ = writeln!(out, "{pad}{k}: {}", scalar(val));
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{}", scalar(other));
        }
    }
}

/// `key,value` rows with dotted paths; array elements are indexed.
pub fn to_csv(v: &Value) -> String {
    let mut rows = Vec::new();
    csv_into(&mut rows, String::new(), v);
    let mut out = String::from("key,value\n");
    for (k, val) in rows {
        let val = if val.contains(',') || val.contains('"') {
            format!("\"{}\"", val.replace('"', "\"\""))
        } else {
            val
        };
        let _ = writeln!(out, "{k},{val}");
    }
    out
}

fn csv_into(rows: &mut Vec<(String, String)>, prefix: String, v: &Value) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                csv_into(rows, join(k), val);
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                csv_into(rows, join(&i.to_string()), item);
            }
        }
        other => rows.push((prefix, scalar(other))),
    }
}

pub fn render(title: &str, v: &Value, format: Format) -> String {
    match format {
        Format::Text => to_text(title, v),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
            s.push('\n');
            s
        }
        Format::Csv => to_csv(v),
    }
}

/// Write to `path` through a temporary sibling and a rename, or to stdout.
pub fn emit(path: Option<&Path>, content: &str) -> CliResult<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(content.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            });
    };
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let name = path.file_name().ok_or_else(|| {
        CliError::Usage(format!("output path `{}` has no file name", path.display()))
    })?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(content.as_bytes()).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err)
}
