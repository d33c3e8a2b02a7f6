//! Run files: pipeline hyperparameters plus the input paths, as JSON or
//! `key = value` lines.

use std::path::{Path, PathBuf};

use hgc_core::config::RunConfig;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};
use crate::formats::read_text;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub cube: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub config: RunConfig,
}

fn scalar(raw: &str) -> Value {
    let t = raw.trim();
    let unquoted = t
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .map(str::to_owned);
    if let Some(s) = unquoted {
        return Value::String(s);
    }
    match t {
        "null" | "none" | "auto" => return Value::Null,
        "true" => return Value::Bool(true),
        "false" => return Value::Bool(false),
        _ => {}
    }
    if let Ok(i) = t.parse::<u64>() {
        return Value::from(i);
    }
    if let Ok(f) = t.parse::<f64>() {
        return Value::from(f);
    }
    Value::String(t.to_owned())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(path: &Path, text: &str) -> CliResult<Map<String, Value>> {
    let mut map = Map::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::format(path, format!("line {}: expected key = value", no + 1)))?;
        if map.insert(k.trim().to_owned(), scalar(v)).is_some() {
            return Err(CliError::format(path, format!("line {}: duplicate key {}", no + 1, k.trim())));
        }
    }
    Ok(map)
}

/// Builds a `RunSpec` from a flat key map; `cube` and `labels` are resolved
/// against `base`.
pub fn spec_from_map(path: &Path, mut map: Map<String, Value>, base: &Path) -> CliResult<RunSpec> {
    let mut take_path = |key: &str| -> CliResult<Option<PathBuf>> {
        match map.remove(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(base.join(s))),
            Some(other) => Err(CliError::format(path, format!("{key} must be a path, got {other}"))),
        }
    };
    let cube = take_path("cube")?;
    let labels = take_path("labels")?;
    let config: RunConfig =
        serde_json::from_value(Value::Object(map)).map_err(|e| CliError::format(path, e.to_string()))?;
    config.validate().map_err(|e| CliError::format(path, e.to_string()))?;
    Ok(RunSpec { cube, labels, config })
}

/// Loads a run file. JSON is detected by a leading `{`.
pub fn load_run_spec(path: &Path) -> CliResult<RunSpec> {
    let text = read_text(path)?;
    let map = if text.trim_start().starts_with('{') {
        match serde_json::from_str::<Value>(&text).map_err(|e| CliError::format(path, e.to_string()))? {
            Value::Object(m) => m,
            _ => return Err(CliError::format(path, "expected a JSON object")),
        }
    } else {
        parse_key_values(path, &text)?
    };
    let base = path.parent().unwrap_or(Path::new("."));
    spec_from_map(path, map, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_and_json_agree() {
        let p = Path::new("x");
        let kv = parse_key_values(p, "# comment\nc = 7\nlearning_rate=0.01\nnum_superpixels = auto\ncube = a.hgc.json\n")
            .unwrap();
        let a = spec_from_map(p, kv, Path::new("/d")).unwrap();
        let json: Value =
            serde_json::from_str(r#"{"c":7,"learning_rate":0.01,"num_superpixels":null,"cube":"a.hgc.json"}"#).unwrap();
        let b = spec_from_map(p, json.as_object().unwrap().clone(), Path::new("/d")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.config.c, 7);
        assert_eq!(a.cube, Some(PathBuf::from("/d/a.hgc.json")));
        assert_eq!(a.config.o, RunConfig::default().o);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let p = Path::new("x");
        assert!(spec_from_map(p, parse_key_values(p, "colour = 3").unwrap(), Path::new(".")).is_err());
        assert!(spec_from_map(p, parse_key_values(p, "c = 0").unwrap(), Path::new(".")).is_err());
        assert!(parse_key_values(p, "c 3").is_err());
        assert!(parse_key_values(p, "c = 3\nc = 4").is_err());
    }
}
