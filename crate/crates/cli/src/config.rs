//! Config files mirror the command-line flags: a JSON object whose keys are
//! the long flag names. Flags given on the command line win.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

fn is_unset(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::Array(a) => a.is_empty(),
        _ => false,
    }
}

/// Overlays the set fields of `flags` on the contents of `path`.
pub fn merge<T>(flags: T, path: Option<&Path>) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Some(path) = path else {
        return Ok(flags);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{} is not a JSON object: {e}", path.display())))?;
    let known = to_object(&T::default())?;
    if let Some(bad) = file.keys().find(|k| !known.contains_key(*k)) {
        return Err(CliError::Config(format!(
            "unknown key {bad:?} in {}",
            path.display()
        )));
    }
    let mut merged = file;
    for (k, v) in to_object(&flags)? {
        if !is_unset(&v) {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn to_object<T: Serialize>(x: &T) -> Result<Map<String, Value>, CliError> {
    match serde_json::to_value(x).map_err(|e| CliError::Config(e.to_string()))? {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Config(
            "arguments did not serialize to an object".into(),
        )),
    }
}
