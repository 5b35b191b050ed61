//! TOML run configuration merged under command-line flags.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{config_err, CliResult};

/// Reads `path` as TOML into the option struct `T`, rejecting unknown keys.
/// Relative `dataset` and `attribution` paths are taken relative to the
/// file's directory.
pub fn load_config<T: DeserializeOwned + Serialize + Default>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table = toml::from_str(&text)
        .map_err(|e| config_err(format!("invalid config {}: {e}", path.display())))?;
    let known = match to_value(&T::default())? {
        Value::Object(map) => map,
        _ => Default::default(),
    };
    if let Some(key) = table.keys().find(|k| !known.contains_key(*k)) {
        return Err(config_err(format!(
            "unknown key `{key}` in {}",
            path.display()
        )));
    }
    let parsed: T = table
        .try_into()
        .map_err(|e| config_err(format!("invalid config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut value = to_value(&parsed)?;
    if let Value::Object(map) = &mut value {
        for key in ["dataset", "attribution"] {
            if let Some(Value::String(p)) = map.get_mut(key) {
                let pb = PathBuf::from(&*p);
                if pb.is_relative() {
                    *p = base.join(pb).to_string_lossy().into_owned();
                }
            }
        }
    }
    from_value(value)
}

/// Flags set in `cli` override the same keys of `file`.
pub fn merge<T: DeserializeOwned + Serialize>(file: Option<T>, cli: T) -> CliResult<T> {
    let Some(file) = file else { return Ok(cli) };
    let mut base = to_value(&file)?;
    if let (Value::Object(base), Value::Object(top)) = (&mut base, to_value(&cli)?) {
        for (k, v) in top {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    from_value(base)
}

/// Every referenced input file must exist.
pub fn check_paths(paths: &[&Option<PathBuf>]) -> CliResult<()> {
    for p in paths.iter().copied().flatten() {
        if !p.exists() {
            return Err(config_err(format!("{} does not exist", p.display())));
        }
    }
    Ok(())
}

fn to_value(v: &impl Serialize) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| config_err(e.to_string()))
}

fn from_value<T: DeserializeOwned>(v: Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| config_err(e.to_string()))
}
