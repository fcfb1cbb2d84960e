use std::path::Path;

use serde_json::Value;

use super::{preset, HarnessError, Scenario};

/// Recursively overlays `over` on `base`: tables merge key by key, every
/// other value replaces the base value.
pub fn merge_overrides(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_overrides(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses a TOML scenario file. An optional top-level `preset = "<name>"`
/// selects the base scenario (otherwise [`Scenario::default`]); every other
/// key overrides the matching scenario field. See the README for the schema.
pub fn load_config(text: &str) -> Result<Scenario, HarnessError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut over = serde_json::to_value(&table).map_err(|e| HarnessError::Config(e.to_string()))?;
    let base = match over.as_object_mut().and_then(|o| o.remove("preset")) {
        Some(Value::String(name)) => preset(&name)?,
        Some(other) => return Err(HarnessError::Config(format!("preset must be a string, got {other}"))),
        None => Scenario::default(),
    };
    let mut value = serde_json::to_value(&base).map_err(|e| HarnessError::Config(e.to_string()))?;
    merge_overrides(&mut value, over);
    let s: Scenario = serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))?;
    s.params.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    s.config.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(s)
}

/// [`load_config`] on a file.
pub fn load_config_file(path: &Path) -> Result<Scenario, HarnessError> {
    load_config(&std::fs::read_to_string(path)?)
}
