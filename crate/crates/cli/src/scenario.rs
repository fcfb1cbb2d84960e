use std::path::Path;

use hmflow_core::harness::{load_config, merge_overrides, Scenario};
use serde_json::Value;

/// Builds the scenario from an optional config file, an optional preset name
/// (taking precedence over a `preset` key in the file) and `key.path=value`
/// overrides whose values use TOML syntax.
pub fn resolve(config: Option<&Path>, preset: Option<&str>, sets: &[String]) -> Result<Scenario, String> {
    let mut table: toml::Table = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => toml::Table::new(),
    };
    if let Some(name) = preset {
        table.insert("preset".into(), toml::Value::String(name.into()));
    }
    let base = load_config(&toml::to_string(&table).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    if sets.is_empty() {
        return Ok(base);
    }
    let mut value = serde_json::to_value(&base).map_err(|e| e.to_string())?;
    for set in sets {
        merge_overrides(&mut value, parse_set(set)?);
    }
    let s: Scenario = serde_json::from_value(value).map_err(|e| format!("--set: {e}"))?;
    s.params.validate().map_err(|e| e.to_string())?;
    s.config.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

/// `a.b.c=value` into `{"a": {"b": {"c": value}}}`.
fn parse_set(set: &str) -> Result<Value, String> {
    let (path, raw) = set.split_once('=').ok_or_else(|| format!("--set {set:?}: expected KEY=VALUE"))?;
    let parsed: toml::Table = toml::from_str(&format!("v = {raw}"))
        .or_else(|_| toml::from_str(&format!("v = {:?}", raw)))
        .map_err(|e| format!("--set {set:?}: {e}"))?;
    let mut value = serde_json::to_value(&parsed["v"]).map_err(|e| e.to_string())?;
    for key in path.trim().rsplit('.') {
        if key.is_empty() {
            return Err(format!("--set {set:?}: empty key"));
        }
        value = Value::Object([(key.to_string(), value)].into_iter().collect());
    }
    Ok(value)
}
