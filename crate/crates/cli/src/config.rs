//! Layered settings: built-in defaults, then the subcommand's table from the
//! TOML config file, then command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::{CliError, Result};

pub fn load(path: Option<&Path>) -> Result<toml::Table> {
    let Some(path) = path else {
        return Ok(toml::Table::new());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    text.parse::<toml::Table>().map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
}

pub fn top_level_usize(table: &toml::Table, key: &str) -> Result<Option<usize>> {
    match table.get(key) {
        None => Ok(None),
        Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
        Some(other) => Err(CliError::Validation(format!("config key {key} must be a non-negative integer, got {other}"))),
    }
}

fn overlay(base: &mut Value, top: Value, origin: &str) -> Result<()> {
    let (Value::Object(base), Value::Object(top)) = (base, top) else {
        return Err(CliError::Validation(format!("{origin} must be a table")));
    };
    for (k, v) in top {
        if !base.contains_key(&k) {
            return Err(CliError::Validation(format!("unknown key {k:?} in {origin}")));
        }
        if !v.is_null() {
            base.insert(k, v);
        }
    }
    Ok(())
}

/// Merge `defaults`, then each layer in order, skipping unset values.
pub fn resolve<T: Serialize + DeserializeOwned>(defaults: &T, layers: &[(&str, Value)]) -> Result<T> {
    let mut v = serde_json::to_value(defaults)?;
    for (origin, layer) in layers {
        overlay(&mut v, layer.clone(), origin)?;
    }
    serde_json::from_value(v).map_err(|e| CliError::Validation(format!("invalid setting: {e}")))
}

/// The usual three layers for one subcommand.
pub fn layered<T: Serialize + DeserializeOwned>(defaults: &T, section: Option<&toml::Value>, flags: &T) -> Result<T> {
    let mut layers = Vec::with_capacity(2);
    if let Some(s) = section {
        layers.push(("config file", serde_json::to_value(s)?));
    }
    layers.push(("flags", serde_json::to_value(flags)?));
    resolve(defaults, &layers)
}

pub fn required<T: Clone>(value: &Option<T>, name: &str) -> Result<T> {
    value.clone().ok_or_else(|| CliError::Validation(format!("missing required setting --{name}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
    struct S {
        a: Option<f64>,
        b: Option<String>,
        c: Option<u64>,
    }

    #[test]
    fn flags_beat_config_beat_defaults() {
        let defaults = S { a: Some(1.0), b: Some("x".into()), c: Some(3) };
        let section: toml::Value = "a = 2\nb = \"y\"".parse::<toml::Table>().unwrap().into();
        let flags = S { a: Some(5.0), ..S::default() };
        let r = layered(&defaults, Some(&section), &flags).unwrap();
        assert_eq!(r, S { a: Some(5.0), b: Some("y".into()), c: Some(3) });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let section: toml::Value = "zeta = 1".parse::<toml::Table>().unwrap().into();
        assert!(layered(&S::default(), Some(&section), &S::default()).is_err());
        let section: toml::Value = "a = \"text\"".parse::<toml::Table>().unwrap().into();
        assert!(layered(&S::default(), Some(&section), &S::default()).is_err());
    }
}
