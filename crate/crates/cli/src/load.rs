//! Reading the TOML run config and applying command-line overrides.

use std::fmt;
use std::path::Path;

use anyhow::Context;
use geowalk_core::config::RunConfig;
use toml::{Table, Value};

/// Invalid configuration text or override.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// `section.key=value`, with `value` read as a TOML literal when possible.
#[derive(Clone, Debug, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl Override {
    pub fn parse(raw: &str) -> Result<Self, ConfigError> {
        let (key, value) =
            raw.split_once('=').ok_or_else(|| ConfigError(format!("override `{raw}` is not of the form key=value")))?;
        let path: Vec<String> = key.trim().split('.').map(|s| s.trim().to_string()).collect();
        if path.iter().any(String::is_empty) {
            return Err(ConfigError(format!("override key `{key}` has an empty component")));
        }
        let value = value.trim();
        let parsed = format!("v = {value}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(value.to_string()));
        Ok(Override { path, value: parsed })
    }

    pub fn new(key: &str, value: Value) -> Self {
        Override { path: key.split('.').map(str::to_string).collect(), value }
    }

    fn apply(&self, table: &mut Table) -> Result<(), ConfigError> {
        let (last, parents) = self.path.split_last().expect("override paths are nonempty");
        let mut current = table;
        for part in parents {
            let entry = current.entry(part.clone()).or_insert_with(|| Value::Table(Table::new()));
            current = entry
                .as_table_mut()
                .ok_or_else(|| ConfigError(format!("override `{}`: `{part}` is not a section", self.path.join("."))))?;
        }
        current.insert(last.clone(), self.value.clone());
        Ok(())
    }
}

/// A parsed config together with its canonical text for output headers.
pub struct Loaded {
    pub config: RunConfig,
    pub resolved: String,
}

pub fn load(path: &Path, overrides: &[Override]) -> anyhow::Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let name = path.display().to_string();
    let config = parse(&text, overrides).map_err(|e| ConfigError(format!("{name}: {}", e.0)))?;
    let resolved = toml::to_string(&config).map_err(|e| ConfigError(format!("cannot render config: {e}")))?;
    Ok(Loaded { config, resolved })
}

/// Parses config text; errors in the original text carry line and column.
pub fn parse(text: &str, overrides: &[Override]) -> Result<RunConfig, ConfigError> {
    let describe = |e: toml::de::Error| ConfigError(e.to_string().trim_end().to_string());
    if overrides.is_empty() {
        return toml::from_str(text).map_err(describe);
    }
    let mut table: Table = text.parse().map_err(describe)?;
    for o in overrides {
        o.apply(&mut table)?;
    }
    let merged = toml::to_string(&table).map_err(|e| ConfigError(e.to_string()))?;
    toml::from_str(&merged).map_err(|e| ConfigError(format!("after applying overrides: {}", describe(e))))
}
