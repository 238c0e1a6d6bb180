//! Flat TOML config file whose keys are the long flag names. Values use the
//! same syntax as on the command line; arrays are joined with commas.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "z",
    "p-weight",
    "kind",
    "transform",
    "poly-a",
    "bound",
    "n-max-floor",
    "si-denominator",
    "step",
    "seed",
    "up",
    "down",
    "n-max",
    "u-max",
    "d-max",
    "u-range",
    "d-range",
    "scorer",
    "out-dir",
    "output",
    "z-values",
    "p-values",
    "kinds",
    "transforms",
    "profiles",
    "events",
    "cadence",
    "scorers",
    "trajectory",
    "report",
];

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

fn flatten(key: &str, value: &toml::Value) -> Result<String> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|v| flatten(key, v))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => bail!("config key `{key}` must be a string, number or array"),
    })
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse()?;
        let mut values = BTreeMap::new();
        for (key, value) in &table {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("unknown config key `{key}`");
            }
            values.insert(key.clone(), flatten(key, value)?);
        }
        Ok(Self { values })
    }

    /// The flag value if given, otherwise the config value parsed as `T`.
    pub fn pick<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|raw| {
                raw.parse::<T>()
                    .map_err(|e| anyhow!("invalid --{key} `{raw}` in config: {e}"))
            })
            .transpose()
    }

    pub fn pick_or<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.pick(key, flag)?.unwrap_or(default))
    }

    /// Comma-separated list from a flag or the config.
    pub fn pick_list<T>(&self, key: &str, flag: Option<Vec<T>>) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values.get(key).map(|raw| parse_list(key, raw)).transpose()
    }
}

pub fn parse_list<T>(key: &str, raw: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow!("invalid --{key} item `{s}`: {e}")))
        .collect()
}
