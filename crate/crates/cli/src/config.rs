//! Layered settings: flags, then the `--config` file, then defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Parsed `key = value` file. Keys are flag names without the leading
/// dashes; `_` and `-` are interchangeable.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, toml::Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            let key = key.replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config {}: unknown key `{key}`", path.display())));
            }
            values.insert(key, value);
        }
        Ok(FileConfig { values })
    }

    fn text(key: &str, v: &toml::Value) -> Result<String, CliError> {
        match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            toml::Value::Boolean(b) => Ok(b.to_string()),
            other => Err(CliError::Usage(format!("config key `{key}`: unsupported value {other}"))),
        }
    }

    fn parse<T: FromStr>(key: &str, s: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        s.trim()
            .parse()
            .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
    }

    /// `flag` if given, else the file value, else `default`.
    pub fn value<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.optional(flag, key)?.unwrap_or(default))
    }

    pub fn optional<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => Self::parse(key, &Self::text(key, v)?).map(Some),
        }
    }

    /// List form. A file value may be an array or a comma-separated
    /// string; an explicit empty array stays empty.
    pub fn list<T: FromStr>(&self, flag: Vec<T>, key: &str, default: Vec<T>) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        if !flag.is_empty() {
            return Ok(flag);
        }
        let Some(v) = self.values.get(key) else {
            return Ok(default);
        };
        let items: Vec<String> = match v {
            toml::Value::Array(a) => a.iter().map(|x| Self::text(key, x)).collect::<Result<_, _>>()?,
            scalar => Self::text(key, scalar)?
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::to_string)
                .collect(),
        };
        items.iter().map(|s| Self::parse(key, s)).collect()
    }
}
