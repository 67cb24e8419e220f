//! `key=value` config files as a flag source.
//!
//! Keys are the long flag names without the leading dashes
//! (`cutoff-hz=2.0`, `scale=0.000244140625`). Explicit command-line flags
//! take precedence over config values, which take precedence over defaults.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use penbeat::{Error, Result};

#[derive(Debug, Default)]
pub struct ConfigMap {
    values: HashMap<String, String>,
}

impl ConfigMap {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let content = fs::read_to_string(path)?;
        let mut values = HashMap::new();
        for (no, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "config line {}: expected key=value, got `{line}`",
                    no + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    /// CLI value if given, else the parsed config value, else `None`.
    pub fn opt<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("config key `{key}`: cannot parse `{raw}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.opt(cli, key)?.unwrap_or(default))
    }

    pub fn required<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<T> {
        self.opt(cli, key)?
            .ok_or_else(|| Error::Config(format!("--{key} is required (flag or config file)")))
    }

    /// True if the flag was passed or the config sets the key to `true`.
    pub fn flag(&self, cli: bool, key: &str) -> Result<bool> {
        if cli {
            return Ok(true);
        }
        match self.values.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(other) => Err(Error::Config(format!(
                "config key `{key}`: expected true/false, got `{other}`"
            ))),
        }
    }
}
