//! Flat key=value experiment configs with strict unknown-key rejection.
//!
//! A config file seeds the run; command-line flags override file values.
//! Unknown keys and malformed values are reported with their line number and
//! abort with the validation exit code.

use std::collections::BTreeMap;
use std::path::Path;

/// All recognized keys. Anything else in a config file is rejected.
const KNOWN_KEYS: &[&str] = &[
    "subcommand",
    "s",
    "p",
    "p_values",
    "m",
    "lambda",
    "lambda_cap",
    "l",
    "beta",
    "n_grid",
    "n_r",
    "refinements",
    "exponents",
    "eps",
    "w_exp",
    "f",
    "g",
    "f1",
    "f2",
    "scheme",
    "tol",
    "tol_outer",
    "max_iter",
    "damping",
    "n_levels",
    "k_max",
    "seed",
    "out_dir",
    "kind",
    "dump_matrix",
    "delta_min",
];

#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    map: BTreeMap<String, String>,
}

pub struct ConfigError {
    pub message: String,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            message: format!("cannot read config {}: {e}", path.display()),
        })?;
        let mut map = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError {
                    message: format!("line {line_no}: expected key=value, got '{raw_line}'"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError {
                    message: format!("line {line_no}: unknown key '{key}'"),
                });
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError {
                    message: format!("line {line_no}: duplicate key '{key}'"),
                });
            }
        }
        Ok(RawConfig { map })
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.map.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| ConfigError {
                message: format!("key '{key}': '{v}' is not a number"),
            }),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|_| ConfigError {
                message: format!("key '{key}': '{v}' is not a nonnegative integer"),
            }),
        }
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<u64>().map(Some).map_err(|_| ConfigError {
                message: format!("key '{key}': '{v}' is not a nonnegative integer"),
            }),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    let part = part.trim();
                    out.push(part.parse::<f64>().map_err(|_| ConfigError {
                        message: format!("key '{key}': '{part}' is not a number"),
                    })?);
                }
                Ok(Some(out))
            }
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    let part = part.trim();
                    out.push(part.parse::<usize>().map_err(|_| ConfigError {
                        message: format!("key '{key}': '{part}' is not an integer"),
                    })?);
                }
                Ok(Some(out))
            }
        }
    }

    /// Stable echo of the resolved configuration for the report.
    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.map
    }
}
