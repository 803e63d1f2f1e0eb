//! Flag and config-file handling.
//!
//! Configuration is line-oriented `key = value` UTF-8; command-line flags
//! override file values. Keys equal the flag spellings without the leading
//! dashes.

use std::collections::HashMap;

use matprint_core::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: HashMap<String, String>,
}

impl RawConfig {
    pub fn parse(args: &[String]) -> Result<Self> {
        let mut flags: HashMap<String, String> = HashMap::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let Some(key) = arg.strip_prefix("--") else {
                return Err(Error::Argument(format!("unexpected argument '{arg}'")));
            };
            if key == "quick" {
                flags.insert(key.to_string(), "true".to_string());
                i += 1;
                continue;
            }
            let value = args.get(i + 1).ok_or_else(|| {
                Error::Argument(format!("flag --{key} expects a value"))
            })?;
            flags.insert(key.to_string(), value.clone());
            i += 2;
        }

        let mut values = HashMap::new();
        if let Some(path) = flags.get("config") {
            let text = std::fs::read_to_string(path)?;
            for (no, line) in text.lines().enumerate() {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let (k, v) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                    offset: 0,
                    line: no + 1,
                    message: format!("config line is not 'key = value': '{line}'"),
                })?;
                values.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        values.extend(flags);
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Argument(format!("missing required flag --{key}")))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::Argument(format!("bad value for --{key}: {e}")))
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::Argument(format!("bad value for --{key}: {e}")))
            })
            .transpose()
    }

    pub fn get_flag(&self, key: &str) -> bool {
        matches!(self.get(key), Some("true") | Some("1") | Some("yes"))
    }

    /// Comma-separated real list.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some("") => Ok(Some(vec![])),
            Some(v) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|e| Error::Argument(format!("bad value in --{key}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }
}
