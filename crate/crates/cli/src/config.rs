//! Flat `key=value` run configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Values read from a
//! file replace the corresponding command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: expected key=value, found {line:?}",
                    origin.display(),
                    i + 1
                ))
            })?;
            let key = key.trim().replace('-', "_");
            if entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(CliError::Usage(format!(
                    "{}:{}: duplicate key {key}",
                    origin.display(),
                    i + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Rejects keys the command does not understand.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        let unknown: Vec<&str> = self
            .entries
            .keys()
            .map(String::as_str)
            .filter(|k| !allowed.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "unknown config keys: {} (allowed: {})",
                unknown.join(", "),
                allowed.join(", ")
            )))
        }
    }

    /// Replaces `slot` with the parsed value of `key`, if present.
    pub fn apply<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<(), CliError>
    where
        T::Err: Display,
    {
        if let Some(raw) = self.entries.get(key) {
            *slot = raw
                .parse()
                .map_err(|e| CliError::Usage(format!("config key {key}: {raw:?}: {e}")))?;
        }
        Ok(())
    }

    /// Like [`ConfigFile::apply`] for optional settings; `none` clears them.
    pub fn apply_opt<T: FromStr>(&self, key: &str, slot: &mut Option<T>) -> Result<(), CliError>
    where
        T::Err: Display,
    {
        if let Some(raw) = self.entries.get(key) {
            *slot = if raw.eq_ignore_ascii_case("none") || raw.is_empty() {
                None
            } else {
                Some(
                    raw.parse()
                        .map_err(|e| CliError::Usage(format!("config key {key}: {raw:?}: {e}")))?,
                )
            };
        }
        Ok(())
    }
}

/// Renders `key=value` lines in the given order.
pub fn render(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}
