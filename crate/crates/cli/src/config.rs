//! Flat `key = value` run configuration. Precedence: command-line flag, then
//! `UEGLAB_BUDGET` (budget only), then the config file, then defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use serde::Serialize;

use crate::error::CliError;

pub const BUDGET_ENV: &str = "UEGLAB_BUDGET";

/// Everything a run depends on. Keys are sorted, so the text form is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self { command: command.into(), values: BTreeMap::new() }
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<BTreeMap<String, String>, CliError> {
        let mut out = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", no + 1)))?;
            out.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("command = {}\n", self.command);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    #[cfg(test)]
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut values = Self::parse(text)?;
        let command = values.remove("command").ok_or_else(|| CliError::Usage("config has no command".into()))?;
        Ok(Self { command, values })
    }

    /// Layers file values, the budget variable and explicit flags.
    pub fn resolve(
        command: &str,
        file: Option<&str>,
        env_budget: Option<String>,
        flags: Vec<(&'static str, Option<String>)>,
    ) -> Result<Self, CliError> {
        let mut cfg = Self::new(command);
        if let Some(text) = file {
            cfg.values = Self::parse(text)?;
            cfg.values.remove("command");
        }
        if let Some(b) = env_budget {
            cfg.values.insert("budget".into(), b);
        }
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.values.insert(k.into(), v);
            }
        }
        Ok(cfg)
    }

    /// Reads `key`, recording `default` so that artifacts show the value used.
    pub fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        match self.values.get(key) {
            Some(v) => v.parse().map_err(|e| CliError::Usage(format!("bad value for {key}: '{v}' ({e})"))),
            None => {
                self.values.insert(key.into(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.values.get(key).ok_or_else(|| CliError::Usage(format!("missing required setting '{key}'")))?;
        v.parse().map_err(|e| CliError::Usage(format!("bad value for {key}: '{v}' ({e})")))
    }

    pub fn get_str(&mut self, key: &str, default: &str) -> String {
        self.values.entry(key.into()).or_insert_with(|| default.into()).clone()
    }

    pub fn get_list<T: FromStr>(&mut self, key: &str, default: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        self.get_str(key, default)
            .split(',')
            .map(|x| x.trim().parse().map_err(|e| CliError::Usage(format!("bad entry '{x}' in {key} ({e})"))))
            .collect()
    }
}
