use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};
use ueglab_core::VERSION;

use crate::config::RunConfig;
use crate::error::CliError;

/// Writes artifacts into one directory, each carrying the resolved config and
/// library version. Nothing time- or host-dependent is written.
pub struct Artifacts {
    dir: PathBuf,
    config: RunConfig,
    plot: bool,
}

impl Artifacts {
    pub fn new(dir: PathBuf, config: RunConfig, plot: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, config, plot })
    }

    fn header(&self) -> String {
        let mut h = format!("# ueglab {VERSION}\n# command = {}\n", self.config.command);
        for (k, v) in &self.config.values {
            h.push_str(&format!("# {k} = {v}\n"));
        }
        h
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), body)?;
        Ok(())
    }

    /// `{version, config, status, result}` as pretty JSON; returns the text.
    pub fn json(&mut self, name: &str, status: &str, result: &impl Serialize) -> Result<String, CliError> {
        let doc = json!({
            "version": VERSION,
            "config": self.config,
            "status": status,
            "result": serde_json::to_value(result)?,
        });
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        self.write(&format!("{name}.json"), &text)?;
        // Replayable with --config.
        let replay = self.config.to_text();
        self.write(&format!("{name}.config"), &replay)?;
        Ok(text)
    }

    /// CSV body prefixed by `#` comment lines holding the config.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = self.header() + body;
        self.write(&format!("{name}.csv"), &text)
    }

    /// Two-column `x,y` file for external plotting, written with `--plot-data`.
    pub fn plot(&mut self, name: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)]) -> Result<(), CliError> {
        if !self.plot {
            return Ok(());
        }
        let mut body = format!("{xlabel},{ylabel}\n");
        for (x, y) in points {
            body.push_str(&format!("{x:?},{y:?}\n"));
        }
        self.csv(&format!("{name}.plot"), &body)
    }
}

pub fn value<T: Serialize>(x: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(x)?)
}
