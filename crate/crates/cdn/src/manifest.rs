//! Run manifests: resolved settings, input digests and outputs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Default, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    /// Every resolved flag and config value.
    pub settings: BTreeMap<String, String>,
    /// Input path to hex SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub status: String,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Manifest {
        Manifest { command: command.into(), seed, status: "running".into(), ..Manifest::default() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.settings.insert(key.into(), value.to_string());
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let d = crate::io::digest(path)?;
        self.inputs.insert(path.display().to_string(), d);
        Ok(())
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.into());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(&path, s).with_context(|| format!("writing {}", path.display()))
    }
}
