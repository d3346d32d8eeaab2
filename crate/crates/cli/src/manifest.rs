//! Run provenance written next to every training and evaluation output.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use drlc_core::envs::{load_scenario, Scenario, ScenarioName};
use drlc_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Fully resolved configuration; enough to rerun the command.
    pub config: Value,
    pub seed: u64,
    /// Content hash per scenario layout used.
    pub fixtures: BTreeMap<String, String>,
    pub checkpoints: Vec<String>,
    pub outputs: Vec<String>,
    pub status: String,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn begin(command: &str, argv: &[String], config: Value, seed: u64) -> Self {
        RunManifest {
            command: command.into(),
            argv: argv.to_vec(),
            config,
            seed,
            fixtures: BTreeMap::new(),
            checkpoints: Vec::new(),
            outputs: Vec::new(),
            status: "running".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            started_at: now(),
            finished_at: String::new(),
        }
    }

    pub fn record_fixture(&mut self, scenario: &Scenario) -> CliResult<()> {
        self.fixtures
            .insert(scenario.name.to_string(), fixture_hash(scenario)?);
        Ok(())
    }

    pub fn finish(&mut self, dir: &Path, status: &str) -> CliResult<()> {
        self.status = status.into();
        self.finished_at = now();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid manifest {}: {e}", path.display())))
    }

    /// Fails when a recorded layout differs from the one currently loaded.
    pub fn verify_fixtures(&self) -> CliResult<()> {
        for (name, want) in &self.fixtures {
            let scenario = load_scenario(name.parse::<ScenarioName>()?)?;
            let got = fixture_hash(&scenario)?;
            if &got != want {
                return Err(CliError::Mismatch(format!(
                    "scenario {name} changed since the run: {got} != {want}"
                )));
            }
        }
        Ok(())
    }
}

/// Git blob-style SHA-256 of the scenario's fixture document.
pub fn fixture_hash(scenario: &Scenario) -> CliResult<String> {
    let text = scenario.to_fixture_json()?;
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()));
    h.update(text.as_bytes());
    Ok(format!("sha256:{:x}", h.finalize()))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}
