//! Layered configuration: built-in defaults, then a JSON file, then flags.

use std::path::Path;

use drlc_core::agents::Algorithm;
use drlc_core::envs::{EnvConfig, RewardKind, ScenarioName};
use drlc_core::Error;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub algo: Option<Algorithm>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub repeat: Option<usize>,
    pub runs: Option<usize>,
    /// Environment config keys, `scenario` included.
    pub env: Option<Map<String, Value>>,
    pub dqn: Option<Value>,
    pub trpo: Option<Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn scenario(&self) -> CliResult<Option<ScenarioName>> {
        match self.env.as_ref().and_then(|e| e.get("scenario")) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.parse()?)),
            Some(v) => Err(CliError::Usage(format!("env.scenario must be a string, got {v}"))),
        }
    }
}

/// Environment flags shared by the commands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct EnvFlags {
    /// baseline or modified
    #[arg(long)]
    pub reward: Option<RewardKind>,
    /// Number of scripted traffic vehicles.
    #[arg(long)]
    pub traffic: Option<usize>,
    /// m/s below which the immobility counter runs.
    #[arg(long)]
    pub min_speed: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
}

/// Environment overrides from the file with the flags on top, minus the
/// scenario, which is chosen separately.
pub fn env_overrides(file: &FileConfig, flags: &EnvFlags) -> Map<String, Value> {
    let mut patch = file.env.clone().unwrap_or_default();
    patch.remove("scenario");
    if let Some(r) = flags.reward {
        patch.insert("reward_kind".into(), Value::String(r.to_string()));
    }
    if let Some(t) = flags.traffic {
        patch.insert("traffic_count".into(), t.into());
    }
    if let Some(v) = flags.min_speed {
        patch.insert("min_speed".into(), v.into());
    }
    if let Some(v) = flags.max_steps {
        patch.insert("max_steps".into(), v.into());
    }
    patch
}

/// Scenario defaults with `overrides` applied.
pub fn env_config(scenario: ScenarioName, overrides: &Map<String, Value>) -> CliResult<EnvConfig> {
    EnvConfig::new(scenario)
        .merged(&Value::Object(overrides.clone()))
        .map_err(|e| match e {
            Error::InvalidArgument(msg) => CliError::Usage(msg),
            Error::Json(e) => CliError::Usage(format!("invalid env config: {e}")),
            other => other.into(),
        })
}

pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (n, m) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    let (n, m) = (parse(n)?, parse(m)?);
    if n == 0 || m == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((n, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("5x5"), Ok((5, 5)));
        assert_eq!(parse_grid("3X7"), Ok((3, 7)));
        assert!(parse_grid("5").is_err());
        assert!(parse_grid("0x5").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = serde_json::from_str(
            r#"{"env": {"scenario": "racetrack", "traffic_count": 2, "max_steps": 50}}"#,
        )
        .unwrap();
        let flags = EnvFlags {
            traffic: Some(7),
            ..Default::default()
        };
        let patch = env_overrides(&file, &flags);
        assert!(!patch.contains_key("scenario"));
        let cfg = env_config(ScenarioName::Intersection, &patch).unwrap();
        assert_eq!(cfg.scenario, ScenarioName::Intersection);
        assert_eq!(cfg.traffic_count, 7);
        assert_eq!(cfg.max_steps, 50);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"itterations": 3}"#).is_err());
        let patch = Map::from_iter([("bogus".to_string(), Value::from(1))]);
        assert!(matches!(env_config(ScenarioName::Merge, &patch), Err(CliError::Usage(_))));
    }
}
