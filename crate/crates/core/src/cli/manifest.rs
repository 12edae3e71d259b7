//! Run manifests: enough to repeat a run exactly.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::{write, CliResult, ResultExt};

/// `git describe` of the build, or the crate version outside a checkout.
pub const VERSION: &str = env!("SKETCHREWARD_VERSION");

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    /// Effective settings after every override, in the config file format.
    pub config: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub inputs: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: Option<u128>,
}

impl Manifest {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.into(),
            version: VERSION,
            argv: std::env::args().collect(),
            seed: None,
            config: String::new(),
            params: BTreeMap::new(),
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            started_unix_ms: now_ms(),
            finished_unix_ms: None,
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.into(), path.display().to_string());
    }

    pub fn artifact(&mut self, name: &str, path: &Path) {
        self.artifacts
            .insert(name.into(), path.display().to_string());
    }

    pub fn param(&mut self, name: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).expect("parameters serialise");
        self.params.insert(name.into(), v);
    }

    pub fn finish(mut self, path: &Path) -> CliResult<()> {
        self.finished_unix_ms = Some(now_ms());
        let text = serde_json::to_string_pretty(&self).internal()?;
        write(path, &(text + "\n"))
    }
}
