use std::path::Path;

use serde::Serialize;

use pipestab::config::RunConfig;
use pipestab::fsutil::write_atomic;

use crate::Run;

/// Record of one invocation, written next to its outputs.
#[derive(Serialize)]
pub struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    argv: Vec<String>,
    wall_time_s: f64,
    status: String,
    overrides: Vec<String>,
    outputs: Vec<String>,
    config: RunConfig,
}

impl Manifest {
    pub fn new(command: &'static str, argv: Vec<String>, run: &Run, wall_time_s: f64, status: String) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv,
            wall_time_s,
            status,
            overrides: run.overrides.clone(),
            outputs: run.outputs.iter().map(|p| p.display().to_string()).collect(),
            config: run.cfg.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> pipestab::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| pipestab::Error::Input(format!("manifest: {e}")))?;
        write_atomic(path, text.as_bytes())
    }
}
