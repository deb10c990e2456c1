use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// Written next to every output. Equal manifests mean byte-identical outputs.
#[derive(Serialize)]
pub struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: Option<u64>,
    config_fingerprint: String,
    params: Value,
}

impl Manifest {
    pub fn new(command: &'static str, seed: Option<u64>, params: Value) -> Self {
        let canonical = serde_json::to_string(&(command, seed, &params)).expect("params serialize");
        Manifest {
            tool: "subsel",
            version: subsel::VERSION,
            command,
            seed,
            config_fingerprint: subsel::digest::sha256_hex(canonical.as_bytes()),
            params,
        }
    }

    /// `<output>.manifest.json`.
    pub fn write_beside(&self, output: &Path) -> anyhow::Result<()> {
        let mut name = output.file_name().map(OsString::from).unwrap_or_default();
        name.push(".manifest.json");
        self.write_to(&output.with_file_name(name))
    }

    pub fn write_to(&self, path: &Path) -> anyhow::Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(PathBuf::from(path), json)?;
        Ok(())
    }
}
