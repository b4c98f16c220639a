use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::Result;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Record of one run. Timing-dependent files are listed in `volatile` without a hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub args: Vec<String>,
    pub config: RunConfig,
    /// Input file path to sha256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to sha256.
    pub outputs: BTreeMap<String, String>,
    pub volatile: Vec<String>,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Output directory owned by one run.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    volatile: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            volatile: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Reads an input file and records its hash.
    pub fn read_input(&mut self, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path)?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(text.as_bytes()));
        Ok(text)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let bytes = contents.as_ref();
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Writes a file whose contents depend on wall-clock time.
    pub fn write_volatile(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents.as_ref())?;
        self.volatile.push(name.to_string());
        Ok(path)
    }

    /// Writes `manifest.json` and returns it.
    pub fn finish(
        self,
        command: &str,
        args: &[String],
        config: &RunConfig,
        error: Option<String>,
    ) -> Result<Manifest> {
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args: args.to_vec(),
            config: config.clone(),
            inputs: self.inputs,
            outputs: self.outputs,
            volatile: self.volatile,
            status: if error.is_none() { "ok" } else { "failed" }.to_string(),
            error,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}
