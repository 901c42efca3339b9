use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Record of one command run, written next to its outputs. It carries no
/// timestamps, so identical runs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input_spec: Option<String>,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, input_spec: Option<&Path>, parameters: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            input_spec: input_spec.map(|p| p.display().to_string()),
            parameters,
            outputs: Vec::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Collects artifacts for one run in an output directory.
pub struct ArtifactWriter {
    dir: PathBuf,
    manifest: RunManifest,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, manifest: RunManifest) -> anyhow::Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn set_seed(&mut self, seed: Option<u64>) {
        self.manifest.seed = seed;
    }

    /// Writes `<command>.manifest.json` and returns its path.
    pub fn finish(mut self) -> anyhow::Result<PathBuf> {
        self.manifest.outputs.sort();
        let path = self
            .dir
            .join(format!("{}.manifest.json", self.manifest.command));
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
