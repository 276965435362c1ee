//! Output directory bookkeeping and the run manifest.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("FGM_VERSION");

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Complete,
    Partial(String),
}

#[derive(Debug, Serialize)]
struct Artifact {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    status: String,
    seed: Option<u64>,
    config: &'a Value,
    artifacts: &'a [Artifact],
    /// Files whose content depends on wall-clock time; not checksummed.
    volatile: &'a [String],
}

/// Collects the files written by one invocation.
pub struct Run {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
    volatile: Vec<String>,
}

impl Run {
    pub fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir,
            artifacts: Vec::new(),
            volatile: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `bytes` to `name` and records its checksum.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, bytes).with_context(|| format!("cannot write {}", p.display()))?;
        self.record(name)
    }

    /// Records a file some library routine wrote into the run directory.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let p = self.path(name);
        let bytes = fs::read(&p).with_context(|| format!("cannot read back {}", p.display()))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: hex(&Sha256::digest(&bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn write_volatile(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, bytes).with_context(|| format!("cannot write {}", p.display()))?;
        self.volatile.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, subcommand: &str, config: &Value, status: &Status) -> Result<()> {
        let m = Manifest {
            tool: "fgm",
            version: VERSION,
            subcommand,
            status: match status {
                Status::Complete => "complete".into(),
                Status::Partial(r) => format!("partial: {r}"),
            },
            seed: config.get("seed").and_then(Value::as_u64),
            config,
            artifacts: &self.artifacts,
            volatile: &self.volatile,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        let p = self.path("manifest.json");
        fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
