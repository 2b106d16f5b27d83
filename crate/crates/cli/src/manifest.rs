//! Run directories and their manifests.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use aomp_core::experiments::SolverSpec;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::config::FileConfig;

pub const MANIFEST: &str = "manifest.json";
pub const RESOLVED: &str = "resolved.toml";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: FileConfig,
    pub solvers: Vec<SolverSpec>,
    pub seed: u64,
    pub version: String,
    /// Relative to the run directory.
    pub outputs: Vec<PathBuf>,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
}

/// One output directory, named `<UTC time>-<command>-s<seed>`.
pub struct Run {
    pub dir: PathBuf,
    command: String,
    seed: u64,
    started: DateTime<Utc>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn create(root: &Path, command: &str, seed: u64) -> Result<Self> {
        let started = Utc::now();
        let stem = format!("{}-{command}-s{seed}", started.format("%Y%m%dT%H%M%S%.3fZ"));
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let mut dir = root.join(&stem);
        let mut n = 1;
        while dir.exists() {
            dir = root.join(format!("{stem}-{n}"));
            n += 1;
        }
        fs::create_dir(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir,
            command: command.to_string(),
            seed,
            started,
            outputs: Vec::new(),
        })
    }

    /// Opens `name` for writing and records it as an output.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<fs::File>> {
        let path = self.path(name);
        let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    /// Records `name` as an output and returns its path.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(PathBuf::from(name));
        self.dir.join(name)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        use std::io::Write;
        writeln!(w)?;
        Ok(())
    }

    /// Writes `resolved.toml` and `manifest.json`.
    pub fn finish(mut self, config: &FileConfig, solvers: Vec<SolverSpec>) -> Result<PathBuf> {
        let resolved = self.path(RESOLVED);
        fs::write(&resolved, config.to_toml()?)
            .with_context(|| format!("writing {}", resolved.display()))?;
        let manifest = RunManifest {
            command: self.command.clone(),
            config: config.clone(),
            solvers,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs.clone(),
            started: self.started,
            finished: Utc::now(),
        };
        let path = self.dir.join(MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        log::info!("run written to {}", self.dir.display());
        Ok(self.dir)
    }
}
