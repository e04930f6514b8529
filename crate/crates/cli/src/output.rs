use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pagediff::annotate::TemplateDigest;
use serde::Serialize;

/// Everything that shapes a run's outputs. `--jobs` is left out on purpose:
/// the worker count never changes a result.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<String>,
    pub sample_pct: Option<f64>,
    pub seed: u64,
    pub chunk_size: usize,
    pub budget_ms: u64,
    pub rules_version: String,
    pub extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Serialize)]
struct Entry {
    file: String,
    /// Size and hash are left out for files that carry wall-clock timings.
    #[serde(skip_serializing_if = "Option::is_none")]
    bytes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sha256: Option<String>,
    deterministic: bool,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    outputs: &'a [Entry],
}

/// Output directory that records every file it writes in `manifest.json`.
pub struct Outputs {
    dir: PathBuf,
    entries: Vec<Entry>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn bytes(&mut self, name: &str, data: &[u8], deterministic: bool) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, data).with_context(|| format!("cannot write {}", path.display()))?;
        self.register(name, deterministic)
    }

    /// Records a file that was written by someone else.
    pub fn register(&mut self, name: &str, deterministic: bool) -> Result<()> {
        let path = self.path(name);
        let data = fs::read(&path).with_context(|| format!("cannot read back {}", path.display()))?;
        self.entries.retain(|e| e.file != name);
        self.entries.push(Entry {
            file: name.to_owned(),
            bytes: deterministic.then_some(data.len() as u64),
            sha256: deterministic.then(|| TemplateDigest::of_bytes(&data).to_hex()),
            deterministic,
        });
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T, deterministic: bool) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(value)?;
        data.push(b'\n');
        self.bytes(name, &data, deterministic)
    }

    /// CSV with a header even when there are no rows.
    pub fn table<H: AsRef<[u8]>>(
        &mut self,
        name: &str,
        header: &[H],
        rows: &[Vec<String>],
        deterministic: bool,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let data = w.into_inner().context("csv buffer")?;
        self.bytes(name, &data, deterministic)
    }

    pub fn finish(mut self, config: &RunConfig) -> Result<()> {
        self.entries.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            outputs: &self.entries,
        };
        let mut data = serde_json::to_vec_pretty(&manifest)?;
        data.push(b'\n');
        let path = self.path("manifest.json");
        fs::write(&path, data).with_context(|| format!("cannot write {}", path.display()))
    }
}
