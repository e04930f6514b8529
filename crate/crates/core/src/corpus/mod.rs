//! Versioned page corpora: loading, exclusion filtering, per-site pipeline
//! runs, the digest index and dedup statistics.

mod index;
mod ingest;
mod process;
mod redirect;
mod stats;

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufRead};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::AlignError;
use crate::html;

pub use index::{ClusterKey, Posting, TemplateIndex};
pub use ingest::{ingest, Criterion, Exclusion, ExclusionAudit, IngestConfig, Ingested, SiteHistory};
pub use process::{process_corpus, process_site, DiffRecord, ProcessConfig, SiteResult, VersionRecord};
pub use redirect::{detect_redirect, Redirect};
pub use stats::{
    cluster_by, near_duplicate_pct, near_duplicate_stats, timing_histogram, Cluster, ClusterReport, DedupStats,
    Matching, SizeSummary, TimingBucket,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("invalid ingest configuration: {0}")]
    Config(String),
    #[error("site {site_id}: {source}")]
    Align {
        site_id: String,
        #[source]
        source: AlignError,
    },
    #[error("index file {path}: {message}")]
    Index { path: String, message: String },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// One fetched version of a site's homepage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageVersion {
    pub site_id: String,
    pub fetched_at: DateTime<Utc>,
    pub html: String,
    pub tags: BTreeSet<String>,
    pub has_embedded_images: bool,
    pub title: String,
    pub has_script: bool,
}

impl PageVersion {
    /// Extracts title, scripting and image presence from the markup.
    pub fn new(site_id: impl Into<String>, fetched_at: DateTime<Utc>, html: impl Into<String>) -> Self {
        let html = html.into();
        PageVersion {
            site_id: site_id.into(),
            fetched_at,
            title: html::extract_title(&html),
            has_script: html::has_tag(&html, "script"),
            has_embedded_images: html::has_tag(&html, "img"),
            tags: BTreeSet::new(),
            html,
        }
    }

    pub fn with_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.tags = tags.into_iter().map(Into::into).collect();
        self
    }

    pub fn from_record(rec: Record) -> Result<Self, String> {
        if rec.site_id.trim().is_empty() {
            return Err("empty site_id".into());
        }
        let at = parse_timestamp(&rec.fetched_at).ok_or_else(|| format!("unparseable fetched_at {:?}", rec.fetched_at))?;
        let mut v = PageVersion::new(rec.site_id, at, rec.html).with_tags(rec.tags);
        if let Some(img) = rec.has_embedded_images {
            v.has_embedded_images = img;
        }
        Ok(v)
    }

    pub fn to_record(&self) -> Record {
        Record {
            site_id: self.site_id.clone(),
            fetched_at: self.fetched_at.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true),
            html: self.html.clone(),
            tags: self.tags.iter().cloned().collect(),
            has_embedded_images: Some(self.has_embedded_images),
        }
    }
}

/// Interchange form: one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub site_id: String,
    pub fetched_at: String,
    pub html: String,
    #[serde(default)]
    pub tags: Vec<String>,
    /// Detected from `<img>` tags when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub has_embedded_images: Option<bool>,
}

/// RFC 3339, naive ISO-8601 (taken as UTC), bare dates, compact
/// `20220405T120000Z` file-name stamps, or Unix seconds.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y%m%dT%H%M%SZ", "%Y-%m-%dT%H-%M-%SZ"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc());
    }
    s.parse::<i64>().ok().and_then(|n| DateTime::from_timestamp(n, 0))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Malformed {
    pub location: String,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct Loaded {
    pub records: Vec<PageVersion>,
    pub malformed: Vec<Malformed>,
}

pub fn load_jsonl<R: BufRead>(reader: R, source: &str) -> io::Result<Loaded> {
    let mut out = Loaded::default();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Record>(&line)
            .map_err(|e| e.to_string())
            .and_then(PageVersion::from_record);
        match parsed {
            Ok(v) => out.records.push(v),
            Err(error) => {
                let location = format!("{source}:{}", n + 1);
                log::warn!("skipping malformed record at {location}: {error}");
                out.malformed.push(Malformed { location, error });
            }
        }
    }
    Ok(out)
}

/// `site_id/<timestamp>.html`, with optional `site_id/tags.txt` (one tag per
/// line).
pub fn load_dir(root: &Path) -> Result<Loaded, CorpusError> {
    let mut out = Loaded::default();
    let mut sites: Vec<_> = fs::read_dir(root)
        .map_err(|e| CorpusError::io(root, e))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    sites.sort();
    for dir in sites {
        let site_id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tags: Vec<String> = match fs::read_to_string(dir.join("tags.txt")) {
            Ok(t) => t.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect(),
            Err(_) => Vec::new(),
        };
        let mut files: Vec<_> = fs::read_dir(&dir)
            .map_err(|e| CorpusError::io(&dir, e))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("html") || x.eq_ignore_ascii_case("htm")))
            .collect();
        files.sort();
        for file in files {
            let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let Some(at) = parse_timestamp(&stem) else {
                let location = file.display().to_string();
                log::warn!("skipping {location}: file name is not a timestamp");
                out.malformed.push(Malformed {
                    location,
                    error: format!("unparseable timestamp {stem:?}"),
                });
                continue;
            };
            let bytes = fs::read(&file).map_err(|e| CorpusError::io(&file, e))?;
            let html = String::from_utf8_lossy(&bytes).into_owned();
            out.records.push(PageVersion::new(site_id.clone(), at, html).with_tags(tags.iter().cloned()));
        }
    }
    Ok(out)
}

/// A JSONL file or a site directory tree.
pub fn load_path(path: &Path) -> Result<Loaded, CorpusError> {
    if path.is_dir() {
        return load_dir(path);
    }
    let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    load_jsonl(io::BufReader::new(file), &path.display().to_string()).map_err(|e| CorpusError::io(path, e))
}

pub fn write_jsonl<W: io::Write>(mut w: W, versions: &[PageVersion]) -> io::Result<()> {
    for v in versions {
        serde_json::to_writer(&mut w, &v.to_record())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
