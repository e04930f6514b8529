use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::index::TemplateIndex;
use super::ingest::SiteHistory;
use super::CorpusError;
use crate::align::{align_site, AlignmentConfig};
use crate::annotate::{build_templates, AnnotatedTemplate, RuleSet, Tally, TemplateDigest};
use crate::diff::{token_diff, DiffOptions, VersionId};
use crate::similarity::diff_similarity;
use crate::tokenize::tokenize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub align: AlignmentConfig,
    pub diff: DiffOptions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionRecord {
    pub version: VersionId,
    pub fetched_at: DateTime<Utc>,
    pub raw_digest: TemplateDigest,
    pub template_digest: TemplateDigest,
    pub has_script: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffRecord {
    pub old: VersionId,
    pub new: VersionId,
    #[serde(with = "micros")]
    pub elapsed: Duration,
    pub budget_exhausted: bool,
    /// Token-level similarity of the unaligned diff.
    pub similarity: f64,
    /// Scripting of the newer version.
    pub has_script: bool,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteResult {
    pub site_id: String,
    pub tags: BTreeSet<String>,
    pub versions: Vec<VersionRecord>,
    pub diffs: Vec<DiffRecord>,
    pub tally: Tally,
    /// Per-version templates, in version order. Not persisted.
    #[serde(skip)]
    pub templates: Vec<AnnotatedTemplate>,
}

mod micros {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_micros() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_micros(u64::deserialize(d)?))
    }
}

/// Runs diff, alignment and annotation over one site. Version `i` takes the
/// new-side template of script `i-1`; version 0 the old side of script 0.
pub fn process_site(history: &SiteHistory, cfg: &ProcessConfig, rules: &RuleSet) -> Result<SiteResult, CorpusError> {
    let versions = &history.versions;
    let streams: Vec<_> = versions.iter().map(|v| tokenize(&v.html)).collect();

    let mut scripts = Vec::with_capacity(versions.len().saturating_sub(1));
    let mut diffs = Vec::with_capacity(scripts.capacity());
    for i in 1..versions.len() {
        let started = Instant::now();
        let script = token_diff(&streams[i - 1], &streams[i], &cfg.diff).between(vid(i - 1), vid(i));
        let elapsed = started.elapsed();
        diffs.push(DiffRecord {
            old: vid(i - 1),
            new: vid(i),
            elapsed,
            budget_exhausted: script.budget_exhausted,
            similarity: diff_similarity(&script).value,
            has_script: versions[i].has_script,
            tally: Tally::default(),
        });
        scripts.push(script);
    }

    let aligned = align_site(&scripts, cfg.align).map_err(|source| CorpusError::Align {
        site_id: history.site_id.clone(),
        source,
    })?;

    let mut templates = Vec::with_capacity(versions.len());
    let mut tally = Tally::default();
    for (i, script) in aligned.iter().enumerate() {
        let (old, new) = build_templates(script, rules);
        tally.merge(&new.tally);
        diffs[i].tally = new.tally.clone();
        if i == 0 {
            templates.push(old);
        }
        templates.push(new);
    }
    if versions.len() == 1 {
        templates.push(AnnotatedTemplate::literal(&versions[0].html));
    }

    let records = versions
        .iter()
        .zip(&templates)
        .enumerate()
        .map(|(i, (v, t))| VersionRecord {
            version: vid(i),
            fetched_at: v.fetched_at,
            raw_digest: TemplateDigest::of_bytes(v.html.as_bytes()),
            template_digest: t.digest(),
            has_script: v.has_script,
        })
        .collect();

    Ok(SiteResult {
        site_id: history.site_id.clone(),
        tags: history.tags(),
        versions: records,
        diffs,
        tally,
        templates,
    })
}

fn vid(i: usize) -> VersionId {
    VersionId(i as u32)
}

/// Processes sites in parallel on the current rayon pool and records every
/// version in `index`. Results come back in input order.
pub fn process_corpus(
    sites: &[SiteHistory],
    cfg: &ProcessConfig,
    rules: &RuleSet,
    index: &TemplateIndex,
) -> Result<Vec<SiteResult>, CorpusError> {
    sites
        .par_iter()
        .map(|h| {
            let r = process_site(h, cfg, rules)?;
            index.insert_site(&r);
            Ok(r)
        })
        .collect()
}
