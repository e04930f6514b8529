use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::index::{ClusterKey, TemplateIndex};
use super::process::SiteResult;
use crate::annotate::{Tally, TemplateDigest};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub max: usize,
}

impl SizeSummary {
    pub fn of(sizes: &[usize]) -> Self {
        if sizes.is_empty() {
            return SizeSummary::default();
        }
        let mut s = sizes.to_vec();
        s.sort_unstable();
        let n = s.len();
        let median = if n % 2 == 1 {
            s[n / 2] as f64
        } else {
            (s[n / 2 - 1] + s[n / 2]) as f64 / 2.0
        };
        SizeSummary {
            count: n,
            mean: s.iter().sum::<usize>() as f64 / n as f64,
            median,
            max: s[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub digest: TemplateDigest,
    /// Distinct sites, sorted.
    pub sites: Vec<String>,
    pub versions: usize,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.sites.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub key: ClusterKey,
    /// Largest first, ties by digest.
    pub clusters: Vec<Cluster>,
    pub summary: SizeSummary,
}

/// Digests shared by at least two distinct sites.
pub fn cluster_by(index: &TemplateIndex, key: ClusterKey) -> ClusterReport {
    let mut clusters: Vec<Cluster> = index
        .entries(key)
        .into_iter()
        .filter_map(|(digest, postings)| {
            let sites: BTreeSet<&str> = postings.iter().map(|p| p.site_id.as_str()).collect();
            (sites.len() >= 2).then(|| Cluster {
                digest,
                sites: sites.into_iter().map(str::to_owned).collect(),
                versions: postings.len(),
            })
        })
        .collect();
    clusters.sort_by(|a, b| b.size().cmp(&a.size()).then(a.digest.cmp(&b.digest)));
    let sizes: Vec<usize> = clusters.iter().map(Cluster::size).collect();
    ClusterReport {
        key,
        summary: SizeSummary::of(&sizes),
        clusters,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    pub matched: u64,
    pub unmatched: u64,
}

impl Matching {
    fn add(&mut self, t: &Tally) {
        self.matched += t.successes();
        self.unmatched += t.failures;
    }

    pub fn total(&self) -> u64 {
        self.matched + self.unmatched
    }

    pub fn matched_pct(&self) -> f64 {
        pct(self.matched, self.total())
    }
}

fn pct(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// `1 - unique_templates / unique_raw`, as a percentage.
pub fn near_duplicate_pct(unique_raw: usize, unique_templates: usize) -> f64 {
    if unique_raw == 0 {
        0.0
    } else {
        100.0 * (1.0 - unique_templates as f64 / unique_raw as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupStats {
    pub sites: usize,
    pub total_versions: usize,
    pub unique_raw: usize,
    pub unique_templates: usize,
    pub near_duplicate_pct: f64,
    pub diffs: usize,
    pub budget_exhausted: usize,
    pub tally: Tally,
    pub annotated_pct: f64,
    /// Percentage of all differences per reserved word.
    pub category_pct: BTreeMap<String, f64>,
    pub failed_pct: f64,
    /// Untagged sites appear under `untagged`.
    pub per_tag: BTreeMap<String, Matching>,
    pub with_script: Matching,
    pub without_script: Matching,
}

pub const UNTAGGED: &str = "untagged";

pub fn near_duplicate_stats(results: &[SiteResult]) -> DedupStats {
    let mut raw = BTreeSet::new();
    let mut templates = BTreeSet::new();
    let mut tally = Tally::default();
    let mut per_tag: BTreeMap<String, Matching> = BTreeMap::new();
    let (mut with_script, mut without_script) = (Matching::default(), Matching::default());
    let (mut diffs, mut exhausted, mut total_versions) = (0, 0, 0);

    for site in results {
        total_versions += site.versions.len();
        for v in &site.versions {
            raw.insert(v.raw_digest);
            templates.insert(v.template_digest);
        }
        for d in &site.diffs {
            diffs += 1;
            exhausted += usize::from(d.budget_exhausted);
            tally.merge(&d.tally);
            if site.tags.is_empty() {
                per_tag.entry(UNTAGGED.to_owned()).or_default().add(&d.tally);
            }
            for tag in &site.tags {
                per_tag.entry(tag.clone()).or_default().add(&d.tally);
            }
            if d.has_script {
                with_script.add(&d.tally);
            } else {
                without_script.add(&d.tally);
            }
        }
    }

    let total = tally.total();
    DedupStats {
        sites: results.len(),
        total_versions,
        unique_raw: raw.len(),
        unique_templates: templates.len(),
        near_duplicate_pct: near_duplicate_pct(raw.len(), templates.len()),
        diffs,
        budget_exhausted: exhausted,
        annotated_pct: pct(tally.successes(), total),
        category_pct: tally.per_word.iter().map(|(w, n)| (w.clone(), pct(*n, total))).collect(),
        failed_pct: pct(tally.failures, total),
        tally,
        per_tag,
        with_script,
        without_script,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingBucket {
    pub label: String,
    pub count: usize,
}

const TIMING_EDGES_MS: [(f64, &str); 5] = [
    (1.0, "<1ms"),
    (10.0, "1-10ms"),
    (100.0, "10-100ms"),
    (1000.0, "100ms-1s"),
    (f64::INFINITY, ">=1s"),
];

/// Per-diff wall-clock times in decade buckets.
pub fn timing_histogram(results: &[SiteResult]) -> Vec<TimingBucket> {
    let mut counts = [0usize; TIMING_EDGES_MS.len()];
    for d in results.iter().flat_map(|s| &s.diffs) {
        let ms = d.elapsed.as_secs_f64() * 1e3;
        let slot = TIMING_EDGES_MS.iter().position(|(edge, _)| ms < *edge).unwrap_or(counts.len() - 1);
        counts[slot] += 1;
    }
    TIMING_EDGES_MS
        .iter()
        .zip(counts)
        .map(|((_, label), count)| TimingBucket {
            label: (*label).to_owned(),
            count,
        })
        .collect()
}
