use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::redirect::{detect_redirect, Redirect};
use super::{CorpusError, PageVersion};

/// Why a version was removed. Letters follow the order filters are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    /// (a) no homepage content
    NoHomepage,
    /// (b) error page of the onion proxy
    ProxyError,
    /// (c) site not in the random sample
    NotSampled,
    /// (d) CSAM-tagged version with embedded images
    CsamImages,
    /// (e) redirect-only version
    Redirect,
    /// identical to the preceding version
    Duplicate,
    /// (f) fewer than two versions left
    TooFewVersions,
    /// (g) beyond the version cap
    VersionCap,
}

impl Criterion {
    pub const ALL: [Criterion; 8] = [
        Criterion::NoHomepage,
        Criterion::ProxyError,
        Criterion::NotSampled,
        Criterion::CsamImages,
        Criterion::Redirect,
        Criterion::Duplicate,
        Criterion::TooFewVersions,
        Criterion::VersionCap,
    ];

    pub fn letter(self) -> &'static str {
        match self {
            Criterion::NoHomepage => "a",
            Criterion::ProxyError => "b",
            Criterion::NotSampled => "c",
            Criterion::CsamImages => "d",
            Criterion::Redirect => "e",
            Criterion::Duplicate => "dup",
            Criterion::TooFewVersions => "f",
            Criterion::VersionCap => "g",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub site_id: String,
    pub fetched_at: DateTime<Utc>,
    pub criterion: Criterion,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionAudit {
    pub input: usize,
    /// Repeated `(site_id, fetched_at)` keys; the first record is kept.
    pub malformed: usize,
    pub dropped: BTreeMap<Criterion, usize>,
    pub entries: Vec<Exclusion>,
    pub surviving_sites: usize,
    pub surviving_versions: usize,
}

impl ExclusionAudit {
    pub fn dropped(&self, c: Criterion) -> usize {
        self.dropped.get(&c).copied().unwrap_or(0)
    }

    /// Dropped plus surviving plus malformed equals the input.
    pub fn balances(&self) -> bool {
        self.malformed + self.dropped.values().sum::<usize>() + self.surviving_versions == self.input
    }

    fn log(&mut self, v: &PageVersion, criterion: Criterion, detail: impl Into<String>) {
        let detail = detail.into();
        log::debug!("exclude {} @ {} ({criterion}): {detail}", v.site_id, v.fetched_at);
        *self.dropped.entry(criterion).or_default() += 1;
        self.entries.push(Exclusion {
            site_id: v.site_id.clone(),
            fetched_at: v.fetched_at,
            criterion,
            detail,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Case-insensitive substrings of the page title that mark a proxy error.
    pub proxy_signatures: Vec<String>,
    /// Tags (case-insensitive) whose versions must not carry images.
    pub csam_tags: Vec<String>,
    /// Percentage of sites kept, `None` for all.
    pub sample_pct: Option<f64>,
    pub seed: u64,
    pub min_versions: usize,
    pub max_versions: usize,
    pub dedup_consecutive: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            proxy_signatures: [
                "onion site not found",
                "onion service not found",
                "onionsite not found",
                "onion service has failed",
                "tor2web error",
                "general socks server failure",
                "proxy error",
                "privoxy",
                "502 bad gateway",
                "504 gateway time-out",
            ]
            .map(String::from)
            .to_vec(),
            csam_tags: ["child sexual offense", "child sexual offence", "csam"].map(String::from).to_vec(),
            sample_pct: None,
            seed: 0,
            min_versions: 2,
            max_versions: 100,
            dedup_consecutive: true,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if let Some(p) = self.sample_pct {
            if !(p > 0.0 && p <= 100.0) {
                return Err(CorpusError::Config(format!("sample percentage must be in (0, 100], got {p}")));
            }
        }
        if self.min_versions < 2 {
            return Err(CorpusError::Config("min_versions must be at least 2".into()));
        }
        if self.max_versions < self.min_versions {
            return Err(CorpusError::Config("max_versions must be at least min_versions".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteHistory {
    pub site_id: String,
    pub versions: Vec<PageVersion>,
    /// Versions of this site removed by the per-version filters.
    pub exclusions: Vec<Exclusion>,
}

impl SiteHistory {
    /// An already-filtered history, e.g. for tests.
    pub fn new(site_id: impl Into<String>, mut versions: Vec<PageVersion>) -> Self {
        versions.sort_by_key(|v| v.fetched_at);
        SiteHistory {
            site_id: site_id.into(),
            versions,
            exclusions: Vec::new(),
        }
    }

    pub fn tags(&self) -> BTreeSet<String> {
        self.versions.iter().flat_map(|v| v.tags.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub sites: Vec<SiteHistory>,
    pub audit: ExclusionAudit,
}

fn contains_ci(hay: &str, needles: &[String]) -> Option<String> {
    let hay = hay.to_lowercase();
    needles.iter().find(|n| !n.is_empty() && hay.contains(&n.to_lowercase())).cloned()
}

/// Groups records by site and applies the exclusion filters in order.
pub fn ingest<I>(records: I, cfg: &IngestConfig) -> Result<Ingested, CorpusError>
where
    I: IntoIterator<Item = PageVersion>,
{
    cfg.validate()?;
    let mut audit = ExclusionAudit::default();
    let mut by_site: BTreeMap<String, Vec<PageVersion>> = BTreeMap::new();
    for v in records {
        audit.input += 1;
        by_site.entry(v.site_id.clone()).or_default().push(v);
    }
    for versions in by_site.values_mut() {
        versions.sort_by_key(|v| v.fetched_at);
        let before = versions.len();
        versions.dedup_by(|b, a| {
            let same = a.fetched_at == b.fetched_at;
            if same {
                log::warn!("duplicate record for {} at {}; keeping the first", b.site_id, b.fetched_at);
            }
            same
        });
        audit.malformed += before - versions.len();
    }

    // (a) and (b)
    for versions in by_site.values_mut() {
        versions.retain(|v| {
            if v.html.trim().is_empty() {
                audit.log(v, Criterion::NoHomepage, "empty page");
                return false;
            }
            if let Some(sig) = contains_ci(&v.title, &cfg.proxy_signatures) {
                audit.log(v, Criterion::ProxyError, format!("title matches {sig:?}"));
                return false;
            }
            true
        });
    }
    by_site.retain(|_, vs| !vs.is_empty());

    // (c)
    if let Some(pct) = cfg.sample_pct {
        let n = by_site.len();
        let k = ((n as f64) * pct / 100.0).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let keep: BTreeSet<usize> = rand::seq::index::sample(&mut rng, n, k.min(n)).into_iter().collect();
        let ids: Vec<String> = by_site.keys().cloned().collect();
        for (i, id) in ids.iter().enumerate() {
            if !keep.contains(&i) {
                for v in by_site.remove(id).unwrap_or_default() {
                    audit.log(&v, Criterion::NotSampled, format!("{pct}% sample, seed {}", cfg.seed));
                }
            }
        }
    }

    let mut sites = Vec::new();
    for (site_id, versions) in by_site {
        let first_entry = audit.entries.len();
        let mut kept: Vec<PageVersion> = Vec::with_capacity(versions.len());
        for v in versions {
            // (d)
            if v.has_embedded_images {
                if let Some(tag) = v.tags.iter().find_map(|t| contains_exact_ci(t, &cfg.csam_tags)) {
                    audit.log(&v, Criterion::CsamImages, format!("tagged {tag:?} with embedded images"));
                    continue;
                }
            }
            // (e)
            let redirect = detect_redirect(&v.html);
            if redirect != Redirect::None {
                audit.log(&v, Criterion::Redirect, redirect.as_str());
                continue;
            }
            if cfg.dedup_consecutive && kept.last().is_some_and(|p| p.html == v.html) {
                audit.log(&v, Criterion::Duplicate, "identical to previous version");
                continue;
            }
            kept.push(v);
        }
        // (f)
        if kept.len() < cfg.min_versions {
            for v in &kept {
                audit.log(v, Criterion::TooFewVersions, format!("{} version(s) left", kept.len()));
            }
            continue;
        }
        // (g)
        if kept.len() > cfg.max_versions {
            for v in &kept[cfg.max_versions..] {
                audit.log(v, Criterion::VersionCap, format!("beyond first {}", cfg.max_versions));
            }
            kept.truncate(cfg.max_versions);
        }
        audit.surviving_versions += kept.len();
        sites.push(SiteHistory {
            site_id,
            versions: kept,
            exclusions: audit.entries[first_entry..].to_vec(),
        });
    }
    audit.surviving_sites = sites.len();
    log::info!(
        "ingest: {} records, {} sites kept with {} versions, {} dropped, {} malformed",
        audit.input,
        audit.surviving_sites,
        audit.surviving_versions,
        audit.dropped.values().sum::<usize>(),
        audit.malformed
    );
    Ok(Ingested { sites, audit })
}

fn contains_exact_ci(tag: &str, list: &[String]) -> Option<String> {
    list.iter().find(|t| t.eq_ignore_ascii_case(tag.trim())).map(|_| tag.to_owned())
}
