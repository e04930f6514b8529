use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SiteHistory;
use crate::diff::VersionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Disruption {
    MonitoringPage,
    Unavailable,
    FreshInstall,
    Error,
}

impl Disruption {
    pub fn as_str(self) -> &'static str {
        match self {
            Disruption::MonitoringPage => "monitoring-page",
            Disruption::Unavailable => "unavailable",
            Disruption::FreshInstall => "fresh-install",
            Disruption::Error => "error",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Exact,
    Prefix,
}

/// Titles are compared case-insensitively with whitespace collapsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisruptionPattern {
    pub kind: Disruption,
    pub title: String,
    #[serde(default, rename = "match")]
    pub mode: MatchMode,
}

impl DisruptionPattern {
    fn new(kind: Disruption, title: &str, mode: MatchMode) -> Self {
        DisruptionPattern {
            kind,
            title: title.to_owned(),
            mode,
        }
    }

    pub fn matches(&self, title: &str) -> bool {
        let t = normalize(title);
        let p = normalize(&self.title);
        match self.mode {
            MatchMode::Exact => t == p,
            MatchMode::Prefix => t.starts_with(&p),
        }
    }
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Error)]
#[error("disruption patterns do not parse: {0}")]
pub struct PatternError(String);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisruptionPatterns {
    #[serde(rename = "pattern")]
    pub patterns: Vec<DisruptionPattern>,
}

impl Default for DisruptionPatterns {
    fn default() -> Self {
        use Disruption::*;
        use MatchMode::*;
        DisruptionPatterns {
            patterns: vec![
                DisruptionPattern::new(MonitoringPage, "Alertmanager", Exact),
                DisruptionPattern::new(MonitoringPage, "Node Exporter", Exact),
                DisruptionPattern::new(Unavailable, "404 NOT Found", Exact),
                DisruptionPattern::new(Unavailable, "Down for maintenance", Exact),
                DisruptionPattern::new(FreshInstall, "Welcome to Nginx!", Exact),
                DisruptionPattern::new(FreshInstall, "Apache2 Ubuntu Default Page: It works", Exact),
                DisruptionPattern::new(Error, "Error", Prefix),
            ],
        }
    }
}

impl DisruptionPatterns {
    /// Patterns from a TOML file (`[[pattern]]` tables) appended to the
    /// defaults.
    pub fn with_file(text: &str) -> Result<Self, PatternError> {
        let extra: DisruptionPatterns = toml::from_str(text).map_err(|e| PatternError(e.to_string()))?;
        let mut all = Self::default();
        all.patterns.extend(extra.patterns);
        Ok(all)
    }

    pub fn classify(&self, title: &str) -> Option<Disruption> {
        self.patterns.iter().find(|p| p.matches(title)).map(|p| p.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TitleRun {
    pub title: String,
    pub start: VersionId,
    pub end: VersionId,
    pub disruption: Option<Disruption>,
}

impl TitleRun {
    pub fn version_count(&self) -> usize {
        (self.end.0 - self.start.0) as usize + 1
    }
}

/// Index ranges `[start, end]` of maximal runs of equal neighbours.
pub fn runs<T: PartialEq>(items: &[T]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        match out.last_mut() {
            Some((s, e)) if items[*s] == *item => *e = i,
            _ => out.push((i, i)),
        }
    }
    out
}

pub fn title_groups(history: &SiteHistory, patterns: &DisruptionPatterns) -> Vec<TitleRun> {
    let titles: Vec<&str> = history.versions.iter().map(|v| v.title.as_str()).collect();
    runs(&titles)
        .into_iter()
        .map(|(s, e)| TitleRun {
            title: titles[s].to_owned(),
            start: VersionId(s as u32),
            end: VersionId(e as u32),
            disruption: patterns.classify(titles[s]),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PageVersion;
    use chrono::{Duration, TimeZone, Utc};
    use proptest::prelude::*;

    fn site(titles: &[&str]) -> SiteHistory {
        let t0 = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();
        let vs = titles
            .iter()
            .enumerate()
            .map(|(i, t)| PageVersion::new("s", t0 + Duration::hours(18 * i as i64), format!("<title>{t}</title><p>{i}</p>")))
            .collect();
        SiteHistory::new("s", vs)
    }

    #[test]
    fn groups_consecutive_titles() {
        let seq = [1, 1, 1, 2, 3, 3, 1, 1, 1, 1];
        let grouped: Vec<i32> = runs(&seq).into_iter().map(|(s, _)| seq[s]).collect();
        assert_eq!(grouped, [1, 2, 3, 1]);

        let names: Vec<String> = seq.iter().map(|n| format!("T{n}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let g = title_groups(&site(&refs), &DisruptionPatterns::default());
        let spans: Vec<(u32, u32)> = g.iter().map(|r| (r.start.0, r.end.0)).collect();
        assert_eq!(spans, [(0, 2), (3, 3), (4, 5), (6, 9)]);
        assert_eq!(title_groups(&site(&["a"; 4]), &DisruptionPatterns::default()).len(), 1);
        assert!(runs::<u8>(&[]).is_empty());
    }

    #[test]
    fn disruption_kinds() {
        let p = DisruptionPatterns::default();
        assert_eq!(p.classify("Welcome to Nginx!"), Some(Disruption::FreshInstall));
        assert_eq!(p.classify("Welcome to  nginx!"), Some(Disruption::FreshInstall));
        assert_eq!(p.classify("Apache2 Ubuntu Default Page: It works"), Some(Disruption::FreshInstall));
        assert_eq!(p.classify("Alertmanager"), Some(Disruption::MonitoringPage));
        assert_eq!(p.classify("404 Not Found"), Some(Disruption::Unavailable));
        assert_eq!(p.classify("ERROR: database unavailable"), Some(Disruption::Error));
        assert_eq!(p.classify("Best Market"), None);
        let g = title_groups(&site(&["Shop", "Welcome to Nginx!", "Shop"]), &p);
        assert_eq!(g[1].disruption, Some(Disruption::FreshInstall));
        assert_eq!(g[0].disruption, None);
    }

    #[test]
    fn pattern_file_extends_defaults() {
        let p = DisruptionPatterns::with_file("[[pattern]]\nkind = \"unavailable\"\ntitle = \"Site is down\"\n").unwrap();
        assert_eq!(p.patterns.len(), 8);
        assert_eq!(p.classify("site is DOWN"), Some(Disruption::Unavailable));
        assert!(DisruptionPatterns::with_file("[[pattern]]\nkind = \"nope\"\ntitle = \"x\"\n").is_err());
    }

    proptest! {
        #[test]
        fn runs_partition_the_sequence(seq in prop::collection::vec(0u8..3, 0..40)) {
            let r = runs(&seq);
            prop_assert!(r.len() <= seq.len());
            let mut rebuilt = Vec::new();
            for (i, (s, e)) in r.iter().enumerate() {
                prop_assert!(seq[*s..=*e].iter().all(|x| *x == seq[*s]));
                if i > 0 {
                    prop_assert_ne!(seq[r[i - 1].0], seq[*s]);
                }
                rebuilt.extend_from_slice(&seq[*s..=*e]);
            }
            prop_assert_eq!(rebuilt, seq);
        }
    }
}
