//! Case-study analyses over page histories: Bitcoin addresses hidden in
//! markup, service disruption visible in title changes, and how often pages
//! change and how long they stay visible.

mod bitcoin;
mod dynamics;
mod titles;

pub use bitcoin::{
    scan_hidden_bitcoin, scan_site, validate_base58check, validate_bech32, AddressMatch, BitcoinFinding, Location, Scheme,
};
pub use dynamics::{
    bucket, change_dynamics, ols, site_dynamics, DynamicsStats, FitPoint, Histogram, OlsFit, SiteDynamics, Skipped,
    BUCKET_LABELS,
};
pub use titles::{
    runs, title_groups, Disruption, DisruptionPattern, DisruptionPatterns, MatchMode, PatternError, TitleRun,
};

/// Necessary conditions for a v3 onion host name: 56 characters of
/// `[a-z2-7]` ending in `d`.
pub fn validate_onion_v3(candidate: &str) -> bool {
    let b = candidate.as_bytes();
    b.len() == 56 && b.iter().all(|c| matches!(c, b'a'..=b'z' | b'2'..=b'7')) && b[55] == b'd'
}
