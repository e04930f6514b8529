use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::SiteHistory;

/// Histogram columns: at most a day, then more than a day, a week, a month
/// and four months.
pub const BUCKET_LABELS: [&str; 5] = ["<=1 day", ">1 day", ">1 week", ">1 month", ">4 months"];
const BUCKET_UPPER_DAYS: [f64; 4] = [1.0, 7.0, 30.0, 120.0];

pub fn bucket(days: f64) -> usize {
    BUCKET_UPPER_DAYS.iter().position(|u| days <= *u).unwrap_or(BUCKET_UPPER_DAYS.len())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: [usize; 5],
    pub fractions: [f64; 5],
}

impl Histogram {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut counts = [0usize; 5];
        for v in values {
            counts[bucket(v)] += 1;
        }
        let n: usize = counts.iter().sum();
        let fractions = counts.map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 });
        Histogram { counts, fractions }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteDynamics {
    pub site_id: String,
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
    pub observed_days: usize,
    pub distinct_versions: usize,
    pub average_change_interval: f64,
    pub lifespan_days: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Skipped {
    /// Observed on fewer than two distinct days.
    TooFewDays,
    /// Same content on every observed day.
    Unchanged,
}

/// Collapses observations to one per day (the day's last) and measures the
/// mean gap between successive distinct versions.
pub fn site_dynamics(history: &SiteHistory) -> Result<SiteDynamics, Skipped> {
    let mut days: BTreeMap<NaiveDate, &str> = BTreeMap::new();
    let mut versions: Vec<_> = history.versions.iter().collect();
    versions.sort_by_key(|v| v.fetched_at);
    for v in versions {
        days.insert(v.fetched_at.date_naive(), &v.html);
    }
    if days.len() < 2 {
        return Err(Skipped::TooFewDays);
    }
    let mut starts: Vec<NaiveDate> = Vec::new();
    let mut prev: Option<&str> = None;
    for (day, html) in &days {
        if prev != Some(*html) {
            starts.push(*day);
        }
        prev = Some(html);
    }
    if starts.len() < 2 {
        return Err(Skipped::Unchanged);
    }
    let first = *days.keys().next().expect("non-empty");
    let last = *days.keys().next_back().expect("non-empty");
    let span = (starts[starts.len() - 1] - starts[0]).num_days() as f64;
    Ok(SiteDynamics {
        site_id: history.site_id.clone(),
        first_day: first,
        last_day: last,
        observed_days: days.len(),
        distinct_versions: starts.len(),
        average_change_interval: span / (starts.len() - 1) as f64,
        lifespan_days: (last - first).num_days(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub n: usize,
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    /// Needs at least three points.
    pub adjusted_r_squared: Option<f64>,
}

/// Simple linear regression `y = intercept + slope * x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Option<OlsFit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let adjusted_r_squared = (n >= 3).then(|| 1.0 - (1.0 - r_squared) * (n - 1) as f64 / (n - 2) as f64);
    Some(OlsFit {
        n,
        intercept,
        slope,
        r_squared,
        adjusted_r_squared,
    })
}

/// Sites sharing an average change interval (rounded to whole days).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub interval_days: i64,
    pub sites: usize,
    pub mean_lifespan_days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsStats {
    pub sites: Vec<SiteDynamics>,
    pub skipped_too_few_days: usize,
    pub skipped_unchanged: usize,
    pub change_interval: Histogram,
    pub lifespan: Histogram,
    pub fit_points: Vec<FitPoint>,
    /// `ln(mean lifespan)` against the interval, over `fit_points`.
    pub fit: Option<OlsFit>,
}

/// Expects unfiltered histories: dropping repeated versions or capping the
/// count would shorten the visible lifespan.
pub fn change_dynamics(histories: &[SiteHistory]) -> DynamicsStats {
    let mut sites = Vec::new();
    let (mut few, mut unchanged) = (0, 0);
    for h in histories {
        match site_dynamics(h) {
            Ok(d) => sites.push(d),
            Err(Skipped::TooFewDays) => few += 1,
            Err(Skipped::Unchanged) => unchanged += 1,
        }
    }
    let change_interval = Histogram::of(sites.iter().map(|s| s.average_change_interval));
    let lifespan = Histogram::of(sites.iter().map(|s| s.lifespan_days as f64));

    let mut groups: BTreeMap<i64, (usize, i64)> = BTreeMap::new();
    for s in &sites {
        let g = groups.entry(s.average_change_interval.round() as i64).or_default();
        g.0 += 1;
        g.1 += s.lifespan_days;
    }
    let fit_points: Vec<FitPoint> = groups
        .into_iter()
        .map(|(interval_days, (n, total))| FitPoint {
            interval_days,
            sites: n,
            mean_lifespan_days: total as f64 / n as f64,
        })
        .collect();
    let xs: Vec<f64> = fit_points.iter().map(|p| p.interval_days as f64).collect();
    let ys: Vec<f64> = fit_points.iter().map(|p| p.mean_lifespan_days.ln()).collect();

    DynamicsStats {
        fit: ols(&xs, &ys),
        sites,
        skipped_too_few_days: few,
        skipped_unchanged: unchanged,
        change_interval,
        lifespan,
        fit_points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PageVersion;
    use chrono::{Duration, TimeZone, Utc};

    fn history(obs: &[(i64, i64, &str)]) -> SiteHistory {
        let t0 = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();
        let vs = obs
            .iter()
            .map(|(day, hour, html)| PageVersion::new("s", t0 + Duration::days(*day) + Duration::hours(*hour), *html))
            .collect();
        SiteHistory::new("s", vs)
    }

    #[test]
    fn daily_changes() {
        let d = site_dynamics(&history(&[(0, 1, "a"), (1, 1, "b"), (2, 1, "c")])).unwrap();
        assert_eq!(d.average_change_interval, 1.0);
        assert_eq!(d.lifespan_days, 2);
        assert_eq!(d.distinct_versions, 3);
    }

    #[test]
    fn same_day_observations_collapse() {
        // the day's last observation stands for the day
        let d = site_dynamics(&history(&[(0, 1, "a"), (0, 20, "b"), (4, 3, "b"), (10, 0, "c")])).unwrap();
        assert_eq!(d.observed_days, 3);
        assert_eq!(d.distinct_versions, 2);
        assert_eq!(d.average_change_interval, 10.0);
        assert_eq!(d.lifespan_days, 10);
    }

    #[test]
    fn skipped_sites() {
        assert_eq!(site_dynamics(&history(&[(0, 1, "a"), (0, 5, "b")])), Err(Skipped::TooFewDays));
        assert_eq!(site_dynamics(&history(&[(0, 1, "a"), (3, 5, "a")])), Err(Skipped::Unchanged));
        let st = change_dynamics(&[history(&[(0, 1, "a")]), history(&[(0, 1, "a"), (2, 0, "a")])]);
        assert!(st.sites.is_empty());
        assert_eq!((st.skipped_too_few_days, st.skipped_unchanged), (1, 1));
        assert_eq!(st.change_interval.fractions, [0.0; 5]);
        assert!(st.fit.is_none());
    }

    #[test]
    fn bucket_edges() {
        let got: Vec<usize> = [0.0, 1.0, 1.5, 7.0, 7.5, 30.0, 31.0, 120.0, 121.0].iter().map(|d| bucket(*d)).collect();
        assert_eq!(got, [0, 0, 1, 1, 2, 2, 3, 3, 4]);
        let h = Histogram::of([0.5, 3.0, 3.0, 200.0]);
        assert_eq!(h.counts, [1, 2, 0, 0, 1]);
        assert!((h.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ols_on_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| -5.7 - 0.027 * x).collect();
        let f = ols(&xs, &ys).unwrap();
        assert!((f.intercept + 5.7).abs() < 1e-12 && (f.slope + 0.027).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(ols(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        assert!(ols(&[1.0, 2.0], &[2.0, 3.0]).unwrap().adjusted_r_squared.is_none());
    }
}
