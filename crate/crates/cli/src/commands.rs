use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use pagediff::align::AlignmentConfig;
use pagediff::analyzers::{
    change_dynamics, scan_site, title_groups, DisruptionPatterns, Histogram, BUCKET_LABELS,
};
use pagediff::annotate::{load_rules, to_toml, RuleError, RuleSet};
use pagediff::corpus::{
    self, cluster_by, ingest as run_filters, near_duplicate_stats, process_corpus, timing_histogram,
    ClusterKey, ClusterReport, CorpusError, Criterion, DedupStats, IngestConfig, Ingested, Loaded, Malformed,
    ProcessConfig, SiteHistory, SiteResult, TemplateIndex,
};
use pagediff::diff::{token_diff, DiffOptions};
use pagediff::similarity::{diff_similarity, jaccard, minhash_estimate, pearson, shingle};
use pagediff::tokenize::tokenize;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::output::{Outputs, RunConfig};
use crate::{Common, Failure, Format};

type Res<T> = Result<T, Failure>;

fn corpus_failure(e: CorpusError) -> Failure {
    match e {
        CorpusError::Config(m) => Failure::Config(m),
        other => Failure::Other(other.into()),
    }
}

fn input_path(c: &Common) -> Res<&Path> {
    let p = c.input.as_deref().ok_or_else(|| Failure::Usage("--input is required".into()))?;
    if !p.exists() {
        return Err(Failure::MissingInput(format!("{} does not exist", p.display())));
    }
    Ok(p)
}

fn read_file(path: &Path) -> Res<String> {
    if !path.exists() {
        return Err(Failure::MissingInput(format!("{} does not exist", path.display())));
    }
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Other)
}

fn rule_set(c: &Common) -> Res<RuleSet> {
    let text = c.rules.as_deref().map(read_file).transpose()?;
    load_rules(text.as_deref()).map_err(|e: RuleError| Failure::Config(e.to_string()))
}

fn process_config(c: &Common) -> Res<ProcessConfig> {
    let align = AlignmentConfig::new(c.chunk_size).map_err(|e| Failure::Usage(e.to_string()))?;
    if c.budget_ms == 0 {
        return Err(Failure::Usage("--budget-ms must be positive".into()));
    }
    Ok(ProcessConfig {
        align,
        diff: DiffOptions::with_budget(Duration::from_millis(c.budget_ms)),
    })
}

fn ingest_config(c: &Common) -> IngestConfig {
    IngestConfig {
        sample_pct: c.sample_pct,
        seed: c.seed,
        ..IngestConfig::default()
    }
}

fn run_config(c: &Common, command: &str, rules: &RuleSet, extra: serde_json::Value) -> RunConfig {
    RunConfig {
        command: command.to_owned(),
        input: c.input.as_ref().map(|p| p.display().to_string()),
        sample_pct: c.sample_pct,
        seed: c.seed,
        chunk_size: c.chunk_size,
        budget_ms: c.budget_ms,
        rules_version: rules.version().to_owned(),
        extra: match extra {
            serde_json::Value::Object(m) => m,
            _ => serde_json::Map::new(),
        },
    }
}

fn load_and_filter(c: &Common, cfg: &IngestConfig) -> Res<(Vec<Malformed>, Ingested)> {
    cfg.validate().map_err(corpus_failure)?;
    let path = input_path(c)?;
    let Loaded { records, malformed } = corpus::load_path(path).map_err(corpus_failure)?;
    let ingested = run_filters(records, cfg).map_err(corpus_failure)?;
    Ok((malformed, ingested))
}

fn criterion_name(c: Criterion) -> String {
    serde_json::to_value(c)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| c.letter().to_owned())
}

fn pct(x: f64) -> String {
    format!("{x:.2}")
}

/// Writes the filter results and prints the audit.
fn write_ingest(out: &mut Outputs, malformed: &[Malformed], ing: &Ingested) -> Res<()> {
    let a = &ing.audit;
    let rows: Vec<Vec<String>> = a
        .entries
        .iter()
        .map(|e| {
            vec![
                e.site_id.clone(),
                e.fetched_at.to_rfc3339(),
                e.criterion.letter().to_owned(),
                e.detail.clone(),
            ]
        })
        .collect();
    out.table("exclusions.csv", &["site_id", "fetched_at", "criterion", "detail"], &rows, true)?;
    let rows: Vec<Vec<String>> = malformed.iter().map(|m| vec![m.location.clone(), m.error.clone()]).collect();
    out.table("malformed.csv", &["location", "error"], &rows, true)?;

    let dropped: BTreeMap<String, usize> =
        Criterion::ALL.iter().map(|c| (format!("{} {}", c.letter(), criterion_name(*c)), a.dropped(*c))).collect();
    out.json(
        "audit.json",
        &json!({
            "unparseable_records": malformed.len(),
            "input_records": a.input,
            "duplicate_keys": a.malformed,
            "dropped": dropped,
            "surviving_sites": a.surviving_sites,
            "surviving_versions": a.surviving_versions,
            "balances": a.balances(),
        }),
        true,
    )?;

    println!("records read        {}", a.input + malformed.len());
    println!("unparseable         {}", malformed.len());
    println!("duplicate keys      {}", a.malformed);
    for c in Criterion::ALL {
        println!("dropped ({:>3}) {:<18} {}", c.letter(), criterion_name(c), a.dropped(c));
    }
    println!("surviving sites     {}", a.surviving_sites);
    println!("surviving versions  {}", a.surviving_versions);
    Ok(())
}

pub fn ingest(c: &Common) -> Res<()> {
    let rules = RuleSet::builtin();
    let (malformed, ing) = load_and_filter(c, &ingest_config(c))?;
    let mut out = Outputs::create(&c.out)?;
    let versions: Vec<_> = ing.sites.iter().flat_map(|s| s.versions.iter().cloned()).collect();
    let mut buf = Vec::new();
    corpus::write_jsonl(&mut buf, &versions).map_err(|e| Failure::Other(e.into()))?;
    out.bytes("histories.jsonl", &buf, true)?;
    write_ingest(&mut out, &malformed, &ing)?;
    out.finish(&run_config(c, "ingest", &rules, json!({})))?;
    Ok(())
}

fn print_stats(s: &DedupStats) {
    println!("sites                 {}", s.sites);
    println!("versions              {}", s.total_versions);
    println!("unique pages          {}", s.unique_raw);
    println!("unique templates      {}", s.unique_templates);
    println!("near-duplicates       {:.1}%", s.near_duplicate_pct);
    println!("diffs                 {}", s.diffs);
    println!("budget exhausted      {}", s.budget_exhausted);
    println!("differences           {}", s.tally.total());
    println!("annotated             {:.1}%", s.annotated_pct);
    let mut cats: Vec<(&String, &f64)> = s.category_pct.iter().collect();
    cats.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(b.0)));
    for (word, p) in cats {
        println!("  {word:<20}{p:>6.1}%");
    }
    println!("  {:<20}{:>6.1}%", "fail", s.failed_pct);
    if !s.per_tag.is_empty() {
        println!("annotation success per tag");
        for (tag, m) in &s.per_tag {
            println!("  {tag:<20}{:>6.1}% of {}", m.matched_pct(), m.total());
        }
    }
    println!(
        "with script           {:.1}% of {}",
        s.with_script.matched_pct(),
        s.with_script.total()
    );
    println!(
        "without script        {:.1}% of {}",
        s.without_script.matched_pct(),
        s.without_script.total()
    );
}

fn print_clusters(r: &ClusterReport) {
    let key = match r.key {
        ClusterKey::Raw => "raw pages",
        ClusterKey::Template => "templates",
    };
    println!(
        "clusters by {key}: {} (sites per cluster: mean {:.1}, median {:.1}, max {})",
        r.clusters.len(),
        r.summary.mean,
        r.summary.median,
        r.summary.max
    );
    for cl in r.clusters.iter().take(10) {
        println!("  {}  {:>4} sites  {:>5} versions", &cl.digest.to_hex()[..16], cl.size(), cl.versions);
    }
}

fn process_sites(c: &Common, sites: &[SiteHistory], rules: &RuleSet) -> Res<(Vec<SiteResult>, TemplateIndex)> {
    let cfg = process_config(c)?;
    let index = TemplateIndex::new();
    let results = process_corpus(sites, &cfg, rules, &index).map_err(corpus_failure)?;
    Ok((results, index))
}

pub fn process(c: &Common) -> Res<()> {
    let rules = rule_set(c)?;
    process_config(c)?;
    let (malformed, ing) = load_and_filter(c, &ingest_config(c))?;
    let (results, index) = process_sites(c, &ing.sites, &rules)?;
    let mut out = Outputs::create(&c.out)?;
    write_ingest(&mut out, &malformed, &ing)?;

    index.save(&out.path("index.json")).map_err(corpus_failure)?;
    out.register("index.json", true)?;
    out.json("results.json", &results, false)?;

    let mut versions = Vec::new();
    let mut diffs = Vec::new();
    let mut timings = Vec::new();
    for r in &results {
        for v in &r.versions {
            versions.push(vec![
                r.site_id.clone(),
                v.version.0.to_string(),
                v.fetched_at.to_rfc3339(),
                v.raw_digest.to_hex(),
                v.template_digest.to_hex(),
                v.has_script.to_string(),
            ]);
        }
        for d in &r.diffs {
            diffs.push(vec![
                r.site_id.clone(),
                d.old.0.to_string(),
                d.new.0.to_string(),
                format!("{:.6}", d.similarity),
                d.tally.successes().to_string(),
                d.tally.failures.to_string(),
                d.budget_exhausted.to_string(),
            ]);
            timings.push(vec![
                r.site_id.clone(),
                d.old.0.to_string(),
                d.new.0.to_string(),
                d.elapsed.as_micros().to_string(),
            ]);
        }
    }
    out.table(
        "versions.csv",
        &["site_id", "version", "fetched_at", "raw_digest", "template_digest", "has_script"],
        &versions,
        true,
    )?;
    out.table(
        "diffs.csv",
        &["site_id", "old", "new", "similarity", "annotated", "failed", "budget_exhausted"],
        &diffs,
        true,
    )?;
    out.table("timings.csv", &["site_id", "old", "new", "elapsed_us"], &timings, false)?;
    let hist: Vec<Vec<String>> =
        timing_histogram(&results).into_iter().map(|b| vec![b.label, b.count.to_string()]).collect();
    out.table("timing_histogram.csv", &["bucket", "diffs"], &hist, false)?;

    let stats = near_duplicate_stats(&results);
    out.json("stats.json", &stats, true)?;
    println!();
    print_stats(&stats);
    let total: Duration = results.iter().flat_map(|r| &r.diffs).map(|d| d.elapsed).sum();
    if stats.diffs > 0 {
        println!("mean time per diff    {:.2?}", total / stats.diffs as u32);
    }
    out.finish(&run_config(c, "process", &rules, json!({})))?;
    Ok(())
}

pub fn report(c: &Common) -> Res<()> {
    let dir: PathBuf = c.input.clone().unwrap_or_else(|| c.out.clone());
    let results_path = dir.join("results.json");
    let text = read_file(&results_path)?;
    let results: Vec<SiteResult> = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a results file", results_path.display()))
        .map_err(Failure::Other)?;
    let index_path = dir.join("index.json");
    if !index_path.exists() {
        return Err(Failure::MissingInput(format!("{} does not exist", index_path.display())));
    }
    let index = TemplateIndex::load(&index_path).map_err(|e| Failure::Other(e.into()))?;
    let stats = near_duplicate_stats(&results);
    let clusters = [cluster_by(&index, ClusterKey::Template), cluster_by(&index, ClusterKey::Raw)];

    match c.format {
        Format::Text => {
            print_stats(&stats);
            for r in &clusters {
                print_clusters(r);
            }
        }
        Format::Csv => {
            let mut out = Outputs::create(&c.out.join("report"))?;
            let mut rows = vec![
                vec!["sites".into(), stats.sites.to_string()],
                vec!["versions".into(), stats.total_versions.to_string()],
                vec!["unique_pages".into(), stats.unique_raw.to_string()],
                vec!["unique_templates".into(), stats.unique_templates.to_string()],
                vec!["near_duplicate_pct".into(), pct(stats.near_duplicate_pct)],
                vec!["diffs".into(), stats.diffs.to_string()],
                vec!["budget_exhausted".into(), stats.budget_exhausted.to_string()],
                vec!["annotated_pct".into(), pct(stats.annotated_pct)],
                vec!["failed_pct".into(), pct(stats.failed_pct)],
            ];
            for (w, p) in &stats.category_pct {
                rows.push(vec![format!("category_pct:{w}"), pct(*p)]);
            }
            out.table("stats.csv", &["metric", "value"], &rows, true)?;

            let mut rows: Vec<Vec<String>> = stats
                .per_tag
                .iter()
                .map(|(t, m)| vec![t.clone(), m.matched.to_string(), m.unmatched.to_string(), pct(m.matched_pct())])
                .collect();
            for (name, m) in [("script", &stats.with_script), ("no-script", &stats.without_script)] {
                rows.push(vec![
                    format!("js:{name}"),
                    m.matched.to_string(),
                    m.unmatched.to_string(),
                    pct(m.matched_pct()),
                ]);
            }
            out.table("crosstab.csv", &["group", "matched", "unmatched", "matched_pct"], &rows, true)?;

            let rows: Vec<Vec<String>> = clusters
                .iter()
                .flat_map(|r| {
                    r.clusters.iter().map(move |cl| {
                        vec![
                            serde_json::to_value(r.key).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
                            cl.digest.to_hex(),
                            cl.size().to_string(),
                            cl.versions.to_string(),
                            cl.sites.join(";"),
                        ]
                    })
                })
                .collect();
            out.table("clusters.csv", &["key", "digest", "sites", "versions", "site_ids"], &rows, true)?;
            out.finish(&run_config(c, "report", &RuleSet::builtin(), json!({})))?;
            println!("wrote {}", c.out.join("report").display());
        }
    }
    Ok(())
}

pub fn sensitivity(c: &Common, chunks: &[usize]) -> Res<()> {
    let rules = rule_set(c)?;
    for &k in chunks {
        AlignmentConfig::new(k).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let (_, ing) = load_and_filter(c, &ingest_config(c))?;
    let mut rows = Vec::new();
    println!("{:>6} {:>10} {:>10} {:>9}", "chunk", "pages", "templates", "near-dup");
    for &k in chunks {
        let sub = Common {
            chunk_size: k,
            ..c.clone()
        };
        let (results, _) = process_sites(&sub, &ing.sites, &rules)?;
        let s = near_duplicate_stats(&results);
        println!("{k:>6} {:>10} {:>10} {:>8.1}%", s.unique_raw, s.unique_templates, s.near_duplicate_pct);
        rows.push(vec![
            k.to_string(),
            s.sites.to_string(),
            s.total_versions.to_string(),
            s.unique_raw.to_string(),
            s.unique_templates.to_string(),
            pct(s.near_duplicate_pct),
            pct(s.annotated_pct),
        ]);
    }
    let mut out = Outputs::create(&c.out)?;
    out.table(
        "sensitivity.csv",
        &["chunk_size", "sites", "versions", "unique_pages", "unique_templates", "near_duplicate_pct", "annotated_pct"],
        &rows,
        true,
    )?;
    out.finish(&run_config(c, "sensitivity", &rules, json!({ "chunks": chunks })))?;
    Ok(())
}

#[derive(Serialize)]
struct PairScores {
    levenshtein: f64,
    jaccard: Vec<f64>,
    minhash: Vec<f64>,
}

pub fn compare_similarity(c: &Common, ks: &[usize], num_hashes: usize) -> Res<()> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Failure::Usage("--k needs positive shingle sizes".into()));
    }
    if num_hashes == 0 {
        return Err(Failure::Usage("--num-hashes must be positive".into()));
    }
    let opts = process_config(c)?.diff;
    let (_, ing) = load_and_filter(c, &ingest_config(c))?;
    let mut pairs = Vec::new();
    for s in &ing.sites {
        for (i, w) in s.versions.windows(2).enumerate() {
            pairs.push((s.site_id.as_str(), i, &w[0].html, &w[1].html));
        }
    }
    let seed = c.seed;
    let scores: Vec<PairScores> = pairs
        .par_iter()
        .map(|(_, _, a, b)| {
            let (ta, tb) = (tokenize(a), tokenize(b));
            let levenshtein = diff_similarity(&token_diff(&ta, &tb, &opts)).value;
            let mut jac = Vec::new();
            let mut mh = Vec::new();
            for &k in ks {
                let (sa, sb) = (shingle(&ta, k).expect("k > 0"), shingle(&tb, k).expect("k > 0"));
                jac.push(jaccard(&sa, &sb).expect("same k").value);
                mh.push(minhash_estimate(&sa, &sb, num_hashes, seed).expect("same k").value);
            }
            PairScores {
                levenshtein,
                jaccard: jac,
                minhash: mh,
            }
        })
        .collect();

    let mut header = vec!["site_id".to_owned(), "old".into(), "new".into(), "levenshtein".into()];
    for k in ks {
        header.push(format!("jaccard_k{k}"));
        header.push(format!("minhash_k{k}"));
    }
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .zip(&scores)
        .map(|((site, i, _, _), s)| {
            let mut r = vec![site.to_string(), i.to_string(), (i + 1).to_string(), format!("{:.6}", s.levenshtein)];
            for (j, m) in s.jaccard.iter().zip(&s.minhash) {
                r.push(format!("{j:.6}"));
                r.push(format!("{m:.6}"));
            }
            r
        })
        .collect();

    let lev: Vec<f64> = scores.iter().map(|s| s.levenshtein).collect();
    let mut corr = Vec::new();
    println!("{} version pairs", scores.len());
    for (idx, k) in ks.iter().enumerate() {
        let jac: Vec<f64> = scores.iter().map(|s| s.jaccard[idx]).collect();
        let mh: Vec<f64> = scores.iter().map(|s| s.minhash[idx]).collect();
        let fmt = |r: Result<f64, _>| match r {
            Ok(v) => format!("{v:.4}"),
            Err(e) => {
                log::warn!("k={k}: no correlation: {e}");
                String::new()
            }
        };
        let rj = fmt(pearson(&lev, &jac));
        let rm = fmt(pearson(&lev, &mh));
        let within = jac.iter().zip(&mh).filter(|(j, m)| (*j - *m).abs() <= 0.1).count();
        let within_pct = if jac.is_empty() { 0.0 } else { 100.0 * within as f64 / jac.len() as f64 };
        println!("k={k}: pearson(levenshtein, jaccard) {rj:>7}  pearson(levenshtein, minhash) {rm:>7}  minhash within 0.1: {within_pct:.1}%");
        corr.push(vec![k.to_string(), scores.len().to_string(), rj, rm, pct(within_pct)]);
    }
    let mut out = Outputs::create(&c.out)?;
    out.table("pairs.csv", &header, &rows, true)?;
    out.table(
        "correlation.csv",
        &["k", "pairs", "pearson_levenshtein_jaccard", "pearson_levenshtein_minhash", "minhash_within_0.1_pct"],
        &corr,
        true,
    )?;
    let rules = RuleSet::builtin();
    out.finish(&run_config(c, "compare-similarity", &rules, json!({ "k": ks, "num_hashes": num_hashes })))?;
    Ok(())
}

pub fn scan_bitcoin(c: &Common, all_versions: bool) -> Res<()> {
    let (_, ing) = load_and_filter(c, &ingest_config(c))?;
    let findings: Vec<_> = ing
        .sites
        .par_iter()
        .flat_map_iter(|s| scan_site(s).into_iter().filter(|f| all_versions || f.version.0 == 0))
        .collect();
    let rows: Vec<Vec<String>> = findings
        .iter()
        .map(|f| {
            vec![
                f.site_id.clone(),
                f.version.0.to_string(),
                f.fetched_at.to_rfc3339(),
                f.hit.location.as_str().to_owned(),
                f.hit.scheme.as_str().to_owned(),
                f.hit.address.clone(),
                f.hit.valid.to_string(),
            ]
        })
        .collect();
    let mut per_location: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for f in &findings {
        let e = per_location.entry(f.hit.location.as_str()).or_default();
        if f.hit.valid {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    println!("{} sites scanned, {} findings", ing.sites.len(), findings.len());
    for (loc, (valid, invalid)) in &per_location {
        println!("  {loc:<16} valid {valid:>5}  rejected {invalid:>5}");
    }
    let mut out = Outputs::create(&c.out)?;
    out.table(
        "bitcoin.csv",
        &["site_id", "version", "fetched_at", "location", "scheme", "address", "valid"],
        &rows,
        true,
    )?;
    out.finish(&run_config(c, "scan-bitcoin", &RuleSet::builtin(), json!({ "all_versions": all_versions })))?;
    Ok(())
}

pub fn titles(c: &Common, patterns: Option<&Path>) -> Res<()> {
    let pats = match patterns {
        Some(p) => DisruptionPatterns::with_file(&read_file(p)?).map_err(|e| Failure::Config(e.to_string()))?,
        None => DisruptionPatterns::default(),
    };
    let (_, ing) = load_and_filter(c, &ingest_config(c))?;
    let mut rows = Vec::new();
    let mut changed = 0;
    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &ing.sites {
        let groups = title_groups(s, &pats);
        changed += usize::from(groups.len() > 1);
        for g in &groups {
            if let Some(d) = g.disruption {
                *kinds.entry(d.as_str()).or_default() += 1;
            }
            rows.push(vec![
                s.site_id.clone(),
                g.start.0.to_string(),
                g.end.0.to_string(),
                g.version_count().to_string(),
                g.title.clone(),
                g.disruption.map(|d| d.as_str().to_owned()).unwrap_or_default(),
            ]);
        }
    }
    println!("{} sites, {} with title changes", ing.sites.len(), changed);
    for (k, n) in &kinds {
        println!("  {k:<16} {n}");
    }
    let mut out = Outputs::create(&c.out)?;
    out.table("titles.csv", &["site_id", "start", "end", "versions", "title", "disruption"], &rows, true)?;
    let extra = json!({ "patterns": patterns.map(|p| p.display().to_string()) });
    out.finish(&run_config(c, "titles", &RuleSet::builtin(), extra))?;
    Ok(())
}

fn histogram_rows(name: &str, h: &Histogram) -> Vec<Vec<String>> {
    BUCKET_LABELS
        .iter()
        .zip(h.counts.iter().zip(&h.fractions))
        .map(|(l, (n, f))| vec![name.to_owned(), (*l).to_owned(), n.to_string(), format!("{f:.4}")])
        .collect()
}

pub fn dynamics(c: &Common) -> Res<()> {
    // every observation counts here: no dropping of repeats, no cap
    let cfg = IngestConfig {
        dedup_consecutive: false,
        max_versions: usize::MAX,
        ..ingest_config(c)
    };
    let (_, ing) = load_and_filter(c, &cfg)?;
    let st = change_dynamics(&ing.sites);
    let rows: Vec<Vec<String>> = st
        .sites
        .iter()
        .map(|s| {
            vec![
                s.site_id.clone(),
                s.first_day.to_string(),
                s.last_day.to_string(),
                s.observed_days.to_string(),
                s.distinct_versions.to_string(),
                format!("{:.4}", s.average_change_interval),
                s.lifespan_days.to_string(),
            ]
        })
        .collect();
    let mut hist = histogram_rows("change_interval", &st.change_interval);
    hist.extend(histogram_rows("lifespan", &st.lifespan));

    println!(
        "{} sites ({} seen on fewer than two days, {} never changed)",
        st.sites.len(),
        st.skipped_too_few_days,
        st.skipped_unchanged
    );
    println!("{:<18}{}", "", BUCKET_LABELS.map(|l| format!("{l:>11}")).concat());
    for (name, h) in [("change interval", &st.change_interval), ("visible lifespan", &st.lifespan)] {
        println!("{name:<18}{}", h.fractions.map(|f| format!("{f:>11.2}")).concat());
    }
    match &st.fit {
        Some(f) => println!(
            "ln(mean lifespan) = {:.4} + {:.4} * interval  (R2 {:.3}, {} points)",
            f.intercept, f.slope, f.r_squared, f.n
        ),
        None => println!("too few interval groups for a regression"),
    }

    let mut out = Outputs::create(&c.out)?;
    out.table(
        "dynamics_sites.csv",
        &["site_id", "first_day", "last_day", "observed_days", "distinct_versions", "average_change_interval", "lifespan_days"],
        &rows,
        true,
    )?;
    out.table("dynamics_histogram.csv", &["measure", "bucket", "sites", "fraction"], &hist, true)?;
    out.json("dynamics.json", &st, true)?;
    out.finish(&run_config(c, "dynamics", &RuleSet::builtin(), json!({})))?;
    Ok(())
}

pub fn dump_rules(c: &Common) -> Res<()> {
    let rules = rule_set(c)?;
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(to_toml(&rules).as_bytes())
        .context("cannot write to stdout")
        .map_err(Failure::Other)
}
