use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pagediff"));
    // keep the caller's environment from leaking into flags
    for (k, _) in std::env::vars() {
        if k.starts_with("PAGEDIFF_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn record(site: &str, at: &str, html: &str) -> String {
    serde_json::json!({ "site_id": site, "fetched_at": at, "html": html }).to_string()
}

fn write_corpus(dir: &Path, lines: &[String]) -> PathBuf {
    let p = dir.join("corpus.jsonl");
    fs::write(&p, lines.join("\n") + "\n").unwrap();
    p
}

fn three_versions(dir: &Path) -> PathBuf {
    write_corpus(
        dir,
        &[
            record("s1", "2022-04-05T10:00:00Z", "Lorem 2022-04-05 ipsum 1.0 BTC"),
            record("s1", "2022-04-06T10:00:00Z", "Lorem 2022-04-06 ipsum 1.0 BTC"),
            record("s1", "2022-04-07T10:00:00Z", "Lorem 2022-04-06 ipsum 1.5 BTC"),
        ],
    )
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_owned).collect()).collect()
}

#[test]
fn sensitivity_on_three_version_fixture() {
    let tmp = TempDir::new().unwrap();
    let input = three_versions(tmp.path());
    let out = tmp.path().join("out");
    let o = run(&[
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "sensitivity",
        "--chunks",
        "0,2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("sensitivity.csv"));
    let templates: Vec<(&str, &str)> = rows.iter().map(|r| (r[0].as_str(), r[4].as_str())).collect();
    assert_eq!(templates, [("0", "2"), ("2", "1")]);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn empty_corpus_processes() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("empty.jsonl");
    fs::write(&input, "").unwrap();
    let out = tmp.path().join("out");
    let o = run(&["--input", input.to_str().unwrap(), "--out", out.to_str().unwrap(), "process"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["sites"], 0);
    assert_eq!(stats["unique_templates"], 0);
    assert!(csv_rows(&out.join("versions.csv")).is_empty());

    let o = run(&["--input", out.to_str().unwrap(), "--out", out.to_str().unwrap(), "report"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let input = three_versions(tmp.path());
    let inp = input.to_str().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    assert_eq!(code(&run(&["--no-such-flag", "process"])), 2);
    assert_eq!(code(&run(&["process"])), 2, "missing --input is a usage error");
    assert_eq!(code(&run(&["--input", inp, "--out", out, "--chunk-size", "1", "process"])), 2);
    assert_eq!(code(&run(&["--input", "/nonexistent/corpus.jsonl", "--out", out, "process"])), 3);
    assert_eq!(code(&run(&["--input", inp, "--out", out, "--rules", "/nonexistent.toml", "process"])), 3);

    let bad_rules = tmp.path().join("bad.toml");
    fs::write(&bad_rules, "[[rule]]\nname = \"x\"\ntarget = '('\n").unwrap();
    let o = run(&["--input", inp, "--out", out, "--rules", bad_rules.to_str().unwrap(), "process"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("rule 'x'"));

    assert_eq!(code(&run(&["--input", inp, "--out", out, "--sample-pct", "0", "ingest"])), 4);

    let bad_patterns = tmp.path().join("patterns.toml");
    fs::write(&bad_patterns, "[[pattern]]\nkind = \"nope\"\ntitle = \"x\"\n").unwrap();
    assert_eq!(code(&run(&["--input", inp, "--out", out, "titles", "--patterns", bad_patterns.to_str().unwrap()])), 4);
}

fn synthetic(dir: &Path) -> PathBuf {
    let versions = pagediff::synth::near_duplicate_corpus(&pagediff::synth::NearDuplicateConfig {
        sites: 12,
        versions: 6,
        ..Default::default()
    });
    let p = dir.join("synthetic.jsonl");
    let mut buf = Vec::new();
    pagediff::corpus::write_jsonl(&mut buf, &versions).unwrap();
    fs::write(&p, buf).unwrap();
    p
}

#[test]
fn identical_runs_give_identical_outputs() {
    let tmp = TempDir::new().unwrap();
    let input = synthetic(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (dir, jobs) in [(&a, "1"), (&b, "4")] {
        let o = run(&["--input", input.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--jobs", jobs, "process"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest = fs::read_to_string(a.join("manifest.json")).unwrap();
    assert_eq!(manifest, fs::read_to_string(b.join("manifest.json")).unwrap());

    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    let outputs = m["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|e| e["file"] == "timings.csv" && e["deterministic"] == false));
    for e in outputs.iter().filter(|e| e["deterministic"] == true) {
        let f = e["file"].as_str().unwrap();
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn environment_mirrors_flags() {
    let tmp = TempDir::new().unwrap();
    let input = three_versions(tmp.path());
    let out = tmp.path().join("env");
    let o = bin()
        .env("PAGEDIFF_INPUT", &input)
        .env("PAGEDIFF_OUT", &out)
        .env("PAGEDIFF_CHUNK_SIZE", "0")
        .arg("process")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["unique_templates"], 2);
}

#[test]
fn ingest_logs_every_exclusion() {
    let tmp = TempDir::new().unwrap();
    let input = write_corpus(
        tmp.path(),
        &[
            record("keep", "2022-01-01T00:00:00Z", "<title>Shop</title>a"),
            record("keep", "2022-01-02T00:00:00Z", "<title>Shop</title>b"),
            record("keep", "2022-01-03T00:00:00Z", "<title>Shop</title>b"),
            record("keep", "2022-01-04T00:00:00Z", ""),
            record("lonely", "2022-01-01T00:00:00Z", "<p>only one</p>"),
            record("moved", "2022-01-01T00:00:00Z", "<meta http-equiv=\"refresh\" content=\"0; url=http://x.onion\">"),
            "{not json".to_owned(),
        ],
    );
    let out = tmp.path().join("out");
    let o = run(&["--input", input.to_str().unwrap(), "--out", out.to_str().unwrap(), "ingest"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut crit: Vec<String> = csv_rows(&out.join("exclusions.csv")).into_iter().map(|r| r[2].clone()).collect();
    crit.sort();
    assert_eq!(crit, ["a", "dup", "e", "f"]);
    assert_eq!(csv_rows(&out.join("malformed.csv")).len(), 1);
    let audit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit["balances"], true);
    assert_eq!(audit["surviving_versions"], 2);
    let kept = fs::read_to_string(out.join("histories.jsonl")).unwrap();
    assert_eq!(kept.lines().count(), 2);
}

#[test]
fn dumped_rules_reload() {
    let tmp = TempDir::new().unwrap();
    let first = run(&["dump-rules"]);
    assert_eq!(code(&first), 0);
    let path = tmp.path().join("rules.toml");
    fs::write(&path, &first.stdout).unwrap();
    let second = run(&["--rules", path.to_str().unwrap(), "dump-rules"]);
    assert_eq!(code(&second), 0);
    let text = String::from_utf8(second.stdout).unwrap();
    assert!(text.contains("name = \"price-prefix\""));
    assert_eq!(text.matches("[[rule]]").count(), 10);
}

#[test]
fn analyzer_commands_write_tables() {
    let tmp = TempDir::new().unwrap();
    let addr = "1BoatSLRHtKNngkdXEeobR76b53LETtpyT";
    let input = write_corpus(
        tmp.path(),
        &[
            record("s", "2022-01-01T00:00:00Z", &format!("<title>Shop</title><a href=\"/pay/{addr}\">pay</a>")),
            record("s", "2022-01-02T00:00:00Z", "<title>Welcome to nginx!</title>"),
            record("s", "2022-01-09T00:00:00Z", "<title>Shop</title><p>back</p>"),
        ],
    );
    let inp = input.to_str().unwrap();
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();

    assert_eq!(code(&run(&["--input", inp, "--out", out_s, "scan-bitcoin"])), 0);
    let rows = csv_rows(&out.join("bitcoin.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0][3].as_str(), rows[0][5].as_str(), rows[0][6].as_str()), ("hyperlink", addr, "true"));

    assert_eq!(code(&run(&["--input", inp, "--out", out_s, "titles"])), 0);
    let rows = csv_rows(&out.join("titles.csv"));
    let kinds: Vec<&str> = rows.iter().map(|r| r[5].as_str()).collect();
    assert_eq!(kinds, ["", "fresh-install", ""]);

    assert_eq!(code(&run(&["--input", inp, "--out", out_s, "dynamics"])), 0);
    let rows = csv_rows(&out.join("dynamics_sites.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][6], "8");

    assert_eq!(code(&run(&["--input", inp, "--out", out_s, "compare-similarity", "--k", "2"])), 0);
    assert_eq!(csv_rows(&out.join("pairs.csv")).len(), 2);
}
