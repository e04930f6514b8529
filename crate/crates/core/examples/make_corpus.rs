//! Writes a synthetic corpus as JSONL.
//!
//! `cargo run -p pagediff-core --example make_corpus -- near-dup corpus.jsonl [seed]`
//! `cargo run -p pagediff-core --example make_corpus -- poisson corpus.jsonl [seed]`

use std::fs::File;
use std::io::BufWriter;

use pagediff::corpus::write_jsonl;
use pagediff::synth::{near_duplicate_corpus, poisson_corpus, NearDuplicateConfig, PoissonConfig};

fn main() -> std::io::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (Some(kind), Some(path)) = (args.first(), args.get(1)) else {
        eprintln!("usage: make_corpus near-dup|poisson <out.jsonl> [seed]");
        std::process::exit(2);
    };
    let seed = args.get(2).and_then(|s| s.parse().ok());
    let versions = match kind.as_str() {
        "near-dup" => {
            let d = NearDuplicateConfig::default();
            near_duplicate_corpus(&NearDuplicateConfig { seed: seed.unwrap_or(d.seed), ..d })
        }
        "poisson" => {
            let d = PoissonConfig::default();
            poisson_corpus(&PoissonConfig { seed: seed.unwrap_or(d.seed), ..d })
        }
        other => {
            eprintln!("unknown corpus kind {other:?}");
            std::process::exit(2);
        }
    };
    write_jsonl(BufWriter::new(File::create(path)?), &versions)
}
