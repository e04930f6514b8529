//! Seeded synthetic corpora for tests, benchmarks and demos.
//!
//! [`near_duplicate_corpus`] builds shop pages whose versions differ only in
//! fields the built-in rules explain (dates, prices, order counters, Bitcoin
//! addresses) plus an unexplainable nonce. [`poisson_corpus`] builds pages
//! that change at exponentially distributed times and are crawled roughly
//! every 18 hours for a random visible lifespan.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::corpus::PageVersion;

const BASE58: &[u8] = b"123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";
const WORDS: [&str; 12] = [
    "lorem", "ipsum", "dolor", "sit", "amet", "consectetur", "adipiscing", "elit", "sed", "do", "eiusmod", "tempor",
];
const TAGS: [&str; 5] = ["drugs", "fraud", "hacking", "counterfeit", "forum"];

fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2022, 1, 3, 6, 0, 0).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearDuplicateConfig {
    pub sites: usize,
    pub versions: usize,
    pub layouts: usize,
    pub price_rate: f64,
    pub orders_rate: f64,
    pub address_rate: f64,
    pub nonce_rate: f64,
    pub seed: u64,
}

impl Default for NearDuplicateConfig {
    fn default() -> Self {
        NearDuplicateConfig {
            sites: 50,
            versions: 20,
            layouts: 10,
            price_rate: 0.5,
            orders_rate: 0.3,
            address_rate: 0.2,
            nonce_rate: 0.1,
            seed: 7,
        }
    }
}

struct Fields {
    price_sat: u64,
    orders: u32,
    address: String,
    nonce: String,
}

fn base58_address(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::from(if rng.random_bool(0.5) { "1" } else { "3" });
    for _ in 0..33 {
        s.push(BASE58[rng.random_range(0..BASE58.len())] as char);
    }
    s
}

fn hex_nonce(rng: &mut ChaCha8Rng) -> String {
    format!("{:010x}", rng.random::<u64>() & 0xff_ffff_ffff)
}

fn filler(layout: usize, paragraph: usize) -> String {
    let n = 8 + (layout * 7 + paragraph * 3) % 40;
    (0..n).map(|i| WORDS[(i + layout + paragraph) % WORDS.len()]).collect::<Vec<_>>().join(" ")
}

fn render(layout: usize, day: DateTime<Utc>, f: &Fields) -> String {
    let shop = format!("Hidden Bazaar {layout}");
    let mut h = format!("<html><head><title>{shop}</title>");
    if layout.is_multiple_of(3) {
        h.push_str("<script>var cart = [];function add(i){cart.push(i);}</script>");
    }
    h.push_str("</head><body>\n<div class=\"nav\">");
    for i in 0..(2 + layout % 4) {
        h.push_str(&format!("<a href=\"/c/{i}\">{}</a> ", WORDS[(i + layout) % WORDS.len()]));
    }
    h.push_str("</div>\n");
    h.push_str(&format!("<p>Updated {}</p>\n", day.format("%d/%m/%Y")));
    for p in 0..(1 + layout % 3) {
        h.push_str(&format!("<p>{}</p>\n", filler(layout, p)));
    }
    let btc = f.price_sat as f64 / 1e8;
    h.push_str(&format!("<div class=\"item\">Price: {btc:.4} BTC</div>\n"));
    h.push_str(&format!("<div>{} Completed Orders</div>\n", f.orders));
    h.push_str(&format!(
        "<a href=\"https://www.blockchain.com/btc/address/{a}\">wallet</a> Send BTC to: {a}\n",
        a = f.address
    ));
    h.push_str(&format!("<form><input type=\"hidden\" name=\"_wpnonce\" value=\"{}\"></form>\n", f.nonce));
    h.push_str(&format!("<footer>{shop} {}</footer></body></html>\n", filler(layout, 9)));
    h
}

/// Sites share one of `layouts` page layouts (site index modulo layouts);
/// versions are one day apart. Each version gets a new date, and the other
/// fields change independently with their configured probabilities.
pub fn near_duplicate_corpus(cfg: &NearDuplicateConfig) -> Vec<PageVersion> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.sites * cfg.versions);
    let layouts = cfg.layouts.max(1);
    for s in 0..cfg.sites {
        let layout = s % layouts;
        let site_id = format!("site{s:03}");
        let start = epoch() + Duration::hours(rng.random_range(0..24 * 30));
        let mut f = Fields {
            price_sat: rng.random_range(10_000..5_000_000),
            orders: rng.random_range(10..5000),
            address: base58_address(&mut rng),
            nonce: hex_nonce(&mut rng),
        };
        for v in 0..cfg.versions {
            if v > 0 {
                if rng.random_bool(cfg.price_rate) {
                    f.price_sat = rng.random_range(10_000..5_000_000);
                }
                if rng.random_bool(cfg.orders_rate) {
                    f.orders += rng.random_range(1..50);
                }
                if rng.random_bool(cfg.address_rate) {
                    f.address = base58_address(&mut rng);
                }
                if rng.random_bool(cfg.nonce_rate) {
                    f.nonce = hex_nonce(&mut rng);
                }
            }
            let at = start + Duration::days(v as i64);
            let page = PageVersion::new(&site_id, at, render(layout, at, &f)).with_tags([TAGS[layout % TAGS.len()]]);
            out.push(page);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonConfig {
    pub sites: usize,
    /// Per-site mean change interval is drawn uniformly from this range (days).
    pub mean_interval_days: (f64, f64),
    /// Visible lifespan is drawn uniformly from this range (days).
    pub lifespan_days: (f64, f64),
    pub crawl_hours: f64,
    pub jitter_hours: f64,
    pub seed: u64,
}

impl Default for PoissonConfig {
    fn default() -> Self {
        PoissonConfig {
            sites: 200,
            mean_interval_days: (0.5, 60.0),
            lifespan_days: (1.0, 300.0),
            crawl_hours: 18.0,
            jitter_hours: 3.0,
            seed: 11,
        }
    }
}

/// Content changes form a Poisson process with a per-site rate; the crawler
/// records whatever content is current at each visit.
pub fn poisson_corpus(cfg: &PoissonConfig) -> Vec<PageVersion> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for s in 0..cfg.sites {
        let site_id = format!("onion{s:04}");
        let mean = rng.random_range(cfg.mean_interval_days.0..=cfg.mean_interval_days.1);
        let life_h = 24.0 * rng.random_range(cfg.lifespan_days.0..=cfg.lifespan_days.1);
        let exp = Exp::new(1.0 / (mean * 24.0)).expect("positive rate");
        let start = epoch() + Duration::minutes(rng.random_range(0..60 * 24 * 60));

        let mut next_change = exp.sample(&mut rng);
        let mut content = 0u32;
        let mut t = 0.0;
        while t <= life_h {
            while next_change <= t {
                content += 1;
                next_change += exp.sample(&mut rng);
            }
            let at = start + Duration::seconds((t * 3600.0) as i64);
            let html = format!("<html><head><title>Site {s}</title></head><body><p>revision {content}</p></body></html>");
            out.push(PageVersion::new(&site_id, at, html));
            let jitter = rng.random_range(-cfg.jitter_hours..=cfg.jitter_hours);
            t += (cfg.crawl_hours + jitter).max(1.0);
        }
    }
    out
}
