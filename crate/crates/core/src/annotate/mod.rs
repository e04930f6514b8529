//! Context-sensitive annotation of differences and annotated templates.
//!
//! Each difference of an aligned script (a delete/insert block or a
//! pseudo-difference) is offered to the rules in priority order together with
//! the common text around it. The first rule that accepts it replaces the
//! difference with its reserved word in both templates; otherwise the literal
//! text stays and the difference counts as a failure. Two versions are
//! near-duplicates exactly when their templates hash to the same digest.

mod rules;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diff::{Change, Op};
use crate::align::AlignedScript;

pub use rules::{load_rules, to_toml, AnnotationRule, RuleError, RuleSet, DEFAULT_RULES_TOML};

/// Bytes of common text offered to `pre`/`post` context patterns.
pub const CONTEXT_WINDOW: usize = 256;

/// Byte that wraps reserved words in the canonical rendering; it never
/// occurs in UTF-8 text.
const SENTINEL: u8 = 0xFF;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Annotated { rule: String, word: String },
    Failed,
}

impl Outcome {
    pub fn word(&self) -> Option<&str> {
        match self {
            Outcome::Annotated { word, .. } => Some(word),
            Outcome::Failed => None,
        }
    }
}

pub fn annotate_change(
    delete_text: &str,
    insert_text: &str,
    pre_common: &str,
    post_common: &str,
    rules: &RuleSet,
) -> Outcome {
    let pre = tail(pre_common, CONTEXT_WINDOW);
    let post = head(post_common, CONTEXT_WINDOW);
    let sides: &[&str] = match (delete_text.is_empty(), insert_text.is_empty()) {
        (true, true) => &[""],
        (false, true) => &[delete_text],
        (true, false) => &[insert_text],
        (false, false) => &[delete_text, insert_text],
    };
    rules
        .enabled()
        .find(|r| r.matches_target_all(sides) && r.matches_pre(pre) && r.matches_post(post))
        .map_or(Outcome::Failed, |r| Outcome::Annotated {
            rule: r.name().to_owned(),
            word: r.word().to_owned(),
        })
}

fn tail(s: &str, max: usize) -> &str {
    if s.len() <= max {
        return s;
    }
    let mut start = s.len() - max;
    while !s.is_char_boundary(start) {
        start += 1;
    }
    &s[start..]
}

fn head(s: &str, max: usize) -> &str {
    if s.len() <= max {
        return s;
    }
    let mut end = max;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    &s[..end]
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Segment {
    Literal(String),
    Word(String),
}

/// One entry of the audit trail kept for every difference of a script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub delete: String,
    pub insert: String,
    pub pseudo: bool,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub per_word: BTreeMap<String, u64>,
    pub failures: u64,
}

impl Tally {
    pub fn successes(&self) -> u64 {
        self.per_word.values().sum()
    }

    pub fn total(&self) -> u64 {
        self.successes() + self.failures
    }

    pub fn merge(&mut self, other: &Tally) {
        for (w, n) in &other.per_word {
            *self.per_word.entry(w.clone()).or_default() += n;
        }
        self.failures += other.failures;
    }

    fn record(&mut self, outcome: &Outcome) {
        match outcome {
            Outcome::Annotated { word, .. } => *self.per_word.entry(word.clone()).or_default() += 1,
            Outcome::Failed => self.failures += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedTemplate {
    segments: Vec<Segment>,
    pub tally: Tally,
    pub trace: Vec<AnnotationRecord>,
}

impl AnnotatedTemplate {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Template from literal text only, e.g. for a site seen once.
    pub fn literal(text: &str) -> Self {
        let mut t = AnnotatedTemplate::default();
        t.push_literal(text);
        t
    }

    fn push_literal(&mut self, text: &str) {
        if text.is_empty() {
            return;
        }
        match self.segments.last_mut() {
            Some(Segment::Literal(s)) => s.push_str(text),
            _ => self.segments.push(Segment::Literal(text.to_owned())),
        }
    }

    fn push_word(&mut self, word: &str) {
        self.segments.push(Segment::Word(word.to_owned()));
    }

    /// Sentinel-delimited UTF-8; the input to [`template_hash`].
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.extend_from_slice(s.as_bytes()),
                Segment::Word(w) => {
                    out.push(SENTINEL);
                    out.extend_from_slice(w.as_bytes());
                    out.push(SENTINEL);
                }
            }
        }
        out
    }

    pub fn digest(&self) -> TemplateDigest {
        template_hash(self)
    }
}

/// Human-readable rendering with reserved words in braces.
impl fmt::Display for AnnotatedTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => f.write_str(s)?,
                Segment::Word(w) => write!(f, "{{{w}}}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TemplateDigest(#[serde(with = "hex_bytes")] pub [u8; 32]);

impl TemplateDigest {
    pub const ALGORITHM: &'static str = "sha256";

    pub fn of_bytes(bytes: &[u8]) -> Self {
        TemplateDigest(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).ok()?;
        Some(TemplateDigest(out))
    }
}

impl fmt::Display for TemplateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(out)
    }
}

pub fn template_hash(t: &AnnotatedTemplate) -> TemplateDigest {
    TemplateDigest::of_bytes(&t.canonical_bytes())
}

/// Near-duplicates by definition: equal template digests.
pub fn is_near_duplicate(a: &AnnotatedTemplate, b: &AnnotatedTemplate) -> bool {
    template_hash(a) == template_hash(b)
}

/// Renders the old-side and new-side templates of one aligned script.
pub fn build_templates(
    script: &AlignedScript,
    rules: &RuleSet,
) -> (AnnotatedTemplate, AnnotatedTemplate) {
    let mut old = AnnotatedTemplate::default();
    let mut new = AnnotatedTemplate::default();
    let mut tally = Tally::default();
    let mut trace = Vec::new();
    let changes = &script.changes;

    let equal_text = |idx: Option<usize>| -> String {
        match idx.and_then(|i| changes.get(i)) {
            Some(c) if c.op == Op::Equal => c.text(),
            _ => String::new(),
        }
    };

    if changes.first().is_some_and(|c| c.op == Op::Equal) {
        let outcome = annotate_change("", "", "", &equal_text(Some(0)), rules);
        tally.record(&outcome);
        trace.push(AnnotationRecord {
            delete: String::new(),
            insert: String::new(),
            pseudo: false,
            outcome,
        });
    }

    let mut i = 0;
    while i < changes.len() {
        let c = &changes[i];
        if c.op == Op::Equal {
            let text = c.text();
            old.push_literal(&text);
            new.push_literal(&text);
            i += 1;
            continue;
        }
        let (end, delete, insert, pseudo) = difference_at(changes, i);
        let pre = if i > 0 { equal_text(Some(i - 1)) } else { String::new() };
        let post = equal_text(Some(end));
        let outcome = annotate_change(&delete, &insert, &pre, &post, rules);
        match outcome.word() {
            Some(w) => {
                old.push_word(w);
                new.push_word(w);
            }
            None => {
                old.push_literal(&delete);
                new.push_literal(&insert);
            }
        }
        tally.record(&outcome);
        trace.push(AnnotationRecord {
            delete,
            insert,
            pseudo,
            outcome,
        });
        i = end;
    }

    old.tally = tally.clone();
    new.tally = tally;
    old.trace = trace.clone();
    new.trace = trace;
    (old, new)
}

/// The difference starting at `start`: a pseudo pair, or a block of real
/// deletes and inserts. Returns the index after it and its two texts.
fn difference_at(changes: &[Change], start: usize) -> (usize, String, String, bool) {
    let c = &changes[start];
    if c.pseudo && c.op == Op::Delete {
        if let Some(n) = changes.get(start + 1).filter(|n| n.pseudo && n.op == Op::Insert) {
            return (start + 2, c.text(), n.text(), true);
        }
    }
    let mut delete = String::new();
    let mut insert = String::new();
    let mut i = start;
    while let Some(c) = changes.get(i) {
        if c.op == Op::Equal || (i > start && c.pseudo && c.op == Op::Delete) {
            break;
        }
        match c.op {
            Op::Delete => delete.push_str(&c.text()),
            _ => insert.push_str(&c.text()),
        }
        i += 1;
    }
    (i, delete, insert, false)
}

#[cfg(test)]
mod tests;
