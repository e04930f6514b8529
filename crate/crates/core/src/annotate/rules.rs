use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_RULES_TOML: &str = include_str!("default_rules.toml");

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule file does not parse: {0}")]
    Parse(String),
    #[error("rule '{name}' (entry {position}): invalid {field} pattern: {source}")]
    Regex {
        name: String,
        position: usize,
        field: &'static str,
        #[source]
        source: Box<regex::Error>,
    },
    #[error("rule '{name}' (entry {position}): missing required field '{field}'")]
    Missing {
        name: String,
        position: usize,
        field: &'static str,
    },
    #[error("rule entry {position}: empty rule name")]
    EmptyName { position: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    version: Option<String>,
    #[serde(default, rename = "rule")]
    rules: Vec<RuleEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleEntry {
    name: String,
    word: Option<String>,
    pre: Option<String>,
    target: Option<String>,
    post: Option<String>,
    priority: Option<i64>,
    enabled: Option<bool>,
    rationale: Option<String>,
}

#[derive(Debug, Clone)]
pub struct AnnotationRule {
    name: String,
    word: String,
    pre_src: String,
    target_src: String,
    post_src: String,
    priority: i64,
    enabled: bool,
    rationale: Option<String>,
    pre: Regex,
    target: Regex,
    post: Regex,
}

impl AnnotationRule {
    pub fn new(
        name: &str,
        word: Option<&str>,
        pre: &str,
        target: &str,
        post: &str,
        priority: i64,
    ) -> Result<Self, RuleError> {
        let entry = RuleEntry {
            name: name.to_owned(),
            word: word.map(str::to_owned),
            pre: Some(pre.to_owned()),
            target: Some(target.to_owned()),
            post: Some(post.to_owned()),
            priority: Some(priority),
            enabled: Some(true),
            rationale: None,
        };
        compile(&entry, 0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn priority(&self) -> i64 {
        self.priority
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn rationale(&self) -> Option<&str> {
        self.rationale.as_deref()
    }

    pub fn patterns(&self) -> (&str, &str, &str) {
        (&self.pre_src, &self.target_src, &self.post_src)
    }

    pub(crate) fn matches_target_all(&self, sides: &[&str]) -> bool {
        sides.iter().all(|s| self.target.is_match(s))
    }

    pub(crate) fn matches_pre(&self, pre_common: &str) -> bool {
        self.pre_src.is_empty() || self.pre.is_match(pre_common)
    }

    pub(crate) fn matches_post(&self, post_common: &str) -> bool {
        self.post_src.is_empty() || self.post.is_match(post_common)
    }

    fn to_entry(&self) -> RuleEntry {
        RuleEntry {
            name: self.name.clone(),
            word: Some(self.word.clone()),
            pre: Some(self.pre_src.clone()),
            target: Some(self.target_src.clone()),
            post: Some(self.post_src.clone()),
            priority: Some(self.priority),
            enabled: Some(self.enabled),
            rationale: self.rationale.clone(),
        }
    }
}

fn compile(entry: &RuleEntry, position: usize) -> Result<AnnotationRule, RuleError> {
    if entry.name.trim().is_empty() {
        return Err(RuleError::EmptyName { position });
    }
    let missing = |field| RuleError::Missing {
        name: entry.name.clone(),
        position,
        field,
    };
    let target_src = entry.target.clone().ok_or_else(|| missing("target"))?;
    let priority = entry.priority.ok_or_else(|| missing("priority"))?;
    let pre_src = entry.pre.clone().unwrap_or_default();
    let post_src = entry.post.clone().unwrap_or_default();
    let build = |field: &'static str, pattern: String| {
        Regex::new(&pattern).map_err(|e| RuleError::Regex {
            name: entry.name.clone(),
            position,
            field,
            source: Box::new(e),
        })
    };
    Ok(AnnotationRule {
        name: entry.name.clone(),
        word: entry.word.clone().unwrap_or_else(|| entry.name.clone()),
        pre: build("pre", format!(r"(?:{pre_src})\z"))?,
        target: build("target", format!(r"\A(?:{target_src})\z"))?,
        post: build("post", format!(r"\A(?:{post_src})"))?,
        pre_src,
        target_src,
        post_src,
        priority,
        enabled: entry.enabled.unwrap_or(true),
        rationale: entry.rationale.clone(),
    })
}

/// Rules ordered by `(priority, name)`; immutable once loaded.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<AnnotationRule>,
    version: String,
}

impl RuleSet {
    pub fn builtin() -> Self {
        load_rules(None).expect("built-in rules are valid")
    }

    pub fn from_rules(version: impl Into<String>, mut rules: Vec<AnnotationRule>) -> Self {
        rules.sort_by(|a, b| (a.priority, &a.name).cmp(&(b.priority, &b.name)));
        RuleSet {
            rules,
            version: version.into(),
        }
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[AnnotationRule] {
        &self.rules
    }

    pub fn get(&self, name: &str) -> Option<&AnnotationRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn enabled(&self) -> impl Iterator<Item = &AnnotationRule> {
        self.rules.iter().filter(|r| r.enabled)
    }

    /// Distinct reserved words of enabled rules, in priority order.
    pub fn words(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in self.enabled() {
            if !out.contains(&r.word()) {
                out.push(r.word());
            }
        }
        out
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        Self::builtin()
    }
}

fn parse(text: &str) -> Result<RuleFile, RuleError> {
    toml::from_str(text).map_err(|e| RuleError::Parse(e.to_string()))
}

/// Built-in rules, with the rules of `config_text` merged over them by name.
pub fn load_rules(config_text: Option<&str>) -> Result<RuleSet, RuleError> {
    let defaults = parse(DEFAULT_RULES_TOML)?;
    let mut entries: Vec<RuleEntry> = defaults.rules;
    let mut version = defaults.version.unwrap_or_else(|| "builtin".to_owned());
    // position 0 marks built-in entries in diagnostics
    let mut positions: Vec<usize> = vec![0; entries.len()];

    if let Some(text) = config_text {
        let file = parse(text)?;
        if let Some(v) = file.version {
            version = format!("{version}+{v}");
        }
        for (idx, entry) in file.rules.into_iter().enumerate() {
            let position = idx + 1;
            match entries.iter().position(|e| e.name == entry.name) {
                Some(at) => {
                    let base = &mut entries[at];
                    base.word = entry.word.or(base.word.take());
                    base.pre = entry.pre.or(base.pre.take());
                    base.target = entry.target.or(base.target.take());
                    base.post = entry.post.or(base.post.take());
                    base.priority = entry.priority.or(base.priority);
                    base.enabled = entry.enabled.or(base.enabled);
                    base.rationale = entry.rationale.or(base.rationale.take());
                    positions[at] = position;
                }
                None => {
                    entries.push(entry);
                    positions.push(position);
                }
            }
        }
    }

    let rules = entries
        .iter()
        .zip(&positions)
        .map(|(e, &p)| compile(e, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RuleSet::from_rules(version, rules))
}

/// Serializes a rule set back into the rule-file format.
pub fn to_toml(rules: &RuleSet) -> String {
    #[derive(serde::Serialize)]
    struct Out<'a> {
        version: &'a str,
        rule: Vec<OutRule>,
    }
    #[derive(serde::Serialize)]
    struct OutRule {
        name: String,
        word: String,
        priority: i64,
        enabled: bool,
        pre: String,
        target: String,
        post: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        rationale: Option<String>,
    }
    let out = Out {
        version: &rules.version,
        rule: rules
            .rules
            .iter()
            .map(|r| {
                let e = r.to_entry();
                OutRule {
                    name: e.name,
                    word: e.word.unwrap_or_default(),
                    priority: e.priority.unwrap_or_default(),
                    enabled: e.enabled.unwrap_or(true),
                    pre: e.pre.unwrap_or_default(),
                    target: e.target.unwrap_or_default(),
                    post: e.post.unwrap_or_default(),
                    rationale: e.rationale,
                }
            })
            .collect(),
    };
    toml::to_string_pretty(&out).expect("rule sets serialize")
}
