use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::process::SiteResult;
use super::CorpusError;
use crate::annotate::TemplateDigest;
use crate::diff::VersionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterKey {
    Raw,
    Template,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Posting {
    pub site_id: String,
    pub version: VersionId,
}

type Postings = BTreeMap<TemplateDigest, BTreeSet<Posting>>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Tables {
    digest_algorithm: String,
    templates: Postings,
    raw: Postings,
}

/// Digest → versions, for templates and raw pages. Safe to fill from many
/// threads; each site's postings land under a single write lock.
#[derive(Debug, Default)]
pub struct TemplateIndex {
    tables: RwLock<Tables>,
}

impl TemplateIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, key: ClusterKey, digest: TemplateDigest, posting: Posting) {
        let mut t = self.tables.write().expect("index lock");
        table_mut(&mut t, key).entry(digest).or_default().insert(posting);
    }

    pub fn insert_site(&self, site: &SiteResult) {
        let mut t = self.tables.write().expect("index lock");
        for v in &site.versions {
            let posting = Posting {
                site_id: site.site_id.clone(),
                version: v.version,
            };
            t.templates.entry(v.template_digest).or_default().insert(posting.clone());
            t.raw.entry(v.raw_digest).or_default().insert(posting);
        }
    }

    pub fn lookup(&self, key: ClusterKey, digest: &TemplateDigest) -> Vec<Posting> {
        let t = self.tables.read().expect("index lock");
        table(&t, key).get(digest).map(|s| s.iter().cloned().collect()).unwrap_or_default()
    }

    pub fn digests(&self, key: ClusterKey) -> Vec<TemplateDigest> {
        let t = self.tables.read().expect("index lock");
        table(&t, key).keys().copied().collect()
    }

    pub fn unique(&self, key: ClusterKey) -> usize {
        table(&self.tables.read().expect("index lock"), key).len()
    }

    /// Every digest with its postings, ascending by digest.
    pub fn entries(&self, key: ClusterKey) -> Vec<(TemplateDigest, Vec<Posting>)> {
        let t = self.tables.read().expect("index lock");
        table(&t, key).iter().map(|(d, p)| (*d, p.iter().cloned().collect())).collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let mut t = self.tables.read().expect("index lock").clone();
        t.digest_algorithm = TemplateDigest::ALGORITHM.to_owned();
        let tmp = path.with_extension("tmp");
        let write = || -> std::io::Result<()> {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            serde_json::to_writer(&mut w, &t)?;
            w.flush()?;
            drop(w);
            fs::rename(&tmp, path)
        };
        write().map_err(|e| CorpusError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
        let t: Tables = serde_json::from_reader(BufReader::new(file)).map_err(|e| CorpusError::Index {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if t.digest_algorithm != TemplateDigest::ALGORITHM {
            return Err(CorpusError::Index {
                path: path.display().to_string(),
                message: format!("digest algorithm {:?} is not {}", t.digest_algorithm, TemplateDigest::ALGORITHM),
            });
        }
        Ok(TemplateIndex { tables: RwLock::new(t) })
    }
}

impl PartialEq for TemplateIndex {
    fn eq(&self, other: &Self) -> bool {
        if std::ptr::eq(self, other) {
            return true;
        }
        let (a, b) = (self.tables.read().expect("index lock"), other.tables.read().expect("index lock"));
        a.templates == b.templates && a.raw == b.raw
    }
}

fn table(t: &Tables, key: ClusterKey) -> &Postings {
    match key {
        ClusterKey::Raw => &t.raw,
        ClusterKey::Template => &t.templates,
    }
}

fn table_mut(t: &mut Tables, key: ClusterKey) -> &mut Postings {
    match key {
        ClusterKey::Raw => &mut t.raw,
        ClusterKey::Template => &mut t.templates,
    }
}
