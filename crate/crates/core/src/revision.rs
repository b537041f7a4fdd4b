//! Append-only, content-addressed revision history for specification
//! entities (plan libraries, artifact templates, organisation specs).
//!
//! Every entity is keyed by its canonical resource path, e.g.
//! `/agents/alice/plans`. Revisions are numbered 1..n without gaps, and a
//! record whose content hash equals the current head is never appended.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bump {
    Major,
    Minor,
    #[default]
    Patch,
}

impl std::str::FromStr for Bump {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "major" => Ok(Bump::Major),
            "minor" => Ok(Bump::Minor),
            "patch" => Ok(Bump::Patch),
            other => Err(format!("unknown version bump `{other}` (expected major, minor or patch)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SemVer {
    pub major: u64,
    pub minor: u64,
    pub patch: u64,
}

impl SemVer {
    pub fn bumped(self, bump: Bump) -> SemVer {
        match bump {
            Bump::Major => SemVer { major: self.major + 1, minor: 0, patch: 0 },
            Bump::Minor => SemVer { major: self.major, minor: self.minor + 1, patch: 0 },
            Bump::Patch => SemVer { patch: self.patch + 1, ..self },
        }
    }
}

impl std::fmt::Display for SemVer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionRecord {
    pub entity: String,
    pub revision: u64,
    pub semver: SemVer,
    pub content: String,
    pub content_hash: String,
    pub created_at: DateTime<Utc>,
}

pub fn content_hash(content: &str) -> String {
    hex::encode(Sha256::digest(content.as_bytes()))
}

/// Outcome of [`RevisionStore::record`].
#[derive(Debug, Clone)]
pub struct Recorded {
    pub record: Arc<RevisionRecord>,
    /// False when the content matched the head and nothing was appended.
    pub created: bool,
}

#[derive(Debug, Default)]
pub struct RevisionStore {
    entities: BTreeMap<String, Vec<Arc<RevisionRecord>>>,
    dir: Option<PathBuf>,
}

impl RevisionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens a store persisted as one newline-delimited JSON file per
    /// entity under `dir`, loading any history already there.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut entities = BTreeMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let mut records = Vec::new();
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: RevisionRecord = serde_json::from_str(&line)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
                records.push(Arc::new(rec));
            }
            if let Some(first) = records.first() {
                entities.insert(first.entity.clone(), records);
            }
        }
        Ok(RevisionStore { entities, dir: Some(dir) })
    }

    pub fn head(&self, entity: &str) -> Option<Arc<RevisionRecord>> {
        self.entities.get(entity).and_then(|r| r.last().cloned())
    }

    /// Appends `content` as the next revision of `entity`, unless it is
    /// hash-identical to the current head (then the head is returned).
    pub fn record(&mut self, entity: &str, content: &str, bump: Bump) -> Result<Recorded> {
        let hash = content_hash(content);
        let head = self.head(entity);
        if let Some(h) = &head {
            if h.content_hash == hash {
                return Ok(Recorded { record: h.clone(), created: false });
            }
        }
        let (revision, semver) = match &head {
            Some(h) => (h.revision + 1, h.semver.bumped(bump)),
            None => (1, SemVer::default().bumped(bump)),
        };
        let rec = Arc::new(RevisionRecord {
            entity: entity.to_string(),
            revision,
            semver,
            content: content.to_string(),
            content_hash: hash,
            created_at: Utc::now(),
        });
        if let Some(dir) = &self.dir {
            let path = dir.join(file_name(entity));
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            let line = serde_json::to_string(rec.as_ref()).expect("revision records serialize");
            writeln!(f, "{line}")?;
            f.sync_data()?;
        }
        self.entities.entry(entity.to_string()).or_default().push(rec.clone());
        Ok(Recorded { record: rec, created: true })
    }

    /// Revision history, oldest first; empty for unknown entities.
    pub fn list(&self, entity: &str) -> Vec<Arc<RevisionRecord>> {
        self.entities.get(entity).cloned().unwrap_or_default()
    }

    pub fn get(&self, entity: &str, revision: u64) -> Option<Arc<RevisionRecord>> {
        let records = self.entities.get(entity)?;
        let idx = usize::try_from(revision.checked_sub(1)?).ok()?;
        records.get(idx).cloned()
    }

    pub fn entities(&self) -> impl Iterator<Item = &String> {
        self.entities.keys()
    }

    pub fn is_persistent(&self) -> bool {
        self.dir.is_some()
    }
}

/// `/agents/alice/plans` -> `agents~alice~plans.jsonl`. Resource names never
/// contain `~`, so the mapping is injective.
fn file_name(entity: &str) -> String {
    format!("{}.jsonl", entity.trim_start_matches('/').replace('/', "~"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_record_is_revision_one() {
        let mut s = RevisionStore::in_memory();
        let r = s.record("/e", "a", Bump::Patch).unwrap();
        assert!(r.created);
        assert_eq!(r.record.revision, 1);
        assert_eq!(r.record.semver.to_string(), "0.0.1");
    }

    #[test]
    fn identical_content_keeps_head() {
        let mut s = RevisionStore::in_memory();
        s.record("/e", "a", Bump::Patch).unwrap();
        let again = s.record("/e", "a", Bump::Major).unwrap();
        assert!(!again.created);
        assert_eq!(again.record.revision, 1);
        assert_eq!(s.list("/e").len(), 1);
    }

    #[test]
    fn gapless_and_verbatim() {
        let mut s = RevisionStore::in_memory();
        for c in ["one", "two", "three"] {
            s.record("/e", c, Bump::Patch).unwrap();
        }
        let revs: Vec<u64> = s.list("/e").iter().map(|r| r.revision).collect();
        assert_eq!(revs, vec![1, 2, 3]);
        assert_eq!(s.get("/e", 2).unwrap().content, "two");
        assert!(s.get("/e", 99).is_none());
        assert!(s.get("/e", 0).is_none());
        assert!(s.list("/unknown").is_empty());
    }

    #[test]
    fn semver_bumps() {
        let mut s = RevisionStore::in_memory();
        s.record("/e", "1", Bump::Patch).unwrap();
        s.record("/e", "2", Bump::Minor).unwrap();
        s.record("/e", "3", Bump::Patch).unwrap();
        let v = s.record("/e", "4", Bump::Major).unwrap();
        assert_eq!(v.record.semver.to_string(), "1.0.0");
        assert_eq!(s.get("/e", 3).unwrap().semver.to_string(), "0.1.1");
    }

    #[test]
    fn reverting_content_creates_new_head() {
        let mut s = RevisionStore::in_memory();
        s.record("/e", "a", Bump::Patch).unwrap();
        s.record("/e", "b", Bump::Patch).unwrap();
        let back = s.record("/e", "a", Bump::Patch).unwrap();
        assert!(back.created);
        assert_eq!(back.record.revision, 3);
    }

    #[test]
    fn file_persistence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut s = RevisionStore::open(dir.path()).unwrap();
            s.record("/agents/alice/plans", "+!a.", Bump::Patch).unwrap();
            s.record("/agents/alice/plans", "+!b.", Bump::Minor).unwrap();
            s.record("/organisations/o", "{}", Bump::Patch).unwrap();
        }
        let s = RevisionStore::open(dir.path()).unwrap();
        assert_eq!(s.list("/agents/alice/plans").len(), 2);
        assert_eq!(s.get("/agents/alice/plans", 2).unwrap().content, "+!b.");
        assert_eq!(s.head("/organisations/o").unwrap().revision, 1);
        assert!(dir.path().join("agents~alice~plans.jsonl").exists());
    }
}
