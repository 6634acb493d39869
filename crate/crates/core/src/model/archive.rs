//! Project archive: one directory per project holding line-delimited JSON.
//!
//! ```text
//! <project>/
//!   meta.json          schema version, project key, record counts
//!   issues.jsonl       one Issue per line, sorted by key
//!   commits.jsonl      one Commit per line, sorted by hash
//!   links.jsonl        one TraceLink per line, insertion order
//!   identities.json    array of DeveloperIdentity
//!   snapshots.jsonl    {"content_ref", "content"} per line
//!   index/ models/ batches/   written by later stages
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Commit, DeveloperIdentity, Issue, ProjectStore, TraceLink};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub schema_version: u32,
    pub project_key: String,
    pub issues: usize,
    pub commits: usize,
    pub links: usize,
}

#[derive(Serialize, Deserialize)]
struct SnapshotRecord {
    content_ref: String,
    content: String,
}

pub fn save_project(store: &ProjectStore, dir: &Path) -> Result<()> {
    store.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join("issues.jsonl"), store.issues.values())?;
    write_jsonl(&dir.join("commits.jsonl"), store.commits.values())?;
    write_jsonl(&dir.join("links.jsonl"), store.links.iter())?;
    write_jsonl(
        &dir.join("snapshots.jsonl"),
        store.snapshots.iter().map(|(r, c)| SnapshotRecord {
            content_ref: r.clone(),
            content: c.clone(),
        }),
    )?;
    write_json(&dir.join("identities.json"), &store.identities)?;
    let meta = ArchiveMeta {
        schema_version: SCHEMA_VERSION,
        project_key: store.project_key.clone(),
        issues: store.issues.len(),
        commits: store.commits.len(),
        links: store.links.len(),
    };
    // meta last: an archive without meta.json is incomplete
    write_json(&dir.join("meta.json"), &meta)
}

pub fn load_project(dir: &Path) -> Result<ProjectStore> {
    let meta: ArchiveMeta = read_json(&dir.join("meta.json"))?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: meta.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let mut store = ProjectStore::new(meta.project_key);
    for issue in read_jsonl::<Issue>(&dir.join("issues.jsonl"))? {
        if store.issues.insert(issue.key.clone(), issue).is_some() {
            return Err(Error::Integrity("duplicate issue record".into()));
        }
    }
    for commit in read_jsonl::<Commit>(&dir.join("commits.jsonl"))? {
        let hash = commit.hash.clone();
        if store.commits.insert(hash.clone(), commit).is_some() {
            return Err(Error::DuplicateCommit(hash));
        }
    }
    store.links = read_jsonl::<TraceLink>(&dir.join("links.jsonl"))?;
    let snapshots = dir.join("snapshots.jsonl");
    if snapshots.exists() {
        for rec in read_jsonl::<SnapshotRecord>(&snapshots)? {
            store.snapshots.insert(rec.content_ref, rec.content);
        }
    }
    store.identities = read_json::<Vec<DeveloperIdentity>>(&dir.join("identities.json"))?;
    store.validate()?;
    Ok(store)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, &item).map_err(|e| Error::json(path, e))?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| {
            Error::Parse(format!("{}:{}: {e}", path.display(), n + 1))
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Appends one record to a line-delimited file, creating it if needed.
pub fn append_jsonl<T: Serialize>(path: &Path, item: &T) -> Result<()> {
    let mut line = serde_json::to_vec(item).map_err(|e| Error::json(path, e))?;
    line.push(b'\n');
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    file.write_all(&line).map_err(|e| Error::io(path, e))?;
    file.sync_data().map_err(|e| Error::io(path, e))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
