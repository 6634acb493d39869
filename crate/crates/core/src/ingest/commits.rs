//! Commit export parsing and source-file filtering.
//!
//! The export is a byte stream of records separated by `\x01`. Each record
//! holds six newline-terminated header fields, the message up to `\x02`, then
//! the changed paths, each terminated by `\x00`:
//!
//! ```text
//! \x01hash\ncommitter_name\ncommitter_email\nauthor_name\nauthor_email\niso_date\nmessage\x02path\x00path\x00
//! ```
//!
//! It can be produced from a Git repository with
//!
//! ```text
//! git log --no-merges --name-only -z --format='%x01%H%n%cn%n%ce%n%an%n%ae%n%cI%n%B%x02'
//! ```
//!
//! Whitespace git inserts between the message terminator and the path list
//! is tolerated.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::process::Command;

use globset::{GlobBuilder, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::identity::Person;
use super::issues::parse_timestamp;
use crate::model::{Commit, FilePath, FileSet};
use crate::{Error, Result};

pub const RECORD_SEPARATOR: char = '\x01';
pub const MESSAGE_TERMINATOR: char = '\x02';
pub const PATH_TERMINATOR: char = '\x00';

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCommitRecord {
    pub hash: String,
    pub author_name: String,
    pub author_email: String,
    pub committer_name: String,
    pub committer_email: String,
    pub committed: String,
    pub message: String,
    pub changed_paths: Vec<String>,
}

impl RawCommitRecord {
    pub fn committer(&self) -> Person {
        Person::new(self.committer_name.clone(), self.committer_email.clone())
    }

    pub fn author(&self) -> Person {
        Person::new(self.author_name.clone(), self.author_email.clone())
    }
}

/// Which VCS person becomes the commit's user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum IdentityField {
    #[default]
    Committer,
    Author,
}

pub fn parse_commit_export(text: &str) -> Result<Vec<RawCommitRecord>> {
    let mut out = Vec::new();
    for (n, record) in text.split(RECORD_SEPARATOR).enumerate() {
        if record.trim().is_empty() {
            continue;
        }
        let record = record.trim_start_matches(['\n', '\r']);
        let (head, paths) = record.split_once(MESSAGE_TERMINATOR).ok_or_else(|| {
            Error::Parse(format!("commit record {n}: missing message terminator"))
        })?;
        let mut fields = head.splitn(7, '\n');
        let mut next = |name: &str| {
            fields
                .next()
                .map(|s| s.trim_end_matches('\r').to_string())
                .ok_or_else(|| Error::Parse(format!("commit record {n}: missing field `{name}`")))
        };
        let hash = next("hash")?;
        let committer_name = next("committer_name")?;
        let committer_email = next("committer_email")?;
        let author_name = next("author_name")?;
        let author_email = next("author_email")?;
        let committed = next("iso_date")?;
        let message = next("message")?;
        let changed_paths = paths
            .split(PATH_TERMINATOR)
            .map(|p| p.trim_matches(|c: char| c == '\n' || c == '\r'))
            .filter(|p| !p.is_empty())
            .map(str::to_string)
            .collect();
        out.push(RawCommitRecord {
            hash,
            author_name,
            author_email,
            committer_name,
            committer_email,
            committed,
            message,
            changed_paths,
        });
    }
    Ok(out)
}

pub fn write_commit_export(records: &[RawCommitRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push(RECORD_SEPARATOR);
        for field in [
            &r.hash,
            &r.committer_name,
            &r.committer_email,
            &r.author_name,
            &r.author_email,
            &r.committed,
        ] {
            out.push_str(field);
            out.push('\n');
        }
        out.push_str(&r.message);
        out.push(MESSAGE_TERMINATOR);
        for p in &r.changed_paths {
            out.push_str(p);
            out.push(PATH_TERMINATOR);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileFilterConfig {
    pub include_globs: Vec<String>,
    pub exclude_globs: Vec<String>,
    /// Lower-case extensions without the dot.
    pub excluded_extensions: Vec<String>,
    /// Build descriptors excluded by exact file name.
    pub excluded_file_names: Vec<String>,
}

impl Default for FileFilterConfig {
    fn default() -> Self {
        FileFilterConfig {
            include_globs: vec!["src/main/**".into()],
            exclude_globs: vec!["src/test/java/**".into()],
            excluded_extensions: ["md", "txt", "xml", "html", "properties"]
                .map(String::from)
                .to_vec(),
            excluded_file_names: vec!["pom.xml".into()],
        }
    }
}

impl FileFilterConfig {
    pub fn compile(&self) -> Result<FileFilter> {
        Ok(FileFilter {
            include: build_globset(&self.include_globs)?,
            exclude: build_globset(&self.exclude_globs)?,
            extensions: self.excluded_extensions.iter().map(|e| e.to_ascii_lowercase()).collect(),
            file_names: self.excluded_file_names.iter().cloned().collect(),
        })
    }
}

fn build_globset(patterns: &[String]) -> Result<GlobSet> {
    let mut builder = GlobSetBuilder::new();
    for p in patterns {
        let glob = GlobBuilder::new(p)
            .literal_separator(true)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("glob `{p}`: {e}")))?;
        builder.add(glob);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("glob set: {e}")))
}

#[derive(Debug, Clone)]
pub struct FileFilter {
    include: GlobSet,
    exclude: GlobSet,
    extensions: BTreeSet<String>,
    file_names: BTreeSet<String>,
}

impl FileFilter {
    /// A path is kept iff it matches an include glob and no exclusion rule.
    pub fn accepts(&self, path: &str) -> bool {
        if path.is_empty() || !self.include.is_match(path) || self.exclude.is_match(path) {
            return false;
        }
        let name = path.rsplit('/').next().unwrap_or(path);
        if self.file_names.contains(name) {
            return false;
        }
        match name.rsplit_once('.') {
            Some((_, ext)) => !self.extensions.contains(&ext.to_ascii_lowercase()),
            None => true,
        }
    }
}

/// File content as stored by a given commit.
pub trait SnapshotSource: Sync {
    fn content(&self, hash: &str, path: &str) -> Option<String>;
}

pub struct NoSnapshots;

impl SnapshotSource for NoSnapshots {
    fn content(&self, _: &str, _: &str) -> Option<String> {
        None
    }
}

/// One line of a `snapshots.jsonl` input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub hash: String,
    pub path: String,
    pub content: String,
}

#[derive(Debug, Default)]
pub struct SnapshotMap(HashMap<(String, String), String>);

impl SnapshotMap {
    pub fn from_records(records: impl IntoIterator<Item = SnapshotRecord>) -> Self {
        SnapshotMap(
            records
                .into_iter()
                .map(|r| ((r.hash, r.path), r.content))
                .collect(),
        )
    }
}

impl SnapshotSource for SnapshotMap {
    fn content(&self, hash: &str, path: &str) -> Option<String> {
        self.0.get(&(hash.to_string(), path.to_string())).cloned()
    }
}

/// Reads snapshots from a local clone with `git show <hash>:<path>`.
pub struct GitRepoSnapshots {
    pub repo: PathBuf,
}

impl SnapshotSource for GitRepoSnapshots {
    fn content(&self, hash: &str, path: &str) -> Option<String> {
        let out = Command::new("git")
            .arg("-C")
            .arg(&self.repo)
            .arg("show")
            .arg(format!("{hash}:{path}"))
            .output()
            .ok()?;
        if !out.status.success() {
            return None;
        }
        String::from_utf8(out.stdout).ok()
    }
}

pub fn content_ref(content: &str) -> String {
    Sha256::digest(content.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct CommitImport {
    /// Commits sorted by hash; committers are resolved later.
    pub commits: Vec<Commit>,
    pub snapshots: BTreeMap<String, String>,
    pub missing_snapshots: usize,
}

/// Applies the file filter. Commits whose filtered set is empty are kept, as
/// they may still carry a tag.
pub fn import_commits(
    records: &[RawCommitRecord],
    filter: &FileFilter,
    snapshots: &dyn SnapshotSource,
) -> Result<CommitImport> {
    let mut out = CommitImport::default();
    let mut seen = BTreeSet::new();
    for rec in records {
        if !seen.insert(rec.hash.as_str()) {
            return Err(Error::DuplicateCommit(rec.hash.clone()));
        }
        if rec.hash.is_empty() || !rec.hash.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::Parse(format!("commit hash `{}` is not hexadecimal", rec.hash)));
        }
        let committed = parse_timestamp(&rec.committed)
            .map_err(|e| Error::Parse(format!("commit {}: {e}", rec.hash)))?;
        let mut files = FileSet::new();
        for path in rec.changed_paths.iter().filter(|p| filter.accepts(p)) {
            let file = match snapshots.content(&rec.hash, path) {
                Some(content) => {
                    let r = content_ref(&content);
                    out.snapshots.entry(r.clone()).or_insert(content);
                    FilePath::with_content(path.clone(), r)
                }
                None => {
                    out.missing_snapshots += 1;
                    FilePath::new(path.clone())
                }
            };
            files.insert(file);
        }
        out.commits.push(Commit {
            hash: rec.hash.clone(),
            message: rec.message.clone(),
            committed,
            committer: None,
            files,
        });
    }
    out.commits.sort_by(|a, b| a.hash.cmp(&b.hash));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(hash: &str, paths: &[&str]) -> RawCommitRecord {
        RawCommitRecord {
            hash: hash.into(),
            author_name: "A".into(),
            author_email: "a@x".into(),
            committer_name: "C".into(),
            committer_email: "c@x".into(),
            committed: "2012-02-01T10:00:00Z".into(),
            message: "GROVY-5082: remove synthetic\ninterface loading helper".into(),
            changed_paths: paths.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn files_after_filter(paths: &[&str]) -> Vec<String> {
        let filter = FileFilterConfig::default().compile().unwrap();
        let out = import_commits(&[raw("ab", paths)], &filter, &NoSnapshots).unwrap();
        out.commits[0].files.paths().map(String::from).collect()
    }

    #[test]
    fn test_sources_are_excluded() {
        assert_eq!(
            files_after_filter(&["src/main/A.java", "src/test/java/ATest.java"]),
            ["src/main/A.java"]
        );
    }

    #[test]
    fn documentation_is_excluded() {
        assert!(files_after_filter(&["README.md"]).is_empty());
        assert!(files_after_filter(&["src/main/resources/x.properties", "src/main/pom.xml"]).is_empty());
    }

    #[test]
    fn sibling_sources_are_kept() {
        assert_eq!(
            files_after_filter(&["src/main/a/B.java", "src/main/a/C.java"]),
            ["src/main/a/B.java", "src/main/a/C.java"]
        );
    }

    #[test]
    fn commit_without_source_files_is_retained() {
        let filter = FileFilterConfig::default().compile().unwrap();
        let out = import_commits(&[raw("ab", &["docs/x.md"])], &filter, &NoSnapshots).unwrap();
        assert_eq!(out.commits.len(), 1);
        assert!(out.commits[0].files.is_empty());
    }

    #[test]
    fn duplicate_hash_names_the_hash() {
        let filter = FileFilterConfig::default().compile().unwrap();
        let err = import_commits(&[raw("ab", &[]), raw("ab", &[])], &filter, &NoSnapshots).unwrap_err();
        assert!(matches!(err, Error::DuplicateCommit(h) if h == "ab"));
    }

    #[test]
    fn snapshots_get_content_refs() {
        let filter = FileFilterConfig::default().compile().unwrap();
        let snaps = SnapshotMap::from_records([SnapshotRecord {
            hash: "ab".into(),
            path: "src/main/A.java".into(),
            content: "class A {}".into(),
        }]);
        let out = import_commits(&[raw("ab", &["src/main/A.java", "src/main/B.java"])], &filter, &snaps)
            .unwrap();
        let files: Vec<_> = out.commits[0].files.iter().cloned().collect();
        let r = files[0].content_ref.clone().unwrap();
        assert_eq!(out.snapshots[&r], "class A {}");
        assert_eq!(files[1].content_ref, None);
        assert_eq!(out.missing_snapshots, 1);
    }

    #[test]
    fn export_parses_git_style_output() {
        let text = "\x01abc1\nCommitter\nc@x.org\nAuthor\na@x.org\n2012-02-01T10:00:00+01:00\nGROOVY-1: msg\n\nbody\n\x02\n\nsrc/main/A.java\x00src/main/B.java\x00\n\x01abc2\nC\nc@x\nA\na@x\n2012-02-02T10:00:00Z\nempty\x02";
        let recs = parse_commit_export(text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].hash, "abc1");
        assert_eq!(recs[0].committer_name, "Committer");
        assert_eq!(recs[0].author_email, "a@x.org");
        assert_eq!(recs[0].message, "GROOVY-1: msg\n\nbody\n");
        assert_eq!(recs[0].changed_paths, ["src/main/A.java", "src/main/B.java"]);
        assert!(recs[1].changed_paths.is_empty());
    }

    #[test]
    fn truncated_record_is_an_error() {
        assert!(parse_commit_export("\x01abc\nname\n").is_err());
    }

    proptest! {
        #[test]
        fn export_round_trips(
            hash in "[0-9a-f]{6,40}",
            msg in "[a-zA-Z0-9 \n:-]{0,40}",
            paths in proptest::collection::vec("[a-z/]{1,12}\\.java", 0..4),
        ) {
            let mut rec = raw(&hash, &[]);
            rec.message = msg;
            rec.changed_paths = paths;
            let text = write_commit_export(std::slice::from_ref(&rec));
            prop_assert_eq!(parse_commit_export(&text).unwrap(), vec![rec]);
        }

        #[test]
        fn shrinking_includes_never_adds_files(paths in proptest::collection::vec("(src/main/(a|b)/|src/test/java/|docs/)[a-z]{1,5}\\.(java|md)", 0..8)) {
            let wide = FileFilterConfig::default().compile().unwrap();
            let narrow = FileFilterConfig { include_globs: vec!["src/main/a/**".into()], ..Default::default() }
                .compile().unwrap();
            for p in &paths {
                prop_assert!(!narrow.accepts(p) || wide.accepts(p));
            }
        }
    }
}
