use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A point on the project timeline, UTC seconds since the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Timestamp(i64);

impl Timestamp {
    pub const SECONDS_PER_HOUR: i64 = 3600;

    pub fn from_epoch_seconds(seconds: i64) -> Result<Self> {
        if seconds < 0 {
            return Err(Error::InvalidArgument(format!(
                "timestamp {seconds} precedes the epoch"
            )));
        }
        Ok(Timestamp(seconds))
    }

    pub fn seconds(self) -> i64 {
        self.0
    }

    /// Signed difference `self - earlier` in fractional hours.
    pub fn hours_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / Self::SECONDS_PER_HOUR as f64
    }

    pub fn plus_seconds(self, seconds: i64) -> Timestamp {
        Timestamp(self.0.saturating_add(seconds).max(0))
    }
}

impl TryFrom<i64> for Timestamp {
    type Error = Error;

    fn try_from(value: i64) -> Result<Self> {
        Timestamp::from_epoch_seconds(value)
    }
}

impl From<Timestamp> for i64 {
    fn from(t: Timestamp) -> i64 {
        t.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match chrono::DateTime::from_timestamp(self.0, 0) {
            Some(dt) => write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%SZ")),
            None => write!(f, "{}", self.0),
        }
    }
}

/// Anonymised developer number, unique per unified identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u32);

impl UserId {
    /// Stands in for a missing committer or assignee. Never equal to a real id
    /// as far as the same-person attribute is concerned.
    pub const UNKNOWN: UserId = UserId(u32::MAX);

    pub fn is_unknown(self) -> bool {
        self == Self::UNKNOWN
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unknown() {
            f.write_str("unknown")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueKind {
    Bug,
    Improvement,
}

impl IssueKind {
    pub const ALL: [IssueKind; 2] = [IssueKind::Bug, IssueKind::Improvement];

    pub fn as_str(self) -> &'static str {
        match self {
            IssueKind::Bug => "bug",
            IssueKind::Improvement => "improvement",
        }
    }
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for IssueKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bug" => Ok(IssueKind::Bug),
            "improvement" | "imp" => Ok(IssueKind::Improvement),
            other => Err(Error::InvalidArgument(format!("unknown profile `{other}`"))),
        }
    }
}

fn issue_key_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Z][A-Z0-9]*-[0-9]+$").expect("static regex"))
}

pub fn is_valid_issue_key(key: &str) -> bool {
    issue_key_pattern().is_match(key)
}

/// Project prefix of an issue key (`GROOVY` for `GROOVY-5082`).
pub fn issue_key_project(key: &str) -> Option<&str> {
    key.rsplit_once('-').map(|(project, _)| project)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub key: String,
    pub kind: IssueKind,
    pub summary: String,
    pub description: String,
    pub created: Timestamp,
    pub resolved: Timestamp,
    pub assignee: Option<UserId>,
    pub status: String,
    pub resolution: String,
}

impl Issue {
    /// Summary and description, the text every similarity is computed against.
    pub fn text(&self) -> String {
        format!("{}\n{}", self.summary, self.description)
    }

    pub fn assignee_or_unknown(&self) -> UserId {
        self.assignee.unwrap_or(UserId::UNKNOWN)
    }

    /// Whether the issue is open (created, not yet resolved) at `t`, bounds
    /// inclusive.
    pub fn is_open_at(&self, t: Timestamp) -> bool {
        self.created <= t && t <= self.resolved
    }
}

/// A repository-relative path plus the handle of its content as stored by
/// the commit. Identity is the path; renames are distinct files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FilePath {
    pub path: String,
    pub content_ref: Option<String>,
}

impl FilePath {
    pub fn new(path: impl Into<String>) -> Self {
        FilePath {
            path: path.into(),
            content_ref: None,
        }
    }

    pub fn with_content(path: impl Into<String>, content_ref: impl Into<String>) -> Self {
        FilePath {
            path: path.into(),
            content_ref: Some(content_ref.into()),
        }
    }
}

/// Files of a commit with set semantics on the path.
///
/// Serialised as a JSON array of [`FilePath`] objects sorted by path;
/// duplicate paths are rejected on input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileSet(BTreeMap<String, FilePath>);

impl FileSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a file; returns `false` (and keeps the old entry) when the path
    /// is already present.
    pub fn insert(&mut self, file: FilePath) -> bool {
        use std::collections::btree_map::Entry;
        match self.0.entry(file.path.clone()) {
            Entry::Occupied(_) => false,
            Entry::Vacant(v) => {
                v.insert(file);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains_path(&self, path: &str) -> bool {
        self.0.contains_key(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FilePath> {
        self.0.values()
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Number of paths present in both sets.
    pub fn shared_paths(&self, other: &FileSet) -> usize {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.paths().filter(|p| large.contains_path(p)).count()
    }
}

impl FromIterator<FilePath> for FileSet {
    fn from_iter<T: IntoIterator<Item = FilePath>>(iter: T) -> Self {
        let mut set = FileSet::new();
        for f in iter {
            set.insert(f);
        }
        set
    }
}

impl Serialize for FileSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.values())
    }
}

impl<'de> Deserialize<'de> for FileSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let files = Vec::<FilePath>::deserialize(deserializer)?;
        let mut set = FileSet::new();
        for f in files {
            if f.path.is_empty() {
                return Err(serde::de::Error::custom("empty file path"));
            }
            let path = f.path.clone();
            if !set.insert(f) {
                return Err(serde::de::Error::custom(format!("duplicate file path `{path}`")));
            }
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Commit {
    pub hash: String,
    pub message: String,
    pub committed: Timestamp,
    pub committer: Option<UserId>,
    pub files: FileSet,
}

impl Commit {
    pub fn committer_or_unknown(&self) -> UserId {
        self.committer.unwrap_or(UserId::UNKNOWN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkOrigin {
    ExplicitTag,
    Classifier,
    HumanAccepted,
    HumanRejected,
}

impl LinkOrigin {
    pub fn is_positive(self) -> bool {
        !matches!(self, LinkOrigin::HumanRejected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLink {
    pub commit_hash: String,
    pub issue_key: String,
    pub origin: LinkOrigin,
    pub score: Option<f64>,
    pub decided_by: Option<String>,
    pub decided_at: Option<Timestamp>,
}

impl TraceLink {
    pub fn explicit(commit_hash: impl Into<String>, issue_key: impl Into<String>) -> Self {
        TraceLink {
            commit_hash: commit_hash.into(),
            issue_key: issue_key.into(),
            origin: LinkOrigin::ExplicitTag,
            score: None,
            decided_by: None,
            decided_at: None,
        }
    }

    pub fn classified(commit_hash: impl Into<String>, issue_key: impl Into<String>, score: f64) -> Self {
        TraceLink {
            commit_hash: commit_hash.into(),
            issue_key: issue_key.into(),
            origin: LinkOrigin::Classifier,
            score: Some(score),
            decided_by: None,
            decided_at: None,
        }
    }

    /// A rater's decision: HumanAccepted when `accepted`, else HumanRejected.
    pub fn human(
        commit_hash: impl Into<String>,
        issue_key: impl Into<String>,
        accepted: bool,
        rater: impl Into<String>,
        at: Timestamp,
    ) -> Self {
        TraceLink {
            commit_hash: commit_hash.into(),
            issue_key: issue_key.into(),
            origin: if accepted { LinkOrigin::HumanAccepted } else { LinkOrigin::HumanRejected },
            score: None,
            decided_by: Some(rater.into()),
            decided_at: Some(at),
        }
    }

    pub(crate) fn same_identity(&self, other: &TraceLink) -> bool {
        self.commit_hash == other.commit_hash
            && self.issue_key == other.issue_key
            && self.origin == other.origin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IdentitySource {
    IssueTracker,
    VersionControl,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeveloperIdentity {
    pub user_id: UserId,
    pub names: BTreeSet<String>,
    pub logins: BTreeSet<String>,
    pub sources: BTreeSet<IdentitySource>,
}
