//! A small hand-encoded project used by documentation, tests and the
//! acceptance suite.
//!
//! Six issues (four improvements `I1..I4`, two bugs `B1`, `B2`), nine commits
//! `C1..C9` and six files `F1..F6` on a timeline whose unit is one hour:
//!
//! ```text
//! hour   0    1    2    3    4    5    6    7    8    9   10   11   12   13   14
//! I1     [--------------]
//! I2                    [--------------]
//! I3                                        [--------------]
//! I4                                        [-------------------]
//! B1                              [----------------------------------------]
//! B2                                                                 [---------]
//! C1*       {F1,F2}->I1
//! C2             {F1}
//! C3                        {F3}
//! C4                             {F4}
//! C5*                                 {F3,F4}->I2
//! C6                                            {F2}
//! C7                                                 {F4,F5,F6}
//! C8*                                                     {F6}->I4
//! C9*                                                          {F5,F6}->B1
//! ```

use super::{Commit, FilePath, FileSet, Issue, IssueKind, ProjectStore, Timestamp, TraceLink, UserId};

pub const PROJECT_KEY: &str = "FIG";

const ISSUES: [(&str, &str, IssueKind, i64, i64, u32, &str); 6] = [
    ("I1", "FIG-1", IssueKind::Improvement, 0, 3, 0, "Speed up options parser loading"),
    ("I2", "FIG-2", IssueKind::Improvement, 3, 6, 1, "Cache compiled class literals"),
    ("I3", "FIG-3", IssueKind::Improvement, 7, 10, 0, "Reuse bytecode buffers in writer"),
    ("I4", "FIG-4", IssueKind::Improvement, 7, 11, 1, "Configurable inner class naming"),
    ("B1", "FIG-5", IssueKind::Bug, 5, 13, 0, "Invalid inner class reference left in output"),
    ("B2", "FIG-6", IssueKind::Bug, 12, 14, 1, "Parser crashes on empty input"),
];

const COMMITS: [(&str, &str, i64, u32, &[&str], Option<&str>); 9] = [
    ("C1", "c1", 1, 0, &["F1", "F2"], Some("I1")),
    ("C2", "c2", 2, 0, &["F1"], None),
    ("C3", "c3", 4, 1, &["F3"], None),
    ("C4", "c4", 5, 1, &["F4"], None),
    ("C5", "c5", 6, 1, &["F3", "F4"], Some("I2")),
    ("C6", "c6", 8, 0, &["F2"], None),
    ("C7", "c7", 9, 0, &["F4", "F5", "F6"], None),
    ("C8", "c8", 10, 1, &["F6"], Some("I4")),
    ("C9", "c9", 11, 0, &["F5", "F6"], Some("B1")),
];

fn hour(h: i64) -> Timestamp {
    Timestamp::from_epoch_seconds(h * Timestamp::SECONDS_PER_HOUR).expect("non-negative")
}

/// Issue key for a timeline label (`"I3"` -> `"FIG-3"`).
pub fn issue_key(label: &str) -> &'static str {
    ISSUES
        .iter()
        .find(|i| i.0 == label)
        .map(|i| i.1)
        .unwrap_or_else(|| panic!("no issue labelled {label}"))
}

/// Commit hash for a timeline label (`"C6"` -> `"c6"`).
pub fn commit_hash(label: &str) -> &'static str {
    COMMITS
        .iter()
        .find(|c| c.0 == label)
        .map(|c| c.1)
        .unwrap_or_else(|| panic!("no commit labelled {label}"))
}

pub fn timeline_project() -> ProjectStore {
    let mut store = ProjectStore::new(PROJECT_KEY);
    for (_, key, kind, created, resolved, assignee, summary) in ISSUES {
        store.issues.insert(
            key.to_string(),
            Issue {
                key: key.to_string(),
                kind,
                summary: summary.to_string(),
                description: String::new(),
                created: hour(created),
                resolved: hour(resolved),
                assignee: Some(UserId(assignee)),
                status: "Closed".into(),
                resolution: "Fixed".into(),
            },
        );
    }
    for (label, hash, at, committer, files, _) in COMMITS {
        let files: FileSet = files
            .iter()
            .map(|f| FilePath::new(format!("src/main/java/{f}.java")))
            .collect();
        store.commits.insert(
            hash.to_string(),
            Commit {
                hash: hash.to_string(),
                message: format!("change {label}"),
                committed: hour(at),
                committer: Some(UserId(committer)),
                files,
            },
        );
    }
    for (_, hash, _, _, _, linked) in COMMITS {
        if let Some(issue) = linked {
            store.links.push(TraceLink::explicit(hash, issue_key(issue)));
        }
    }
    store
}
