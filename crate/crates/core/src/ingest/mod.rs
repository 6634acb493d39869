//! Turning tracker and VCS exports into a [`ProjectStore`].
//!
//! Issues arrive as a JSON array of [`RawIssueRecord`]; commits as the text
//! export described in [`commits`]. [`build_project`] runs the whole chain:
//! issue filtering, file filtering, identity unification and explicit-link
//! extraction.

pub mod commits;
pub mod identity;
pub mod issues;
pub mod links;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

pub use commits::{
    content_ref, import_commits, parse_commit_export, write_commit_export, CommitImport, FileFilter,
    FileFilterConfig, GitRepoSnapshots, IdentityField, NoSnapshots, RawCommitRecord,
    SnapshotMap, SnapshotRecord, SnapshotSource,
};
pub use identity::{normalize_login, normalize_name, unify_identities, Identities, Person};
pub use issues::{import_issues, parse_timestamp, DropReason, IssueImport, RawIssueRecord};
pub use links::extract_explicit_links;

use crate::model::{read_json, read_jsonl, IdentitySource, ProjectStore};
use crate::{Error, Result};

pub struct IngestInput<'a> {
    /// Explicit project key; inferred from the issue keys when absent.
    pub project_key: Option<String>,
    pub issues: Vec<RawIssueRecord>,
    pub commits: Vec<RawCommitRecord>,
    pub filter: FileFilterConfig,
    pub identity_field: IdentityField,
    pub snapshots: &'a dyn SnapshotSource,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub issues_imported: usize,
    pub issues_dropped: BTreeMap<String, usize>,
    pub commits_imported: usize,
    pub commits_without_files: usize,
    pub explicit_links: usize,
    pub identities: usize,
    pub missing_snapshots: usize,
}

pub fn build_project(input: IngestInput<'_>) -> Result<(ProjectStore, IngestReport)> {
    let issue_import = import_issues(&input.issues);
    let filter = input.filter.compile()?;
    let commit_import = import_commits(&input.commits, &filter, input.snapshots)?;

    let project_key = match input.project_key {
        Some(k) => k,
        None => infer_project_key(issue_import.issues.iter().map(|i| i.key.as_str()))
            .ok_or_else(|| Error::InsufficientData("no issues to infer a project key from".into()))?,
    };

    let issue_people: Vec<Person> = issue_import.assignees.values().cloned().collect();
    let commit_people: Vec<Person> = input
        .commits
        .iter()
        .flat_map(|r| [r.committer(), r.author()])
        .collect();
    let identities = unify_identities(&issue_people, &commit_people);

    let mut store = ProjectStore::new(project_key);
    for mut issue in issue_import.issues {
        issue.assignee = issue_import
            .assignees
            .get(&issue.key)
            .and_then(|p| identities.resolve(IdentitySource::IssueTracker, p));
        store.issues.insert(issue.key.clone(), issue);
    }
    let raw_by_hash: BTreeMap<&str, &RawCommitRecord> =
        input.commits.iter().map(|r| (r.hash.as_str(), r)).collect();
    for mut commit in commit_import.commits {
        let raw = raw_by_hash[commit.hash.as_str()];
        let person = match input.identity_field {
            IdentityField::Committer => raw.committer(),
            IdentityField::Author => raw.author(),
        };
        commit.committer = identities.resolve(IdentitySource::VersionControl, &person);
        store.commits.insert(commit.hash.clone(), commit);
    }
    store.snapshots = commit_import.snapshots;
    store.identities = identities.identities.clone();

    let commits: Vec<_> = store.commits.values().cloned().collect();
    let issues: Vec<_> = store.issues.values().cloned().collect();
    store.links = extract_explicit_links(&commits, &issues, &store.project_key);
    store.validate()?;

    let report = IngestReport {
        issues_imported: store.issues.len(),
        issues_dropped: issue_import
            .dropped
            .iter()
            .map(|(r, n)| (r.as_str().to_string(), *n))
            .collect(),
        commits_imported: store.commits.len(),
        commits_without_files: store.commits.values().filter(|c| c.files.is_empty()).count(),
        explicit_links: store.links.len(),
        identities: store.identities.len(),
        missing_snapshots: commit_import.missing_snapshots,
    };
    Ok((store, report))
}

/// Reads a JSON array of issue records.
pub fn read_issue_export(path: &Path) -> Result<Vec<RawIssueRecord>> {
    read_json(path)
}

/// Reads a commit export file.
pub fn read_commit_export(path: &Path) -> Result<Vec<RawCommitRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_commit_export(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Reads snapshot records, one JSON object per line.
pub fn read_snapshot_records(path: &Path) -> Result<Vec<SnapshotRecord>> {
    read_jsonl(path)
}

/// Most frequent key prefix; ties go to the lexicographically smallest.
pub fn infer_project_key<'a>(keys: impl Iterator<Item = &'a str>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for key in keys {
        if let Some(p) = crate::model::issue_key_project(key) {
            *counts.entry(p).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(k, _)| k.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issue(key: &str, ty: &str, assignee: &str, login: &str) -> RawIssueRecord {
        RawIssueRecord {
            key: key.into(),
            raw_type: ty.into(),
            status: Some("Closed".into()),
            resolution: Some("Fixed".into()),
            summary: Some(format!("summary of {key}")),
            description: Some(String::new()),
            created: Some("2012-01-01T10:00:00Z".into()),
            resolved: Some("2012-01-05T10:00:00Z".into()),
            assignee_name: Some(assignee.into()),
            assignee_login: Some(login.into()),
        }
    }

    fn commit(hash: &str, msg: &str, name: &str, email: &str) -> RawCommitRecord {
        RawCommitRecord {
            hash: hash.into(),
            author_name: name.into(),
            author_email: email.into(),
            committer_name: name.into(),
            committer_email: email.into(),
            committed: "2012-01-03T10:00:00Z".into(),
            message: msg.into(),
            changed_paths: vec!["src/main/A.java".into(), "src/test/java/ATest.java".into()],
        }
    }

    #[test]
    fn build_project_links_identities_and_filters() {
        let input = IngestInput {
            project_key: None,
            issues: vec![
                issue("GROOVY-1", "Bug", "Jane Doe", "jdoe"),
                issue("GROOVY-2", "Task", "Jane Doe", "jdoe"),
            ],
            commits: vec![
                commit("aa01", "GROOVY-1: fix it", "Jane Doe", "jane@example.org"),
                commit("aa02", "GROOVY-2: not imported", "Bob", "bob@example.org"),
            ],
            filter: FileFilterConfig::default(),
            identity_field: IdentityField::Committer,
            snapshots: &NoSnapshots,
        };
        let (store, report) = build_project(input).unwrap();
        assert_eq!(store.project_key, "GROOVY");
        assert_eq!(report.issues_imported, 1);
        assert_eq!(report.issues_dropped.get("unsupported-type"), Some(&1));
        assert_eq!(store.links.len(), 1);
        let c = store.commit("aa01").unwrap();
        assert_eq!(c.files.paths().collect::<Vec<_>>(), ["src/main/A.java"]);
        // Jira "jdoe" and Git "jane@example.org" merge through the name rule
        assert_eq!(c.committer, store.issue("GROOVY-1").unwrap().assignee);
        assert_eq!(report.identities, 2);
    }

    #[test]
    fn infers_most_common_prefix() {
        let keys = ["AB-1", "AB-2", "CD-1"];
        assert_eq!(infer_project_key(keys.into_iter()).as_deref(), Some("AB"));
        assert_eq!(infer_project_key(std::iter::empty()), None);
    }
}
