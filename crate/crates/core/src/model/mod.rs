//! Artifact model: issues, commits, modified files, trace links and unified
//! developer identities, held together in a [`ProjectStore`].

mod archive;
pub mod example;
mod types;

pub use archive::{
    append_jsonl, load_project, read_json, read_jsonl, save_project, write_json, write_jsonl, ArchiveMeta,
    SCHEMA_VERSION,
};
pub use types::*;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// All artifacts of one project.
///
/// Readers share an immutable store; link decisions are the only mutation and
/// go through a single writer (see the service crate).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectStore {
    pub project_key: String,
    pub issues: BTreeMap<String, Issue>,
    pub commits: BTreeMap<String, Commit>,
    pub links: Vec<TraceLink>,
    pub identities: Vec<DeveloperIdentity>,
    /// File snapshot contents keyed by [`FilePath::content_ref`].
    pub snapshots: BTreeMap<String, String>,
}

impl ProjectStore {
    pub fn new(project_key: impl Into<String>) -> Self {
        ProjectStore {
            project_key: project_key.into(),
            ..Default::default()
        }
    }

    pub fn issue(&self, key: &str) -> Result<&Issue> {
        self.issues
            .get(key)
            .ok_or_else(|| Error::UnknownIssue(key.to_string()))
    }

    pub fn commit(&self, hash: &str) -> Result<&Commit> {
        self.commits
            .get(hash)
            .ok_or_else(|| Error::UnknownCommit(hash.to_string()))
    }

    /// `true` iff a link with a positive origin (explicit tag, classifier or
    /// human acceptance) connects the pair. Rejections never count.
    pub fn is_linked(&self, hash: &str, key: &str) -> Result<bool> {
        self.commit(hash)?;
        self.issue(key)?;
        Ok(self
            .links
            .iter()
            .any(|l| l.commit_hash == hash && l.issue_key == key && l.origin.is_positive()))
    }

    /// The filtered set of files modified by a commit.
    pub fn modified_files(&self, hash: &str) -> Result<&FileSet> {
        Ok(&self.commit(hash)?.files)
    }

    pub fn snapshot(&self, file: &FilePath) -> Option<&str> {
        file.content_ref
            .as_deref()
            .and_then(|r| self.snapshots.get(r))
            .map(String::as_str)
    }

    /// Adds a link unless one with the same commit, issue and origin exists.
    /// Returns whether the store changed.
    pub fn add_link(&mut self, link: TraceLink) -> Result<bool> {
        self.commit(&link.commit_hash)?;
        self.issue(&link.issue_key)?;
        if self.links.iter().any(|l| l.same_identity(&link)) {
            return Ok(false);
        }
        self.links.push(link);
        Ok(true)
    }

    /// Pairs that carry at least one positive link.
    pub fn linked_pairs(&self) -> std::collections::BTreeSet<(String, String)> {
        self.links
            .iter()
            .filter(|l| l.origin.is_positive())
            .map(|l| (l.commit_hash.clone(), l.issue_key.clone()))
            .collect()
    }

    pub fn pairs_with_origin(&self, origin: LinkOrigin) -> std::collections::BTreeSet<(String, String)> {
        self.links
            .iter()
            .filter(|l| l.origin == origin)
            .map(|l| (l.commit_hash.clone(), l.issue_key.clone()))
            .collect()
    }

    pub fn identity(&self, user: UserId) -> Option<&DeveloperIdentity> {
        self.identities.iter().find(|d| d.user_id == user)
    }

    /// Checks every invariant that spans more than one record. The error lists
    /// all offending ids.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (key, issue) in &self.issues {
            if key != &issue.key {
                problems.push(format!("issue map key `{key}` holds issue `{}`", issue.key));
            }
            if issue.created > issue.resolved {
                problems.push(format!("issue `{key}` resolved before it was created"));
            }
        }
        for (hash, commit) in &self.commits {
            if hash != &commit.hash {
                problems.push(format!("commit map key `{hash}` holds commit `{}`", commit.hash));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for link in &self.links {
            if !self.commits.contains_key(&link.commit_hash) {
                problems.push(format!("link references missing commit `{}`", link.commit_hash));
            }
            if !self.issues.contains_key(&link.issue_key) {
                problems.push(format!("link references missing issue `{}`", link.issue_key));
            }
            if let Some(score) = link.score {
                if !(0.0..=1.0).contains(&score) {
                    problems.push(format!(
                        "link {} -> {} has score {score} outside [0,1]",
                        link.commit_hash, link.issue_key
                    ));
                }
            }
            if !seen.insert((&link.commit_hash, &link.issue_key, link.origin)) {
                problems.push(format!(
                    "duplicate {:?} link {} -> {}",
                    link.origin, link.commit_hash, link.issue_key
                ));
            }
        }
        let mut login_owner = BTreeMap::new();
        let mut ids = std::collections::BTreeSet::new();
        for identity in &self.identities {
            if !ids.insert(identity.user_id) {
                problems.push(format!("user id {} assigned twice", identity.user_id));
            }
            for login in &identity.logins {
                if let Some(other) = login_owner.insert(login.clone(), identity.user_id) {
                    problems.push(format!(
                        "login `{login}` shared by users {other} and {}",
                        identity.user_id
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Integrity(problems.join("; ")))
        }
    }
}
