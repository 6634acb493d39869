use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{is_candidate, CandidateConfig};
use crate::model::{Commit, Issue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Linked,
    NonLinked,
    Unknown,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Linked => "Linked",
            Label::NonLinked => "NonLinked",
            Label::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidatePair {
    pub commit_hash: String,
    pub issue_key: String,
    pub label: Label,
}

impl CandidatePair {
    pub fn key(&self) -> (&str, &str) {
        (&self.commit_hash, &self.issue_key)
    }

    /// Linked iff the pair is in `linked`, NonLinked otherwise.
    pub fn labelled(mut self, linked: &BTreeSet<(String, String)>) -> Self {
        let k = (self.commit_hash.clone(), self.issue_key.clone());
        self.label = if linked.contains(&k) { Label::Linked } else { Label::NonLinked };
        self
    }
}

/// Issues sorted by creation time so that the issues created no later than a
/// commit are a prefix.
pub struct CandidateIndex<'a> {
    issues: Vec<&'a Issue>,
    cfg: CandidateConfig,
}

impl<'a> CandidateIndex<'a> {
    pub fn new(issues: impl IntoIterator<Item = &'a Issue>, cfg: CandidateConfig) -> Self {
        let mut issues: Vec<&Issue> = issues.into_iter().collect();
        issues.sort_by(|a, b| a.created.cmp(&b.created).then_with(|| a.key.cmp(&b.key)));
        CandidateIndex { issues, cfg }
    }

    pub fn config(&self) -> &CandidateConfig {
        &self.cfg
    }

    /// Candidate issues of `commit`, ascending by key.
    pub fn candidates_for(&self, commit: &Commit) -> Vec<&'a Issue> {
        let end = self.issues.partition_point(|i| i.created <= commit.committed);
        let mut out: Vec<&Issue> = self.issues[..end]
            .iter()
            .copied()
            .filter(|i| is_candidate(commit, i, &self.cfg))
            .collect();
        out.sort_by(|a, b| a.key.cmp(&b.key));
        out
    }
}

/// All candidate pairs between `commits` and `issues`, sorted by (hash, key),
/// with [`Label::Unknown`].
pub fn generate_candidates<'a>(
    commits: impl IntoIterator<Item = &'a Commit>,
    issues: impl IntoIterator<Item = &'a Issue>,
    cfg: &CandidateConfig,
) -> Vec<CandidatePair> {
    let index = CandidateIndex::new(issues, *cfg);
    let mut pairs: Vec<CandidatePair> = commits
        .into_iter()
        .flat_map(|c| {
            index.candidates_for(c).into_iter().map(move |i| CandidatePair {
                commit_hash: c.hash.clone(),
                issue_key: i.key.clone(),
                label: Label::Unknown,
            })
        })
        .collect();
    pairs.sort_by(|a, b| a.key().cmp(&b.key()));
    pairs.dedup_by(|a, b| a.key() == b.key());
    pairs
}

/// Filters the full cross product; the reference for [`generate_candidates`].
pub fn brute_force_candidates<'a>(
    commits: impl IntoIterator<Item = &'a Commit>,
    issues: impl IntoIterator<Item = &'a Issue> + Clone,
    cfg: &CandidateConfig,
) -> Vec<CandidatePair> {
    let mut pairs = Vec::new();
    for c in commits {
        for i in issues.clone() {
            if is_candidate(c, i, cfg) {
                pairs.push(CandidatePair {
                    commit_hash: c.hash.clone(),
                    issue_key: i.key.clone(),
                    label: Label::Unknown,
                });
            }
        }
    }
    pairs.sort_by(|a, b| a.key().cmp(&b.key()));
    pairs.dedup_by(|a, b| a.key() == b.key());
    pairs
}
