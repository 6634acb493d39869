use std::collections::{BTreeSet, HashSet};

use regex::Regex;

use crate::model::{Commit, Issue, TraceLink};

/// Explicit links from issue keys mentioned in commit messages.
///
/// A key counts when `\b<PROJECT>-<digits>\b` matches (project key is
/// case-sensitive) and the issue was imported. Output is sorted by commit hash
/// then issue key, one link per distinct pair.
pub fn extract_explicit_links(commits: &[Commit], issues: &[Issue], project_key: &str) -> Vec<TraceLink> {
    let pattern = Regex::new(&format!(r"\b{}-[0-9]+\b", regex::escape(project_key)))
        .expect("escaped project key forms a valid regex");
    let known: HashSet<&str> = issues.iter().map(|i| i.key.as_str()).collect();
    let mut pairs = BTreeSet::new();
    for commit in commits {
        for m in pattern.find_iter(&commit.message) {
            if known.contains(m.as_str()) {
                pairs.insert((commit.hash.as_str(), m.as_str()));
            }
        }
    }
    pairs
        .into_iter()
        .map(|(hash, key)| TraceLink::explicit(hash, key))
        .collect()
}
