//! Descriptive statistics of a project's linking practice.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::features::overlap;
use crate::model::{IssueKind, LinkOrigin, ProjectStore};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IssueLinkage {
    pub issues: usize,
    pub one_commit: usize,
    pub several_commits: usize,
    pub no_commit: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommitLinkage {
    pub commits: usize,
    pub one_bug: usize,
    pub one_improvement: usize,
    pub several_issues: usize,
    pub no_issue: usize,
}

/// Where a linked commit falls relative to its issue's lifecycle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TemporalCases {
    pub before_created: usize,
    pub during: usize,
    pub after_resolved: usize,
    /// Median hours between resolution and a late commit.
    pub late_median_hours: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectStats {
    pub project_key: String,
    pub issues_by_kind: BTreeMap<String, IssueLinkage>,
    pub commit_linkage: CommitLinkage,
    pub links_by_origin: BTreeMap<String, usize>,
    pub temporal: TemporalCases,
    /// Mean file overlap of consecutive commits linked to the same issue.
    pub mean_consecutive_overlap: Option<f64>,
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len().is_multiple_of(2) { (xs[m - 1] + xs[m]) / 2.0 } else { xs[m] })
}

/// Linkage and timing statistics over the store's positive links.
pub fn project_stats(store: &ProjectStore) -> ProjectStats {
    let linked = store.linked_pairs();
    let mut commits_of: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut issues_of: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (h, k) in &linked {
        commits_of.entry(k.as_str()).or_default().push(h.as_str());
        issues_of.entry(h.as_str()).or_default().push(k.as_str());
    }

    let mut issues_by_kind = BTreeMap::new();
    for kind in IssueKind::ALL {
        let mut l = IssueLinkage::default();
        for issue in store.issues.values().filter(|i| i.kind == kind) {
            l.issues += 1;
            match commits_of.get(issue.key.as_str()).map_or(0, Vec::len) {
                0 => l.no_commit += 1,
                1 => l.one_commit += 1,
                _ => l.several_commits += 1,
            }
        }
        issues_by_kind.insert(kind.as_str().to_string(), l);
    }

    let mut cl = CommitLinkage::default();
    for hash in store.commits.keys() {
        cl.commits += 1;
        match issues_of.get(hash.as_str()).map(Vec::as_slice) {
            None | Some([]) => cl.no_issue += 1,
            Some([k]) => match store.issues[*k].kind {
                IssueKind::Bug => cl.one_bug += 1,
                IssueKind::Improvement => cl.one_improvement += 1,
            },
            Some(_) => cl.several_issues += 1,
        }
    }

    let mut links_by_origin = BTreeMap::new();
    for origin in [LinkOrigin::ExplicitTag, LinkOrigin::Classifier, LinkOrigin::HumanAccepted, LinkOrigin::HumanRejected] {
        links_by_origin.insert(format!("{origin:?}"), store.pairs_with_origin(origin).len());
    }

    let mut temporal = TemporalCases::default();
    let mut late = Vec::new();
    for (h, k) in &linked {
        let (c, i) = (&store.commits[h], &store.issues[k]);
        if c.committed < i.created {
            temporal.before_created += 1;
        } else if c.committed <= i.resolved {
            temporal.during += 1;
        } else {
            temporal.after_resolved += 1;
            late.push(c.committed.hours_since(i.resolved));
        }
    }
    temporal.late_median_hours = median(late);

    let mut overlaps = Vec::new();
    for hashes in commits_of.values() {
        let unique: BTreeSet<&str> = hashes.iter().copied().collect();
        let mut commits: Vec<_> = unique.iter().map(|h| &store.commits[*h]).collect();
        commits.sort_by(|a, b| a.committed.cmp(&b.committed).then_with(|| a.hash.cmp(&b.hash)));
        overlaps.extend(commits.windows(2).map(|w| overlap(w[0], w[1])));
    }
    let mean_consecutive_overlap = if overlaps.is_empty() {
        None
    } else {
        Some(overlaps.iter().sum::<f64>() / overlaps.len() as f64)
    };

    ProjectStats {
        project_key: store.project_key.clone(),
        issues_by_kind,
        commit_linkage: cl,
        links_by_origin,
        temporal,
        mean_consecutive_overlap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::example::timeline_project;

    #[test]
    fn timeline_statistics() {
        let s = project_stats(&timeline_project());
        assert_eq!(s.commit_linkage.commits, 9);
        assert_eq!(s.commit_linkage.no_issue, 5);
        assert_eq!(s.commit_linkage.one_bug, 1);
        assert_eq!(s.commit_linkage.one_improvement, 3);
        assert_eq!(s.issues_by_kind["improvement"].one_commit, 3);
        assert_eq!(s.issues_by_kind["improvement"].no_commit, 1);
        assert_eq!(s.temporal.during, 4);
        assert_eq!(s.temporal.late_median_hours, None);
        assert_eq!(s.mean_consecutive_overlap, None);
    }

    #[test]
    fn median_of_even_count() {
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), Some(2.5));
    }
}
