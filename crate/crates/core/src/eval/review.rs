//! Classified links on untagged commits and blind review batches.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use super::scenario::rank_order;
use crate::features::CandidatePair;
use crate::rng;
use crate::{Error, Result};

pub const BATCH_SIZE: usize = 20;
pub const GROUP_A_SIZE: usize = 14;
pub const GROUP_B_SIZE: usize = BATCH_SIZE - GROUP_A_SIZE;
/// Score at which a pair is classified Linked.
pub const CLASSIFY_AT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationStats {
    pub unlinked_commits: usize,
    pub classified_links: usize,
    /// Mean classified links per unlinked commit.
    pub mean_links_per_commit: f64,
    /// Number of unlinked commits per count of classified links.
    pub histogram: BTreeMap<usize, usize>,
}

/// Candidate pairs of `commits` grouped per commit; pairs must be sorted by
/// hash. Commits without candidates get an empty slice.
fn by_commit(pairs: &[CandidatePair], commits: &[String]) -> Vec<(String, std::ops::Range<usize>)> {
    commits
        .iter()
        .map(|h| {
            let start = pairs.partition_point(|p| p.commit_hash.as_str() < h.as_str());
            let end = pairs.partition_point(|p| p.commit_hash.as_str() <= h.as_str());
            (h.clone(), start..end)
        })
        .collect()
}

/// For every commit in `unlinked`, the number of its candidates scoring at
/// least [`CLASSIFY_AT`].
pub fn augmentation_stats(pairs: &[CandidatePair], scores: &[f64], unlinked: &[String]) -> Result<AugmentationStats> {
    if unlinked.is_empty() {
        return Err(Error::InsufficientData("there are no commits without explicit links".into()));
    }
    let mut histogram = BTreeMap::new();
    let mut total = 0;
    for (_, range) in by_commit(pairs, unlinked) {
        let n = range.filter(|&i| scores[i] >= CLASSIFY_AT).count();
        total += n;
        *histogram.entry(n).or_default() += 1;
    }
    Ok(AugmentationStats {
        unlinked_commits: unlinked.len(),
        classified_links: total,
        mean_links_per_commit: total as f64 / unlinked.len() as f64,
        histogram,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    /// The classifier's top-ranked issue.
    A,
    /// An issue the classifier did not suggest.
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub commit_hash: String,
    pub issue_key: String,
    pub group: Group,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewBatch {
    pub id: String,
    pub seed: u64,
    /// Presentation order.
    pub entries: Vec<BatchEntry>,
}

/// Samples commits from `unlinked` and attaches the top-ranked candidate to
/// 14 of them (group A) and a candidate the classifier did not suggest to 6
/// (group B). A group-B commit needs a candidate other than its top-ranked
/// one; non-suggested candidates (score below [`CLASSIFY_AT`]) are preferred.
pub fn build_review_batch(
    id: &str,
    pairs: &[CandidatePair],
    scores: &[f64],
    unlinked: &[String],
    seed: u64,
) -> Result<ReviewBatch> {
    let mut eligible: Vec<(String, Vec<usize>)> = by_commit(pairs, unlinked)
        .into_iter()
        .filter(|(_, r)| !r.is_empty())
        .map(|(h, r)| {
            let mut idx: Vec<usize> = r.collect();
            rank_order(pairs, scores, &mut idx);
            (h, idx)
        })
        .collect();
    if eligible.len() < BATCH_SIZE {
        return Err(Error::InsufficientData(format!(
            "a review batch needs {BATCH_SIZE} untagged commits with candidates, {} available",
            eligible.len()
        )));
    }
    let mut r = rng::seeded(seed);
    eligible.shuffle(&mut r);

    let mut entries = Vec::with_capacity(BATCH_SIZE);
    let (mut a, mut b) = (0, 0);
    for (hash, ranked) in &eligible {
        if a == GROUP_A_SIZE && b == GROUP_B_SIZE {
            break;
        }
        if b < GROUP_B_SIZE && ranked.len() >= 2 {
            let rest = &ranked[1..];
            let unsuggested: Vec<usize> = rest.iter().copied().filter(|&i| scores[i] < CLASSIFY_AT).collect();
            let pool = if unsuggested.is_empty() { rest.to_vec() } else { unsuggested };
            let pick = *pool.choose(&mut r).expect("non-empty");
            entries.push(BatchEntry {
                commit_hash: hash.clone(),
                issue_key: pairs[pick].issue_key.clone(),
                group: Group::B,
                score: scores[pick],
            });
            b += 1;
        } else if a < GROUP_A_SIZE {
            let top = ranked[0];
            entries.push(BatchEntry {
                commit_hash: hash.clone(),
                issue_key: pairs[top].issue_key.clone(),
                group: Group::A,
                score: scores[top],
            });
            a += 1;
        }
    }
    if a < GROUP_A_SIZE || b < GROUP_B_SIZE {
        return Err(Error::InsufficientData(format!(
            "only {b} untagged commits have a second candidate for group B, {GROUP_B_SIZE} are needed"
        )));
    }
    entries.shuffle(&mut r);
    Ok(ReviewBatch {
        id: id.to_string(),
        seed,
        entries,
    })
}
