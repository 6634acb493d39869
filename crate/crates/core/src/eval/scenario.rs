//! Scenario 1 (top-k recommendation per commit) and Scenario 2 (automatic
//! augmentation above a score threshold).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::metrics::{Counts, MetricsReport};
use crate::features::{CandidatePair, Label};
use crate::model::{LinkOrigin, ProjectStore};
use crate::{Error, Result};

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_THRESHOLD: f64 = 0.95;
pub const RECOMMENDATION_BETA: f64 = 2.0;
pub const AUGMENTATION_BETA: f64 = 0.5;

/// Test pairs with the score of every repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPairs {
    /// Sorted by (hash, key).
    pub pairs: Vec<CandidatePair>,
    /// `member_scores[r][i]` is repetition `r`'s score for `pairs[i]`.
    pub member_scores: Vec<Vec<f64>>,
}

impl ScoredPairs {
    pub fn mean_scores(&self) -> Vec<f64> {
        let n = self.member_scores.len().max(1) as f64;
        (0..self.pairs.len())
            .map(|i| self.member_scores.iter().map(|s| s[i]).sum::<f64>() / n)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthMode {
    /// Truth is the pair labels: explicitly tagged links.
    Explicit,
    /// Truth is an external ground truth; only commits without any explicit
    /// link are evaluated, so every true link is one that was withheld.
    Withheld,
}

/// Which pairs are truly linked and which commits are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub mode: TruthMode,
    linked: BTreeSet<(String, String)>,
    excluded_commits: BTreeSet<String>,
}

impl Truth {
    pub fn explicit(pairs: &[CandidatePair]) -> Self {
        Truth {
            mode: TruthMode::Explicit,
            linked: pairs
                .iter()
                .filter(|p| p.label == Label::Linked)
                .map(|p| (p.commit_hash.clone(), p.issue_key.clone()))
                .collect(),
            excluded_commits: BTreeSet::new(),
        }
    }

    pub fn withheld(store: &ProjectStore, ground_truth: BTreeSet<(String, String)>) -> Self {
        Truth {
            mode: TruthMode::Withheld,
            linked: ground_truth,
            excluded_commits: store
                .pairs_with_origin(LinkOrigin::ExplicitTag)
                .into_iter()
                .map(|(h, _)| h)
                .collect(),
        }
    }

    pub fn in_pool(&self, hash: &str) -> bool {
        !self.excluded_commits.contains(hash)
    }

    pub fn is_true(&self, p: &CandidatePair) -> bool {
        self.linked.contains(&(p.commit_hash.clone(), p.issue_key.clone()))
    }
}

/// Order of a commit's candidates in a ranked list: score descending, then
/// issue key ascending.
pub fn rank_order(pairs: &[CandidatePair], scores: &[f64], idx: &mut [usize]) {
    idx.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| pairs[a].issue_key.cmp(&pairs[b].issue_key))
    });
}

/// Ranks the candidates of every pooled commit with at least one true link
/// and keeps the first `k`.
pub fn recommendation_counts(pairs: &[CandidatePair], scores: &[f64], truth: &Truth, k: usize) -> Counts {
    let mut counts = Counts::default();
    let mut start = 0;
    while start < pairs.len() {
        let hash = &pairs[start].commit_hash;
        let end = start + pairs[start..].iter().take_while(|p| &p.commit_hash == hash).count();
        if truth.in_pool(hash) {
            let relevant = (start..end).filter(|&i| truth.is_true(&pairs[i])).count();
            if relevant > 0 {
                let mut idx: Vec<usize> = (start..end).collect();
                rank_order(pairs, scores, &mut idx);
                idx.truncate(k);
                counts.relevant += relevant;
                counts.retrieved += idx.len();
                counts.hits += idx.iter().filter(|&&i| truth.is_true(&pairs[i])).count();
            }
        }
        start = end;
    }
    counts
}

/// Pooled pairs scoring strictly above `threshold` against all pooled true pairs.
pub fn augmentation_counts(pairs: &[CandidatePair], scores: &[f64], truth: &Truth, threshold: f64) -> Counts {
    let mut counts = Counts::default();
    for (p, &s) in pairs.iter().zip(scores) {
        if !truth.in_pool(&p.commit_hash) {
            continue;
        }
        let t = truth.is_true(p);
        counts.relevant += t as usize;
        if s > threshold {
            counts.retrieved += 1;
            counts.hits += t as usize;
        }
    }
    counts
}

fn check(scored: &ScoredPairs, truth: &Truth) -> Result<()> {
    if scored.pairs.is_empty() {
        return Err(Error::InsufficientData("the test set has no candidate pairs".into()));
    }
    let any_true = scored
        .pairs
        .iter()
        .any(|p| truth.in_pool(&p.commit_hash) && truth.is_true(p));
    if !any_true {
        return Err(Error::InsufficientData("the test set contains no true links".into()));
    }
    Ok(())
}

/// Per-repetition top-`k` precision, recall and F2, averaged over repetitions.
pub fn evaluate_scenario1(scored: &ScoredPairs, truth: &Truth, k: usize) -> Result<MetricsReport> {
    check(scored, truth)?;
    let reps = scored
        .member_scores
        .iter()
        .map(|s| recommendation_counts(&scored.pairs, s, truth, k).metrics(RECOMMENDATION_BETA))
        .collect();
    Ok(MetricsReport::macro_average(RECOMMENDATION_BETA, reps))
}

/// Links predicted where the mean score over repetitions exceeds `threshold`;
/// the per-repetition values use each repetition's own score.
pub fn evaluate_scenario2(scored: &ScoredPairs, truth: &Truth, threshold: f64) -> Result<MetricsReport> {
    check(scored, truth)?;
    let headline = augmentation_counts(&scored.pairs, &scored.mean_scores(), truth, threshold).metrics(AUGMENTATION_BETA);
    let reps = scored
        .member_scores
        .iter()
        .map(|s| augmentation_counts(&scored.pairs, s, truth, threshold).metrics(AUGMENTATION_BETA))
        .collect();
    Ok(MetricsReport::with_headline(AUGMENTATION_BETA, headline, reps))
}
