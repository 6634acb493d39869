//! Candidate commit-issue pairs and their 18 attributes.
//!
//! A commit is a candidate for an issue when it was committed after the issue
//! was created and no later than `epsilon_candidate` after it was resolved.
//! Every candidate pair is described by an [`AttributeVector`]:
//!
//! | attrs      | meaning                                                   |
//! |------------|-----------------------------------------------------------|
//! | a1..a3     | committer, assignee, whether they are the same person     |
//! | a4..a7     | hours since creation, hours to resolution, inside, close  |
//! | a8..a10    | closest previous linked commit: gap, file overlap, user   |
//! | a11..a13   | closest subsequent linked commit: gap, file overlap, user |
//! | a14..a16   | open issues, open issues of the assignee, earlier links   |
//! | a17, a18   | message similarity, best file-snapshot similarity         |

mod attributes;
mod candidates;
mod sets;

pub use attributes::{Attribute, AttributeVector, FeatureContext, ATTRIBUTE_COUNT};
pub use candidates::{brute_force_candidates, generate_candidates, CandidateIndex, CandidatePair, Label};
pub use sets::{build_dataset, select_attributes, write_csv, AttributeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Commit, Issue, Timestamp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateConfig {
    /// How long after resolution a commit may still belong to an issue.
    pub epsilon_candidate_hours: f64,
    /// `|a5|` below this makes a commit "close" to the resolution (a7).
    pub epsilon_close_hours: f64,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            epsilon_candidate_hours: 30.0,
            epsilon_close_hours: 60.0,
        }
    }
}

impl CandidateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_candidate_hours > 0.0 && self.epsilon_close_hours > 0.0) {
            return Err(Error::InvalidArgument("both epsilon values must be positive".into()));
        }
        Ok(())
    }

    fn candidate_slack_seconds(&self) -> i64 {
        (self.epsilon_candidate_hours * Timestamp::SECONDS_PER_HOUR as f64).round() as i64
    }
}

/// `created(i) <= committed(c) <= resolved(i) + epsilon_candidate`.
pub fn is_candidate(commit: &Commit, issue: &Issue, cfg: &CandidateConfig) -> bool {
    issue.created <= commit.committed
        && commit.committed <= issue.resolved.plus_seconds(cfg.candidate_slack_seconds())
}

/// Shared files over the larger file count; 0 when either side is empty.
pub fn overlap(a: &Commit, b: &Commit) -> f64 {
    let larger = a.files.len().max(b.files.len());
    if a.files.is_empty() || b.files.is_empty() {
        return 0.0;
    }
    a.files.shared_paths(&b.files) as f64 / larger as f64
}

#[cfg(test)]
mod tests;
