use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::features::{generate_candidates, CandidateConfig, CandidatePair};
use crate::model::{IssueKind, ProjectStore, Timestamp};
use crate::{Error, Result};

/// Fewest improvements for which an 80/20 cut is computed.
pub const MIN_IMPROVEMENTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSplit {
    pub profile: IssueKind,
    pub t_split: Timestamp,
    pub train: Vec<CandidatePair>,
    pub test: Vec<CandidatePair>,
}

/// Resolution time of the improvement at position `ceil(0.8 n) - 1` when
/// improvements are ordered by creation (then key).
pub fn split_time(store: &ProjectStore) -> Result<Timestamp> {
    let mut imps: Vec<_> = store
        .issues
        .values()
        .filter(|i| i.kind == IssueKind::Improvement)
        .collect();
    if imps.len() < MIN_IMPROVEMENTS {
        return Err(Error::InsufficientData(format!(
            "{} improvements, at least {MIN_IMPROVEMENTS} are needed for a temporal split",
            imps.len()
        )));
    }
    imps.sort_by(|a, b| a.created.cmp(&b.created).then_with(|| a.key.cmp(&b.key)));
    let idx = (4 * imps.len()).div_ceil(5) - 1;
    Ok(imps[idx].resolved)
}

/// Training pairs join commits up to `t_split` with profile issues resolved by
/// then; test pairs join later commits with profile issues created later.
/// Pairs in `linked` are labelled Linked, all others NonLinked.
pub fn split_profile(
    store: &ProjectStore,
    profile: IssueKind,
    t_split: Timestamp,
    cfg: &CandidateConfig,
    linked: &BTreeSet<(String, String)>,
) -> ProfileSplit {
    let issues = || store.issues.values().filter(|i| i.kind == profile);
    let train = generate_candidates(
        store.commits.values().filter(|c| c.committed <= t_split),
        issues().filter(|i| i.resolved <= t_split),
        cfg,
    );
    let test = generate_candidates(
        store.commits.values().filter(|c| c.committed > t_split),
        issues().filter(|i| i.created > t_split),
        cfg,
    );
    let label = |pairs: Vec<CandidatePair>| pairs.into_iter().map(|p| p.labelled(linked)).collect();
    ProfileSplit {
        profile,
        t_split,
        train: label(train),
        test: label(test),
    }
}
