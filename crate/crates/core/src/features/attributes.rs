use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{overlap, CandidateConfig, CandidatePair};
use crate::learn::{AttributeKind, AttributeSpec, Value};
use crate::model::{Commit, Issue, ProjectStore, UserId};
use crate::textsim::{cosine, CorpusIndex, DocumentVector};
use crate::{Error, Result};

pub const ATTRIBUTE_COUNT: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Attribute {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    A8,
    A9,
    A10,
    A11,
    A12,
    A13,
    A14,
    A15,
    A16,
    A17,
    A18,
}

impl Attribute {
    pub const ALL: [Attribute; ATTRIBUTE_COUNT] = [
        Attribute::A1,
        Attribute::A2,
        Attribute::A3,
        Attribute::A4,
        Attribute::A5,
        Attribute::A6,
        Attribute::A7,
        Attribute::A8,
        Attribute::A9,
        Attribute::A10,
        Attribute::A11,
        Attribute::A12,
        Attribute::A13,
        Attribute::A14,
        Attribute::A15,
        Attribute::A16,
        Attribute::A17,
        Attribute::A18,
    ];

    /// Zero-based position, `a1` is 0.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Attribute> {
        Attribute::ALL.get(i).copied()
    }

    pub fn name(self) -> String {
        format!("a{}", self.index() + 1)
    }

    /// User ids are categorical, everything else numeric.
    pub fn kind(self) -> AttributeKind {
        match self {
            Attribute::A1 | Attribute::A2 | Attribute::A10 | Attribute::A13 => AttributeKind::Categorical,
            _ => AttributeKind::Numeric,
        }
    }

    pub fn spec(self) -> AttributeSpec {
        AttributeSpec {
            name: self.name(),
            kind: self.kind(),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix('a')
            .and_then(|n| n.parse::<usize>().ok())
            .and_then(|n| n.checked_sub(1))
            .and_then(Attribute::from_index)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown attribute `{s}`")))
    }
}

impl From<Attribute> for String {
    fn from(a: Attribute) -> String {
        a.name()
    }
}

impl TryFrom<String> for Attribute {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeVector(pub [Value; ATTRIBUTE_COUNT]);

impl AttributeVector {
    pub fn get(&self, a: Attribute) -> Value {
        self.0[a.index()]
    }

    pub fn num(&self, a: Attribute) -> Option<f64> {
        self.get(a).as_num()
    }

    pub fn select(&self, attrs: &[Attribute]) -> Vec<Value> {
        attrs.iter().map(|a| self.get(*a)).collect()
    }
}

fn user(u: UserId) -> Value {
    Value::Cat(u.0)
}

fn flag(b: bool) -> Value {
    Value::Num(if b { 1.0 } else { 0.0 })
}

/// Everything attribute computation needs, precomputed once per store:
/// linked commits per issue in commit order, issues by creation time and
/// tf-idf vectors of issue texts, commit messages and file snapshots.
pub struct FeatureContext<'a> {
    store: &'a ProjectStore,
    cfg: CandidateConfig,
    linked_by_issue: HashMap<&'a str, Vec<&'a Commit>>,
    issues_by_created: Vec<&'a Issue>,
    issue_vectors: HashMap<&'a str, DocumentVector>,
    message_vectors: HashMap<&'a str, DocumentVector>,
    snapshot_vectors: HashMap<&'a str, DocumentVector>,
    missing_snapshots: usize,
}

impl<'a> FeatureContext<'a> {
    /// Neighbor and link-count attributes use the store's positive links.
    pub fn new(store: &'a ProjectStore, index: &CorpusIndex, cfg: CandidateConfig) -> Result<Self> {
        Self::with_links(store, index, cfg, &store.linked_pairs())
    }

    /// Like [`FeatureContext::new`] but with an explicit set of linked pairs.
    pub fn with_links(
        store: &'a ProjectStore,
        index: &CorpusIndex,
        cfg: CandidateConfig,
        links: &BTreeSet<(String, String)>,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut linked_by_issue: HashMap<&str, Vec<&Commit>> = HashMap::new();
        for (hash, key) in links {
            let commit = store.commit(hash)?;
            let (key, _) = store
                .issues
                .get_key_value(key.as_str())
                .ok_or_else(|| Error::UnknownIssue(key.clone()))?;
            linked_by_issue.entry(key.as_str()).or_default().push(commit);
        }
        for commits in linked_by_issue.values_mut() {
            commits.sort_by(|a, b| a.committed.cmp(&b.committed).then_with(|| a.hash.cmp(&b.hash)));
        }
        let mut issues_by_created: Vec<&Issue> = store.issues.values().collect();
        issues_by_created.sort_by(|a, b| a.created.cmp(&b.created).then_with(|| a.key.cmp(&b.key)));

        let issue_vectors = store
            .issues
            .par_iter()
            .map(|(k, i)| (k.as_str(), index.vectorize(&i.text())))
            .collect();
        let message_vectors = store
            .commits
            .par_iter()
            .map(|(h, c)| (h.as_str(), index.vectorize(&c.message)))
            .collect();
        let mut refs: BTreeSet<&str> = BTreeSet::new();
        let mut missing_snapshots = 0;
        for c in store.commits.values() {
            for f in c.files.iter() {
                match (f.content_ref.as_deref(), store.snapshot(f)) {
                    (Some(r), Some(_)) => {
                        refs.insert(r);
                    }
                    _ => missing_snapshots += 1,
                }
            }
        }
        if missing_snapshots > 0 {
            log::warn!("{missing_snapshots} modified files have no readable snapshot; they count as similarity 0");
        }
        let snapshot_vectors = refs
            .into_par_iter()
            .map(|r| (r, index.vectorize(&store.snapshots[r])))
            .collect();
        Ok(FeatureContext {
            store,
            cfg,
            linked_by_issue,
            issues_by_created,
            issue_vectors,
            message_vectors,
            snapshot_vectors,
            missing_snapshots,
        })
    }

    pub fn store(&self) -> &'a ProjectStore {
        self.store
    }

    pub fn config(&self) -> &CandidateConfig {
        &self.cfg
    }

    /// Modified files whose snapshot could not be read.
    pub fn missing_snapshots(&self) -> usize {
        self.missing_snapshots
    }

    pub fn compute(&self, hash: &str, key: &str) -> Result<AttributeVector> {
        let c = self.store.commit(hash)?;
        let i = self.store.issue(key)?;
        let mut v = [Value::Missing; ATTRIBUTE_COUNT];
        let (a1, a2, a3) = self.stakeholder(c, i);
        v[0] = a1;
        v[1] = a2;
        v[2] = a3;
        let temporal = self.temporal(c, i);
        v[3..7].copy_from_slice(&temporal);
        let (prev, next) = self.neighbors(c, i);
        v[7..10].copy_from_slice(&prev);
        v[10..13].copy_from_slice(&next);
        v[13..16].copy_from_slice(&self.workload(c, i));
        let (a17, a18) = self.similarity(c, i);
        v[16] = Value::Num(a17);
        v[17] = Value::Num(a18);
        Ok(AttributeVector(v))
    }

    /// Attribute vectors for `pairs`, in the same order.
    pub fn compute_all(&self, pairs: &[CandidatePair]) -> Result<Vec<AttributeVector>> {
        pairs
            .par_iter()
            .map(|p| self.compute(&p.commit_hash, &p.issue_key))
            .collect()
    }

    fn stakeholder(&self, c: &Commit, i: &Issue) -> (Value, Value, Value) {
        let committer = c.committer_or_unknown();
        let assignee = i.assignee_or_unknown();
        let same = !committer.is_unknown() && committer == assignee;
        (user(committer), user(assignee), flag(same))
    }

    fn temporal(&self, c: &Commit, i: &Issue) -> [Value; 4] {
        let a4 = c.committed.hours_since(i.created);
        let a5 = i.resolved.hours_since(c.committed);
        [
            Value::Num(a4),
            Value::Num(a5),
            flag(i.is_open_at(c.committed)),
            flag(a5.abs() < self.cfg.epsilon_close_hours),
        ]
    }

    fn neighbors(&self, c: &Commit, i: &Issue) -> ([Value; 3], [Value; 3]) {
        let linked = self.linked_by_issue.get(i.key.as_str()).map_or(&[][..], Vec::as_slice);
        let missing = [Value::Missing; 3];
        let before = linked.partition_point(|x| x.committed < c.committed);
        let prev = before.checked_sub(1).map_or(missing, |p| {
            let cp = linked[p];
            [
                Value::Num(c.committed.hours_since(cp.committed)),
                Value::Num(overlap(cp, c)),
                user(cp.committer_or_unknown()),
            ]
        });
        let after = linked.partition_point(|x| x.committed <= c.committed);
        let next = linked.get(after).map_or(missing, |cn| {
            [
                Value::Num(cn.committed.hours_since(c.committed)),
                Value::Num(overlap(cn, c)),
                user(cn.committer_or_unknown()),
            ]
        });
        (prev, next)
    }

    fn workload(&self, c: &Commit, i: &Issue) -> [Value; 3] {
        let t = c.committed;
        let end = self.issues_by_created.partition_point(|x| x.created <= t);
        let open: Vec<&Issue> = self.issues_by_created[..end]
            .iter()
            .copied()
            .filter(|x| t <= x.resolved)
            .collect();
        let assignee = i.assignee_or_unknown();
        // an unassigned issue shares its assignee with nobody
        let of_assignee = if assignee.is_unknown() {
            0
        } else {
            open.iter().filter(|x| x.assignee_or_unknown() == assignee).count()
        };
        let linked = self.linked_by_issue.get(i.key.as_str()).map_or(&[][..], Vec::as_slice);
        let earlier_links = linked.partition_point(|x| x.committed < t);
        [
            Value::Num(open.len() as f64),
            Value::Num(of_assignee as f64),
            Value::Num(earlier_links as f64),
        ]
    }

    fn similarity(&self, c: &Commit, i: &Issue) -> (f64, f64) {
        let issue = &self.issue_vectors[i.key.as_str()];
        let a17 = cosine(&self.message_vectors[c.hash.as_str()], issue);
        let a18 = c
            .files
            .iter()
            .filter_map(|f| f.content_ref.as_deref().and_then(|r| self.snapshot_vectors.get(r)))
            .map(|v| cosine(v, issue))
            .fold(0.0, f64::max);
        (a17, a18)
    }
}
