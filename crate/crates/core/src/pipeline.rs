//! End-to-end workflows over a project archive: indexing, training,
//! evaluation, recommendation, augmentation and review batches.
//!
//! Files written next to the archive:
//!
//! ```text
//! index/corpus.json                        split time and tf-idf index
//! models/<profile>/<set>/<kind>.model      RepetitionBundle as JSON
//! batches/<id>.json                        ReviewBatch with groups and scores
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eval::review::{augmentation_stats, build_review_batch, AugmentationStats, ReviewBatch};
use crate::eval::scenario::{evaluate_scenario1, evaluate_scenario2, ScoredPairs, Truth};
use crate::eval::split::{split_profile, split_time, ProfileSplit};
use crate::eval::stats::mann_whitney_u;
use crate::eval::{EvaluationReport, EvaluationRow, SetComparison, TruthMode};
use crate::features::{
    build_dataset, select_attributes, Attribute, AttributeSet, AttributeVector,
    CandidateConfig, CandidateIndex, CandidatePair, FeatureContext, Label,
};
use crate::learn::{train_repetitions_n, ClassifierKind, ClassifierParams, RepetitionBundle, REPETITIONS};
use crate::model::{read_json, write_json, IssueKind, LinkOrigin, ProjectStore, Timestamp, TraceLink};
use crate::textsim::CorpusIndex;
use crate::{rng, Error, Result};

pub fn model_path(project: &Path, profile: IssueKind, set: AttributeSet, kind: ClassifierKind) -> PathBuf {
    project
        .join("models")
        .join(profile.as_str())
        .join(set.as_str())
        .join(format!("{}.model", kind.as_str()))
}

pub fn index_path(project: &Path) -> PathBuf {
    project.join("index").join("corpus.json")
}

pub fn batch_path(project: &Path, id: &str) -> PathBuf {
    project.join("batches").join(format!("{id}.json"))
}

/// Pairs used as positive evidence, both for labels and for the link-based
/// attributes. Classifier links are never evidence.
pub fn evidence_links(store: &ProjectStore, include_human: bool) -> BTreeSet<(String, String)> {
    let mut links = store.pairs_with_origin(LinkOrigin::ExplicitTag);
    if include_human {
        links.extend(store.pairs_with_origin(LinkOrigin::HumanAccepted));
    }
    links
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredIndex {
    pub t_split: Timestamp,
    pub index: CorpusIndex,
}

/// tf-idf index over what is known at `t_split`: texts of issues created by
/// then, messages of commits made by then and those commits' file snapshots.
pub fn build_index(store: &ProjectStore, t_split: Timestamp) -> Result<CorpusIndex> {
    let mut docs: Vec<&str> = Vec::new();
    let texts: Vec<String> = store
        .issues
        .values()
        .filter(|i| i.created <= t_split)
        .map(|i| i.text())
        .collect();
    docs.extend(texts.iter().map(String::as_str));
    let mut refs = BTreeSet::new();
    for c in store.commits.values().filter(|c| c.committed <= t_split) {
        docs.push(&c.message);
        refs.extend(c.files.iter().filter_map(|f| f.content_ref.as_deref()));
    }
    docs.extend(refs.into_iter().filter_map(|r| store.snapshots.get(r).map(String::as_str)));
    CorpusIndex::build(&docs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub candidates: CandidateConfig,
    pub classifier: ClassifierParams,
    pub repetitions: usize,
    pub seed: u64,
    pub include_human: bool,
}

impl TrainingConfig {
    pub fn new(kind: ClassifierKind) -> Self {
        TrainingConfig {
            candidates: CandidateConfig::default(),
            classifier: ClassifierParams::new(kind),
            repetitions: REPETITIONS,
            seed: rng::DEFAULT_SEED,
            include_human: false,
        }
    }
}

/// One profile's split with the attribute vectors of both sides.
pub struct PreparedProfile {
    pub split: ProfileSplit,
    pub train_vectors: Vec<AttributeVector>,
    pub test_vectors: Vec<AttributeVector>,
}

pub struct Prepared {
    pub t_split: Timestamp,
    pub index: CorpusIndex,
    pub profiles: Vec<PreparedProfile>,
    pub missing_snapshots: usize,
}

/// Splits the store at the improvement-derived time and computes the
/// attributes of every train and test pair of `profiles`.
pub fn prepare(store: &ProjectStore, cfg: &TrainingConfig, profiles: &[IssueKind]) -> Result<Prepared> {
    let t_split = split_time(store)?;
    let index = build_index(store, t_split)?;
    let links = evidence_links(store, cfg.include_human);
    let ctx = FeatureContext::with_links(store, &index, cfg.candidates, &links)?;
    let profiles = profiles
        .iter()
        .map(|&p| {
            let split = split_profile(store, p, t_split, &cfg.candidates, &links);
            let train_vectors = ctx.compute_all(&split.train)?;
            let test_vectors = ctx.compute_all(&split.test)?;
            Ok(PreparedProfile {
                split,
                train_vectors,
                test_vectors,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared {
        t_split,
        missing_snapshots: ctx.missing_snapshots(),
        index,
        profiles,
    })
}

pub struct FittedSet {
    pub attributes: Vec<Attribute>,
    pub bundle: RepetitionBundle,
}

/// Selects the attributes of `set` and trains the repetition bundle.
pub fn fit_profile(profile: &PreparedProfile, set: AttributeSet, cfg: &TrainingConfig) -> Result<FittedSet> {
    let train = &profile.split.train;
    if !train.iter().any(|p| p.label == Label::Linked) {
        return Err(Error::InsufficientData(format!(
            "the {} training set has no linked pairs",
            profile.split.profile.as_str()
        )));
    }
    let attributes = match set.fixed() {
        Some(fixed) => fixed,
        None => select_attributes(set, &build_dataset(train, &profile.train_vectors, &Attribute::ALL)?)?,
    };
    let data = build_dataset(train, &profile.train_vectors, &attributes)?;
    let bundle = train_repetitions_n(&cfg.classifier, &data, cfg.seed, cfg.repetitions)?;
    Ok(FittedSet { attributes, bundle })
}

/// Attributes a bundle was trained on, recovered from its schema.
pub fn bundle_attributes(bundle: &RepetitionBundle) -> Result<Vec<Attribute>> {
    bundle
        .schema()
        .attributes
        .iter()
        .map(|a| a.name.parse::<Attribute>())
        .collect()
}

pub fn score_pairs(
    bundle: &RepetitionBundle,
    attributes: &[Attribute],
    pairs: &[CandidatePair],
    vectors: &[AttributeVector],
) -> Result<ScoredPairs> {
    let mut member_scores = vec![Vec::with_capacity(pairs.len()); bundle.members.len()];
    for v in vectors {
        for (r, s) in bundle.member_scores(&v.select(attributes))?.into_iter().enumerate() {
            member_scores[r].push(s);
        }
    }
    Ok(ScoredPairs {
        pairs: pairs.to_vec(),
        member_scores,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationConfig {
    pub training: TrainingConfig,
    pub profiles: Vec<IssueKind>,
    pub sets: Vec<AttributeSet>,
    pub k: usize,
    pub threshold: f64,
    /// Ground truth for [`TruthMode::Withheld`]; explicit labels otherwise.
    pub ground_truth: Option<BTreeSet<(String, String)>>,
}

/// Trains every profile × set and evaluates both scenarios on the test side.
pub fn evaluate(store: &ProjectStore, cfg: &EvaluationConfig) -> Result<EvaluationReport> {
    if cfg.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(Error::InvalidArgument("threshold must lie in [0, 1]".into()));
    }
    let prepared = prepare(store, &cfg.training, &cfg.profiles)?;
    let mut rows = Vec::new();
    let mut comparisons = Vec::new();
    for profile in &prepared.profiles {
        let truth = match &cfg.ground_truth {
            Some(gt) => Truth::withheld(store, gt.clone()),
            None => Truth::explicit(&profile.split.test),
        };
        let name = profile.split.profile.as_str();
        let mut per_set_f = Vec::new();
        for &set in &cfg.sets {
            let fitted = fit_profile(profile, set, &cfg.training)?;
            let scored = score_pairs(&fitted.bundle, &fitted.attributes, &profile.split.test, &profile.test_vectors)?;
            let s1 = evaluate_scenario1(&scored, &truth, cfg.k)?;
            let s2 = evaluate_scenario2(&scored, &truth, cfg.threshold)?;
            per_set_f.push((set, s1.repetitions.iter().map(|m| m.f).collect::<Vec<f64>>()));
            rows.push(EvaluationRow {
                profile: name.to_string(),
                set: set.as_str().to_string(),
                classifier: cfg.training.classifier.kind.as_str().to_string(),
                attributes: fitted.attributes.iter().map(|a| a.name()).collect(),
                train_pairs: profile.split.train.len(),
                train_linked: profile.split.train.iter().filter(|p| p.label == Label::Linked).count(),
                test_pairs: profile.split.test.len(),
                scenario1: s1,
                scenario2: s2,
            });
        }
        if let Some((_, base)) = per_set_f.iter().find(|(s, _)| *s == AttributeSet::All) {
            for (set, f) in per_set_f.iter().filter(|(s, _)| *s != AttributeSet::All) {
                comparisons.push(SetComparison {
                    profile: name.to_string(),
                    set: AttributeSet::All.as_str().to_string(),
                    against: set.as_str().to_string(),
                    test: mann_whitney_u(base, f)?,
                });
            }
        }
    }
    Ok(EvaluationReport {
        project: store.project_key.clone(),
        seed: cfg.training.seed,
        repetitions: cfg.training.repetitions,
        k: cfg.k,
        threshold: cfg.threshold,
        truth: if cfg.ground_truth.is_some() { TruthMode::Withheld } else { TruthMode::Explicit },
        t_split: prepared.t_split.seconds(),
        rows,
        comparisons,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedEntry {
    pub profile: String,
    pub set: String,
    pub classifier: String,
    pub path: String,
    pub attributes: Vec<String>,
    pub train_pairs: usize,
    pub train_linked: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub project: String,
    pub t_split: i64,
    pub missing_snapshots: usize,
    pub models: Vec<TrainedEntry>,
}

/// Trains and writes one bundle per profile plus the shared index.
pub fn train_and_save(
    store: &ProjectStore,
    project: &Path,
    set: AttributeSet,
    profiles: &[IssueKind],
    cfg: &TrainingConfig,
) -> Result<TrainSummary> {
    let prepared = prepare(store, cfg, profiles)?;
    let mut models = Vec::new();
    for profile in &prepared.profiles {
        let fitted = fit_profile(profile, set, cfg)?;
        let path = model_path(project, profile.split.profile, set, cfg.classifier.kind);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fitted.bundle.save(&path)?;
        models.push(TrainedEntry {
            profile: profile.split.profile.as_str().to_string(),
            set: set.as_str().to_string(),
            classifier: cfg.classifier.kind.as_str().to_string(),
            path: path
                .strip_prefix(project)
                .unwrap_or(&path)
                .to_string_lossy()
                .into_owned(),
            attributes: fitted.attributes.iter().map(|a| a.name()).collect(),
            train_pairs: profile.split.train.len(),
            train_linked: profile.split.train.iter().filter(|p| p.label == Label::Linked).count(),
            seeds: fitted.bundle.seeds(),
        });
    }
    let path = index_path(project);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_json(
        &path,
        &StoredIndex {
            t_split: prepared.t_split,
            index: prepared.index,
        },
    )?;
    Ok(TrainSummary {
        project: store.project_key.clone(),
        t_split: prepared.t_split.seconds(),
        missing_snapshots: prepared.missing_snapshots,
        models,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub set: AttributeSet,
    pub kind: ClassifierKind,
    pub seed: u64,
}

/// Trained bundles of both profiles with the index they were built against.
#[derive(Debug, Clone)]
pub struct Recommender {
    pub info: ModelInfo,
    pub index: CorpusIndex,
    pub candidates: CandidateConfig,
    models: BTreeMap<IssueKind, (Vec<Attribute>, RepetitionBundle)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedIssue {
    pub issue_key: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub commit_hash: String,
    pub recommendations: Vec<RankedIssue>,
    pub model: ModelInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub commit_hash: String,
    pub issue_key: String,
    pub profile: IssueKind,
    /// Mean over the repetition bundle.
    pub score: f64,
}

impl Recommender {
    /// Loads every profile model present for `set` and `kind`. Fails when
    /// there is none or when the index is missing.
    pub fn load(project: &Path, set: AttributeSet, kind: ClassifierKind, candidates: CandidateConfig) -> Result<Self> {
        let mut models = BTreeMap::new();
        let mut seed = None;
        for profile in IssueKind::ALL {
            let path = model_path(project, profile, set, kind);
            if !path.exists() {
                continue;
            }
            let bundle = RepetitionBundle::load(&path)?;
            seed.get_or_insert(bundle.base_seed);
            models.insert(profile, (bundle_attributes(&bundle)?, bundle));
        }
        let Some(seed) = seed else {
            return Err(Error::InsufficientData(format!(
                "no trained {} model for attribute set {}; run train first",
                kind.as_str(),
                set.as_str()
            )));
        };
        let stored: StoredIndex = read_json(&index_path(project))?;
        Ok(Recommender {
            info: ModelInfo { set, kind, seed },
            index: stored.index,
            candidates,
            models,
        })
    }

    pub fn profiles(&self) -> impl Iterator<Item = IssueKind> + '_ {
        self.models.keys().copied()
    }

    /// Candidates of `commits` whose profile has a model, scored and sorted
    /// by (hash, key). `links` drive the link-based attributes.
    pub fn score_commits(
        &self,
        store: &ProjectStore,
        commits: &[&str],
        links: &BTreeSet<(String, String)>,
    ) -> Result<Vec<ScoredCandidate>> {
        let ctx = FeatureContext::with_links(store, &self.index, self.candidates, links)?;
        let issues = CandidateIndex::new(
            store.issues.values().filter(|i| self.models.contains_key(&i.kind)),
            self.candidates,
        );
        let mut out = Vec::new();
        for &hash in commits {
            let commit = store.commit(hash)?;
            for issue in issues.candidates_for(commit) {
                let (attrs, bundle) = &self.models[&issue.kind];
                let v = ctx.compute(hash, &issue.key)?;
                out.push(ScoredCandidate {
                    commit_hash: hash.to_string(),
                    issue_key: issue.key.clone(),
                    profile: issue.kind,
                    score: bundle.mean_score(&v.select(attrs))?,
                });
            }
        }
        out.sort_by(|a, b| (&a.commit_hash, &a.issue_key).cmp(&(&b.commit_hash, &b.issue_key)));
        Ok(out)
    }

    /// Top `k` candidate issues of a commit, score descending then key
    /// ascending.
    pub fn recommend(
        &self,
        store: &ProjectStore,
        hash: &str,
        k: usize,
        links: &BTreeSet<(String, String)>,
    ) -> Result<Recommendation> {
        let mut scored = self.score_commits(store, &[hash], links)?;
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.issue_key.cmp(&b.issue_key)));
        scored.truncate(k);
        Ok(Recommendation {
            commit_hash: hash.to_string(),
            recommendations: scored
                .into_iter()
                .map(|c| RankedIssue {
                    issue_key: c.issue_key,
                    score: c.score,
                })
                .collect(),
            model: self.info.clone(),
        })
    }
}

/// Commits without any positive evidence link, sorted by hash.
pub fn unlinked_commits(store: &ProjectStore, links: &BTreeSet<(String, String)>) -> Vec<String> {
    let linked: BTreeSet<&str> = links.iter().map(|(h, _)| h.as_str()).collect();
    store
        .commits
        .keys()
        .filter(|h| !linked.contains(h.as_str()))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub project: String,
    pub threshold: f64,
    pub dry_run: bool,
    pub model: ModelInfo,
    /// Links scoring above the threshold, sorted by (hash, key).
    pub links: Vec<ScoredCandidate>,
    /// How many of `links` were new to the store.
    pub added: usize,
    pub stats: BTreeMap<String, AugmentationStats>,
}

/// Scores the candidates of every commit without evidence links and adds a
/// Classifier link for each pair whose mean score exceeds `threshold`. Pairs
/// that already carry any link are left alone. With `dry_run` the store is
/// not touched.
pub fn augment(
    store: &mut ProjectStore,
    recommender: &Recommender,
    threshold: f64,
    include_human: bool,
    dry_run: bool,
) -> Result<AugmentReport> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument("threshold must lie in [0, 1]".into()));
    }
    let links = evidence_links(store, include_human);
    let unlinked = unlinked_commits(store, &links);
    let refs: Vec<&str> = unlinked.iter().map(String::as_str).collect();
    let scored = recommender.score_commits(store, &refs, &links)?;

    let mut stats = BTreeMap::new();
    for profile in recommender.profiles() {
        let (pairs, scores): (Vec<CandidatePair>, Vec<f64>) = scored
            .iter()
            .filter(|c| c.profile == profile)
            .map(|c| {
                (
                    CandidatePair {
                        commit_hash: c.commit_hash.clone(),
                        issue_key: c.issue_key.clone(),
                        label: Label::Unknown,
                    },
                    c.score,
                )
            })
            .unzip();
        if let Ok(s) = augmentation_stats(&pairs, &scores, &unlinked) {
            stats.insert(profile.as_str().to_string(), s);
        }
    }

    let existing: BTreeSet<(&str, &str)> = store
        .links
        .iter()
        .map(|l| (l.commit_hash.as_str(), l.issue_key.as_str()))
        .collect();
    let selected: Vec<ScoredCandidate> = scored
        .into_iter()
        .filter(|c| c.score > threshold && !existing.contains(&(c.commit_hash.as_str(), c.issue_key.as_str())))
        .collect();
    let mut added = 0;
    if !dry_run {
        for c in &selected {
            if store.add_link(TraceLink::classified(&c.commit_hash, &c.issue_key, c.score))? {
                added += 1;
            }
        }
    }
    Ok(AugmentReport {
        project: store.project_key.clone(),
        threshold,
        dry_run,
        model: recommender.info.clone(),
        links: selected,
        added,
        stats,
    })
}

/// A review batch over commits without evidence links.
pub fn review_batch(
    store: &ProjectStore,
    recommender: &Recommender,
    id: &str,
    seed: u64,
    include_human: bool,
) -> Result<ReviewBatch> {
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(Error::InvalidArgument(format!(
            "batch id `{id}` may only contain letters, digits, `-` and `_`"
        )));
    }
    let links = evidence_links(store, include_human);
    let unlinked = unlinked_commits(store, &links);
    let refs: Vec<&str> = unlinked.iter().map(String::as_str).collect();
    let scored = recommender.score_commits(store, &refs, &links)?;
    let pairs: Vec<CandidatePair> = scored
        .iter()
        .map(|c| CandidatePair {
            commit_hash: c.commit_hash.clone(),
            issue_key: c.issue_key.clone(),
            label: Label::Unknown,
        })
        .collect();
    let scores: Vec<f64> = scored.iter().map(|c| c.score).collect();
    build_review_batch(id, &pairs, &scores, &unlinked, seed)
}
