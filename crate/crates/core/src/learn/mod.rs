//! Binary classifiers for commit-issue pairs.
//!
//! Three learners share one tabular [`Dataset`] type whose cells are numeric,
//! categorical or explicitly [`Value::Missing`]:
//!
//! - [`bayes`]: Gaussian / Laplace naive Bayes,
//! - [`tree`]: a C4.5-style gain-ratio tree with pessimistic pruning,
//! - [`forest`]: bagged unpruned trees with random attribute subsets.
//!
//! Training always happens on balanced sub-samples; [`train_repetitions`]
//! repeats sub-sampling and training ten times and the bundle's mean score is
//! what rankings and thresholds use.

pub mod bayes;
pub mod cfs;
pub mod forest;
pub mod tree;

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{read_json, write_json};
use crate::rng;
use crate::{Error, Result};

pub use bayes::NaiveBayes;
pub use forest::{ForestParams, RandomForest};
pub use tree::{DecisionTree, TreeParams};

/// Number of sub-sampling repetitions per trained bundle.
pub const REPETITIONS: usize = 10;

/// Version written into every serialised model.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// One attribute value of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    Cat(u32),
    Missing,
}

impl Value {
    pub fn is_missing(self) -> bool {
        matches!(self, Value::Missing)
    }

    pub fn as_num(self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_cat(self) -> Option<u32> {
        match self {
            Value::Cat(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Cat(c) => write!(f, "{c}"),
            Value::Missing => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
}

impl AttributeSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<AttributeSpec>,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Self {
        Schema { attributes }
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Errors name the first offending attribute.
    pub fn check(&self, row: &[Value]) -> Result<()> {
        if row.len() != self.attributes.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} attributes, got {}",
                self.attributes.len(),
                row.len()
            )));
        }
        for (spec, v) in self.attributes.iter().zip(row) {
            let ok = match (spec.kind, v) {
                (_, Value::Missing) => true,
                (AttributeKind::Numeric, Value::Num(x)) => x.is_finite(),
                (AttributeKind::Categorical, Value::Cat(_)) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::SchemaMismatch(format!(
                    "attribute `{}` expects a {:?} value, got {v:?}",
                    spec.name, spec.kind
                )));
            }
        }
        Ok(())
    }
}

/// Labelled instances. `labels[i]` is `true` for Linked.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub schema: Schema,
    pub rows: Vec<Vec<Value>>,
    pub labels: Vec<bool>,
}

impl Dataset {
    pub fn new(schema: Schema) -> Self {
        Dataset {
            schema,
            rows: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>, linked: bool) -> Result<()> {
        self.schema.check(&row)?;
        self.rows.push(row);
        self.labels.push(linked);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn linked_count(&self) -> usize {
        self.labels.iter().filter(|l| **l).count()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn project(&self, columns: &[usize]) -> Dataset {
        Dataset {
            schema: Schema::new(columns.iter().map(|&c| self.schema.attributes[c].clone()).collect()),
            rows: self
                .rows
                .iter()
                .map(|r| columns.iter().map(|&c| r[c]).collect())
                .collect(),
            labels: self.labels.clone(),
        }
    }

    fn require_two_classes(&self) -> Result<()> {
        let linked = self.linked_count();
        if linked == 0 || linked == self.len() {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}

/// Outcome of [`subsample_balance`].
#[derive(Debug, Clone)]
pub struct Balanced {
    pub data: Dataset,
    /// Set when there were fewer non-links than links, so nothing was dropped.
    pub undersized_majority: bool,
}

/// All Linked instances plus as many NonLinked ones drawn uniformly without
/// replacement. Linked rows come first, each class in original order.
pub fn subsample_balance(data: &Dataset, seed: u64) -> Result<Balanced> {
    let linked: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i]).collect();
    if linked.is_empty() {
        return Err(Error::InsufficientData("no Linked instances to balance against".into()));
    }
    let mut non_linked: Vec<usize> = (0..data.len()).filter(|&i| !data.labels[i]).collect();
    let undersized = non_linked.len() < linked.len();
    if undersized {
        log::warn!(
            "only {} NonLinked instances for {} Linked; keeping all",
            non_linked.len(),
            linked.len()
        );
    } else {
        let mut r = rng::seeded(seed);
        let (chosen, _) = non_linked.partial_shuffle(&mut r, linked.len());
        let mut chosen = chosen.to_vec();
        chosen.sort_unstable();
        non_linked = chosen;
    }
    let indices: Vec<usize> = linked.into_iter().chain(non_linked).collect();
    Ok(Balanced {
        data: data.subset(&indices),
        undersized_majority: undersized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    NaiveBayes,
    DecisionTree,
    RandomForest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::NaiveBayes,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "naive-bayes",
            ClassifierKind::DecisionTree => "decision-tree",
            ClassifierKind::RandomForest => "random-forest",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive-bayes" | "nb" => Ok(ClassifierKind::NaiveBayes),
            "decision-tree" | "tree" | "j48" => Ok(ClassifierKind::DecisionTree),
            "random-forest" | "forest" | "rf" => Ok(ClassifierKind::RandomForest),
            other => Err(Error::InvalidArgument(format!("unknown classifier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub kind: ClassifierKind,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub seed: u64,
}

impl ClassifierParams {
    pub fn new(kind: ClassifierKind) -> Self {
        ClassifierParams {
            kind,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            seed: rng::DEFAULT_SEED,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        self.forest.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fitted {
    NaiveBayes(NaiveBayes),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingCounts {
    pub linked: usize,
    pub non_linked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ClassifierKind,
    pub schema: Schema,
    pub seed: u64,
    pub counts: TrainingCounts,
    pub fitted: Fitted,
}

impl TrainedModel {
    /// Likelihood of Linked in `[0, 1]`.
    pub fn predict_score(&self, row: &[Value]) -> Result<f64> {
        self.schema.check(row)?;
        Ok(self.score_unchecked(row))
    }

    fn score_unchecked(&self, row: &[Value]) -> f64 {
        match &self.fitted {
            Fitted::NaiveBayes(m) => m.score(row),
            Fitted::DecisionTree(m) => m.score(row),
            Fitted::RandomForest(m) => m.score(row),
        }
    }

    pub fn classify(&self, row: &[Value]) -> Result<bool> {
        Ok(self.predict_score(row)? >= 0.5)
    }
}

/// Fits one classifier on `data` as given (no balancing).
pub fn train(params: &ClassifierParams, data: &Dataset) -> Result<TrainedModel> {
    params.validate()?;
    data.require_two_classes()?;
    let fitted = match params.kind {
        ClassifierKind::NaiveBayes => Fitted::NaiveBayes(NaiveBayes::fit(data)),
        ClassifierKind::DecisionTree => Fitted::DecisionTree(DecisionTree::fit(data, &params.tree)),
        ClassifierKind::RandomForest => {
            Fitted::RandomForest(RandomForest::fit(data, &params.forest, params.seed))
        }
    };
    let linked = data.linked_count();
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: params.kind,
        schema: data.schema.clone(),
        seed: params.seed,
        counts: TrainingCounts {
            linked,
            non_linked: data.len() - linked,
        },
        fitted,
    })
}

/// The models of the sub-sampling repetitions, member `r` trained with seed
/// `base_seed + r` (used for both the sub-sample and the learner).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionBundle {
    pub format_version: u32,
    pub base_seed: u64,
    pub members: Vec<TrainedModel>,
}

impl RepetitionBundle {
    pub fn kind(&self) -> ClassifierKind {
        self.members[0].kind
    }

    pub fn schema(&self) -> &Schema {
        &self.members[0].schema
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.members.iter().map(|m| m.seed).collect()
    }

    pub fn member_scores(&self, row: &[Value]) -> Result<Vec<f64>> {
        self.schema().check(row)?;
        Ok(self.members.iter().map(|m| m.score_unchecked(row)).collect())
    }

    pub fn mean_score(&self, row: &[Value]) -> Result<f64> {
        let scores = self.member_scores(row)?;
        Ok(scores.iter().sum::<f64>() / scores.len() as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bundle: RepetitionBundle = read_json(path)?;
        if bundle.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::SchemaVersion {
                found: bundle.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        if bundle.members.is_empty() {
            return Err(Error::Parse(format!("{}: model bundle has no members", path.display())));
        }
        Ok(bundle)
    }
}

pub fn train_repetitions(params: &ClassifierParams, data: &Dataset, base_seed: u64) -> Result<RepetitionBundle> {
    train_repetitions_n(params, data, base_seed, REPETITIONS)
}

pub fn train_repetitions_n(
    params: &ClassifierParams,
    data: &Dataset,
    base_seed: u64,
    repetitions: usize,
) -> Result<RepetitionBundle> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("at least one repetition is required".into()));
    }
    data.require_two_classes()?;
    let members = (0..repetitions as u64)
        .into_par_iter()
        .map(|r| {
            let seed = base_seed.wrapping_add(r);
            let balanced = subsample_balance(data, seed)?;
            train(&params.with_seed(seed), &balanced.data)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RepetitionBundle {
        format_version: MODEL_FORMAT_VERSION,
        base_seed,
        members,
    })
}


#[cfg(test)]
mod tests {
    use super::*;

    fn data(linked: usize, non_linked: usize) -> Dataset {
        let mut d = Dataset::new(Schema::new(vec![AttributeSpec::numeric("x")]));
        for i in 0..linked {
            d.push(vec![Value::Num(i as f64)], true).unwrap();
        }
        for i in 0..non_linked {
            d.push(vec![Value::Num(-(i as f64))], false).unwrap();
        }
        d
    }

    #[test]
    fn balance_keeps_all_links_and_matches_counts() {
        let b = subsample_balance(&data(50, 500), 1).unwrap();
        assert_eq!(b.data.linked_count(), 50);
        assert_eq!(b.data.len(), 100);
        assert!(!b.undersized_majority);
        let again = subsample_balance(&data(50, 500), 1).unwrap();
        assert_eq!(b.data, again.data);
    }

    #[test]
    fn balance_degenerate_cases() {
        let b = subsample_balance(&data(5, 5), 3).unwrap();
        assert_eq!(b.data, data(5, 5));
        let b = subsample_balance(&data(5, 2), 3).unwrap();
        assert_eq!(b.data.len(), 7);
        assert!(b.undersized_majority);
        assert!(subsample_balance(&data(0, 5), 3).is_err());
    }

    #[test]
    fn schema_errors_name_the_attribute() {
        let schema = Schema::new(vec![AttributeSpec::numeric("a4"), AttributeSpec::categorical("a1")]);
        let err = schema.check(&[Value::Num(1.0), Value::Num(2.0)]).unwrap_err();
        assert!(err.to_string().contains("a1"), "{err}");
        assert!(schema.check(&[Value::Missing, Value::Cat(3)]).is_ok());
        assert!(schema.check(&[Value::Num(1.0)]).is_err());
    }

    #[test]
    fn single_class_is_rejected() {
        let params = ClassifierParams::new(ClassifierKind::NaiveBayes);
        assert!(matches!(train(&params, &data(3, 0)), Err(Error::SingleClass)));
    }
}
