//! Evaluation: temporal splits, the two usage scenarios, statistics, blind
//! review batches and synthetic projects.

pub mod analysis;
pub mod metrics;
pub mod report;
pub mod review;
pub mod scenario;
pub mod split;
pub mod stats;
pub mod synth;

pub use analysis::{project_stats, ProjectStats};
pub use metrics::{fbeta, Counts, Metrics, MetricsReport};
pub use report::{EvaluationReport, EvaluationRow, SetComparison};
pub use review::{augmentation_stats, build_review_batch, AugmentationStats, BatchEntry, Group, ReviewBatch};
pub use scenario::{
    evaluate_scenario1, evaluate_scenario2, ScoredPairs, Truth, TruthMode, DEFAULT_K, DEFAULT_THRESHOLD,
};
pub use split::{split_profile, split_time, ProfileSplit};
pub use stats::{fleiss_kappa, mann_whitney_u, Kappa, MannWhitney};
pub use synth::{read_ground_truth, synth_project, GroundTruthLink, SynthFiles, SynthParams, SynthProject};
