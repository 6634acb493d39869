//! Evaluation reports as JSON-ready structures and aligned text tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use super::scenario::TruthMode;
use super::stats::MannWhitney;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub profile: String,
    pub set: String,
    pub classifier: String,
    pub attributes: Vec<String>,
    pub train_pairs: usize,
    pub train_linked: usize,
    pub test_pairs: usize,
    pub scenario1: MetricsReport,
    pub scenario2: MetricsReport,
}

/// Per-repetition Scenario 1 F2 of one set against another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetComparison {
    pub profile: String,
    pub set: String,
    pub against: String,
    pub test: MannWhitney,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub project: String,
    pub seed: u64,
    pub repetitions: usize,
    pub k: usize,
    pub threshold: f64,
    pub truth: TruthMode,
    pub t_split: i64,
    pub rows: Vec<EvaluationRow>,
    pub comparisons: Vec<SetComparison>,
}

impl EvaluationReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "project {}  truth {:?}  seed {}  repetitions {}",
            self.project, self.truth, self.seed, self.repetitions
        );
        for (title, pick) in [
            (format!("Scenario 1: top-{} recommendation (F2)", self.k), 1),
            (format!("Scenario 2: augmentation at score > {} (F0.5)", self.threshold), 2),
        ] {
            let _ = writeln!(out, "\n{title}");
            let _ = writeln!(
                out,
                "{:<12} {:<11} {:<14} {:>6} {:>6} {:>6}",
                "profile", "set", "classifier", "P", "R", "F"
            );
            for row in &self.rows {
                let m = if pick == 1 { &row.scenario1 } else { &row.scenario2 };
                let flag = if m.precision_undefined { "*" } else { "" };
                let _ = writeln!(
                    out,
                    "{:<12} {:<11} {:<14} {:>6.2} {:>6.2} {:>6.2}{flag}",
                    row.profile, row.set, row.classifier, m.precision, m.recall, m.f
                );
            }
        }
        if !self.comparisons.is_empty() {
            let _ = writeln!(out, "\nMann-Whitney U on Scenario 1 F2");
            for c in &self.comparisons {
                let _ = writeln!(
                    out,
                    "{:<12} {} vs {}: U = {}, p = {:.4}",
                    c.profile, c.set, c.against, c.test.u, c.test.p
                );
            }
        }
        out
    }
}
