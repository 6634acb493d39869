//! Rendering of command results as JSON, aligned tables or CSV.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;

use trace_forge::eval::{EvaluationReport, ProjectStats, SynthFiles};
use trace_forge::ingest::IngestReport;
use trace_forge::pipeline::{AugmentReport, Recommendation, TrainSummary};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Csv,
}

pub trait Render: Serialize {
    fn table(&self) -> String;

    /// Header and records, when the result is tabular.
    fn csv(&self) -> Option<(Vec<&'static str>, Vec<Vec<String>>)> {
        None
    }
}

pub fn render<T: Render>(value: &T, format: Format) -> anyhow::Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(value)? + "\n"),
        Format::Table => Ok(value.table()),
        Format::Csv => {
            let (header, records) = value
                .csv()
                .ok_or_else(|| UsageError("csv output is not available for this command".into()))?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header)?;
            for r in records {
                w.write_record(&r)?;
            }
            Ok(String::from_utf8(w.into_inner()?)?)
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

impl Render for EvaluationReport {
    fn table(&self) -> String {
        self.to_table()
    }

    fn csv(&self) -> Option<(Vec<&'static str>, Vec<Vec<String>>)> {
        let header = vec![
            "profile", "set", "classifier", "test_pairs", "s1_precision", "s1_recall", "s1_f2", "s2_precision",
            "s2_recall", "s2_f05", "s2_precision_undefined",
        ];
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.profile.clone(),
                    r.set.clone(),
                    r.classifier.clone(),
                    r.test_pairs.to_string(),
                    num(r.scenario1.precision),
                    num(r.scenario1.recall),
                    num(r.scenario1.f),
                    num(r.scenario2.precision),
                    num(r.scenario2.recall),
                    num(r.scenario2.f),
                    r.scenario2.precision_undefined.to_string(),
                ]
            })
            .collect();
        Some((header, rows))
    }
}

impl Render for Recommendation {
    fn table(&self) -> String {
        let mut out = format!("{}  ({} {})\n", self.commit_hash, self.model.kind.as_str(), self.model.set.as_str());
        if self.recommendations.is_empty() {
            out.push_str("no candidate issues\n");
        }
        for (i, r) in self.recommendations.iter().enumerate() {
            let _ = writeln!(out, "{:>2}  {:<16} {:.4}", i + 1, r.issue_key, r.score);
        }
        out
    }

    fn csv(&self) -> Option<(Vec<&'static str>, Vec<Vec<String>>)> {
        let rows = self
            .recommendations
            .iter()
            .enumerate()
            .map(|(i, r)| vec![(i + 1).to_string(), r.issue_key.clone(), num(r.score)])
            .collect();
        Some((vec!["rank", "issue_key", "score"], rows))
    }
}

impl Render for AugmentReport {
    fn table(&self) -> String {
        let mut out = String::new();
        let verb = if self.dry_run { "would add" } else { "added" };
        let n = if self.dry_run { self.links.len() } else { self.added };
        let _ = writeln!(out, "{}: {verb} {n} links with score > {}", self.project, self.threshold);
        for l in &self.links {
            let _ = writeln!(out, "{:<42} {:<16} {:<12} {:.4}", l.commit_hash, l.issue_key, l.profile.as_str(), l.score);
        }
        for (profile, s) in &self.stats {
            let _ = writeln!(
                out,
                "{profile}: {} unlinked commits, {} classified links, {:.2} per commit",
                s.unlinked_commits, s.classified_links, s.mean_links_per_commit
            );
        }
        out
    }

    fn csv(&self) -> Option<(Vec<&'static str>, Vec<Vec<String>>)> {
        let rows = self
            .links
            .iter()
            .map(|l| vec![l.commit_hash.clone(), l.issue_key.clone(), l.profile.as_str().to_string(), num(l.score)])
            .collect();
        Some((vec!["commit_hash", "issue_key", "profile", "score"], rows))
    }
}

impl Render for TrainSummary {
    fn table(&self) -> String {
        let mut out = format!("{}: split at {}\n", self.project, self.t_split);
        for m in &self.models {
            let _ = writeln!(
                out,
                "{:<12} {:<11} {:<14} {:>6} pairs {:>5} linked  {}",
                m.profile,
                m.set,
                m.classifier,
                m.train_pairs,
                m.train_linked,
                m.attributes.join(",")
            );
        }
        out
    }

    fn csv(&self) -> Option<(Vec<&'static str>, Vec<Vec<String>>)> {
        let rows = self
            .models
            .iter()
            .map(|m| {
                vec![
                    m.profile.clone(),
                    m.set.clone(),
                    m.classifier.clone(),
                    m.train_pairs.to_string(),
                    m.train_linked.to_string(),
                    m.attributes.join(" "),
                    m.path.clone(),
                ]
            })
            .collect();
        Some((vec!["profile", "set", "classifier", "train_pairs", "train_linked", "attributes", "path"], rows))
    }
}

impl Render for IngestReport {
    fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "issues imported      {}", self.issues_imported);
        for (reason, n) in &self.issues_dropped {
            let _ = writeln!(out, "  dropped ({reason}) {n}");
        }
        let _ = writeln!(out, "commits imported     {}", self.commits_imported);
        let _ = writeln!(out, "  without files      {}", self.commits_without_files);
        let _ = writeln!(out, "explicit links       {}", self.explicit_links);
        let _ = writeln!(out, "identities           {}", self.identities);
        let _ = writeln!(out, "missing snapshots    {}", self.missing_snapshots);
        out
    }
}

impl Render for ProjectStats {
    fn table(&self) -> String {
        let mut out = format!("{}\n\n", self.project_key);
        let _ = writeln!(out, "{:<12} {:>7} {:>7} {:>7} {:>7}", "issues", "total", "one", "several", "none");
        for (kind, l) in &self.issues_by_kind {
            let _ = writeln!(
                out,
                "{kind:<12} {:>7} {:>7} {:>7} {:>7}",
                l.issues, l.one_commit, l.several_commits, l.no_commit
            );
        }
        let c = &self.commit_linkage;
        let _ = writeln!(
            out,
            "\ncommits {}: one bug {}, one improvement {}, several {}, none {}",
            c.commits, c.one_bug, c.one_improvement, c.several_issues, c.no_issue
        );
        for (origin, n) in &self.links_by_origin {
            let _ = writeln!(out, "links {origin}: {n}");
        }
        let t = &self.temporal;
        let _ = writeln!(
            out,
            "linked commits before creation {}, during {}, after resolution {}",
            t.before_created, t.during, t.after_resolved
        );
        out
    }
}

#[derive(Debug, Serialize)]
pub struct SynthSummary {
    pub seed: u64,
    pub issues: usize,
    pub commits: usize,
    pub ground_truth_links: usize,
    pub files: SynthFiles,
}

impl Render for SynthSummary {
    fn table(&self) -> String {
        format!(
            "seed {}: {} issues, {} commits, {} true links\n{}\n{}\n{}\n{}\n",
            self.seed,
            self.issues,
            self.commits,
            self.ground_truth_links,
            self.files.issues.display(),
            self.files.commits.display(),
            self.files.snapshots.display(),
            self.files.ground_truth.display()
        )
    }
}

#[derive(Debug, Serialize)]
pub struct BatchSummary {
    pub id: String,
    pub seed: u64,
    pub path: String,
    pub entries: usize,
    pub group_a: usize,
    pub group_b: usize,
}

impl Render for BatchSummary {
    fn table(&self) -> String {
        format!(
            "batch {} (seed {}): {} entries, {} top-ranked, {} not suggested\n{}\n",
            self.id, self.seed, self.entries, self.group_a, self.group_b, self.path
        )
    }
}
