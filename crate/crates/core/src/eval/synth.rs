//! Desk-scale synthetic projects with a known ground truth.
//!
//! Developers, issues and commits are generated on a 2,400 hour timeline.
//! Every issue has six topic words and a few component files. Most commits
//! implement one issue: they fall inside its lifecycle (some shortly after
//! resolution), touch its component files and, depending on
//! `signal_strength`, are made by its assignee, mention its topic words and
//! leave them in the stored files. The remaining commits are unrelated noise.
//! A commit message starts with `KEY: ` unless its link was withheld.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::ingest::{
    build_project, content_ref, write_commit_export, FileFilterConfig, IdentityField, IngestInput, IngestReport, RawCommitRecord,
    RawIssueRecord, SnapshotMap, SnapshotRecord,
};
use crate::model::{read_json, write_json, write_jsonl, ProjectStore, Timestamp};
use crate::rng::{self, Rng};
use crate::textsim::is_stop_word;
use crate::{Error, Result};

pub const SYNTH_PROJECT_KEY: &str = "SYN";
pub const SYNTH_EPOCH: i64 = 1_420_070_400;
const TIMELINE_HOURS: f64 = 2400.0;
const DEVELOPERS: usize = 20;
const FILES: usize = 120;
const TOPIC_WORDS: usize = 6;
const NOISE_SHARE: f64 = 0.1;
const LATE_SHARE: f64 = 0.15;
const LATE_MAX_HOURS: f64 = 20.0;
const MIN_IMPROVEMENTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_issues: usize,
    pub n_commits: usize,
    pub tag_omission_rate: f64,
    pub signal_strength: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_issues: 200,
            n_commits: 400,
            tag_omission_rate: 0.3,
            signal_strength: 1.0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_issues == 0 || self.n_commits == 0 {
            return Err(Error::InvalidArgument("issue and commit counts must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.tag_omission_rate) {
            return Err(Error::InvalidArgument("tag omission rate must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return Err(Error::InvalidArgument("signal strength must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundTruthLink {
    pub commit_hash: String,
    pub issue_key: String,
    /// The commit message carries no tag for this link.
    pub withheld: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthFiles {
    pub issues: PathBuf,
    pub commits: PathBuf,
    pub snapshots: PathBuf,
    pub ground_truth: PathBuf,
}

impl SynthFiles {
    pub fn in_dir(dir: &Path) -> Self {
        SynthFiles {
            issues: dir.join("issues.json"),
            commits: dir.join("commits.log"),
            snapshots: dir.join("snapshots.jsonl"),
            ground_truth: dir.join("ground_truth.json"),
        }
    }
}

/// Reads a ground-truth file written by [`SynthProject::write`] as pairs.
pub fn read_ground_truth(path: &Path) -> Result<BTreeSet<(String, String)>> {
    let links: Vec<GroundTruthLink> = read_json(path)?;
    Ok(links.into_iter().map(|l| (l.commit_hash, l.issue_key)).collect())
}

/// Raw exports plus the true links behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthProject {
    pub issues: Vec<RawIssueRecord>,
    pub commits: Vec<RawCommitRecord>,
    pub snapshots: Vec<SnapshotRecord>,
    pub ground_truth: Vec<GroundTruthLink>,
}

impl SynthProject {
    pub fn truth_pairs(&self) -> BTreeSet<(String, String)> {
        self.ground_truth
            .iter()
            .map(|l| (l.commit_hash.clone(), l.issue_key.clone()))
            .collect()
    }

    /// Writes `issues.json`, `commits.log`, `snapshots.jsonl` and
    /// `ground_truth.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<SynthFiles> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = SynthFiles::in_dir(dir);
        write_json(&files.issues, &self.issues)?;
        std::fs::write(&files.commits, write_commit_export(&self.commits)).map_err(|e| Error::io(&files.commits, e))?;
        write_jsonl(&files.snapshots, &self.snapshots)?;
        write_json(&files.ground_truth, &self.ground_truth)?;
        Ok(files)
    }

    /// Runs the regular ingest chain over the exports.
    pub fn ingest(&self) -> Result<(ProjectStore, IngestReport)> {
        let snapshots = SnapshotMap::from_records(self.snapshots.iter().cloned());
        build_project(IngestInput {
            project_key: Some(SYNTH_PROJECT_KEY.into()),
            issues: self.issues.clone(),
            commits: self.commits.clone(),
            filter: FileFilterConfig::default(),
            identity_field: IdentityField::default(),
            snapshots: &snapshots,
        })
    }
}

fn pseudo_words(r: &mut Rng, n: usize) -> Vec<String> {
    const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "pl"];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = r.random_range(2..=3);
        let w: String = (0..syllables)
            .map(|_| format!("{}{}", ONSETS.choose(r).unwrap(), VOWELS.choose(r).unwrap()))
            .collect();
        if !is_stop_word(&w) && seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn capitalised(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
        .unwrap_or_default()
}

fn iso(seconds: i64) -> String {
    DateTime::from_timestamp(seconds, 0)
        .expect("synthetic timestamps are in range")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn hours(h: f64) -> i64 {
    (h * Timestamp::SECONDS_PER_HOUR as f64).round() as i64
}

struct Developer {
    name: String,
    email: String,
    login: String,
}

struct SynthIssue {
    key: String,
    created: i64,
    resolved: i64,
    assignee: usize,
    topic: Vec<String>,
    components: Vec<usize>,
}

struct SynthFile {
    path: String,
    words: Vec<String>,
}

pub fn synth_project(seed: u64, params: &SynthParams) -> Result<SynthProject> {
    params.validate()?;
    let mut r = rng::seeded(seed);
    let s = params.signal_strength;
    let vocabulary = pseudo_words(&mut r, 4000);
    let (generic, vocabulary) = vocabulary.split_at(60);
    let mut topic_pool: Vec<&String> = vocabulary.iter().collect();
    topic_pool.shuffle(&mut r);
    let mut topic_pool = topic_pool.into_iter();

    let developers: Vec<Developer> = (0..DEVELOPERS)
        .map(|d| {
            let first = capitalised(&vocabulary[vocabulary.len() - 1 - 2 * d]);
            let last = capitalised(&vocabulary[vocabulary.len() - 2 - 2 * d]);
            let local = format!("{}.{}", first.to_lowercase(), last.to_lowercase());
            // some tracker logins differ from the VCS address
            let login = if d % 3 == 0 { format!("{}{}", &local[..3], d) } else { local.clone() };
            Developer {
                name: format!("{first} {last}"),
                email: format!("{local}@example.org"),
                login,
            }
        })
        .collect();

    let files: Vec<SynthFile> = (0..FILES)
        .map(|f| {
            let words: Vec<String> = (0..10).map(|_| topic_pool.next().expect("vocabulary").clone()).collect();
            SynthFile {
                path: format!("src/main/java/org/syn/{}{}{f}.java", capitalised(&words[0]), capitalised(&words[1])),
                words,
            }
        })
        .collect();

    let mut kinds: Vec<bool> = (0..params.n_issues).map(|_| r.random_bool(0.5)).collect();
    let needed = MIN_IMPROVEMENTS.min(params.n_issues);
    let mut have = kinds.iter().filter(|k| **k).count();
    for k in kinds.iter_mut() {
        if have >= needed {
            break;
        }
        if !*k {
            *k = true;
            have += 1;
        }
    }
    let mut issues: Vec<SynthIssue> = (0..params.n_issues)
        .map(|_| {
            let created = SYNTH_EPOCH + hours(r.random_range(0.0..TIMELINE_HOURS - 150.0));
            let resolved = created + hours(r.random_range(24.0..120.0));
            let topic = (0..TOPIC_WORDS)
                .map(|_| topic_pool.next().expect("vocabulary").clone())
                .collect();
            let n_comp = r.random_range(2..=4);
            let components = rand::seq::index::sample(&mut r, FILES, n_comp).into_vec();
            SynthIssue {
                key: String::new(),
                created,
                resolved,
                assignee: r.random_range(0..DEVELOPERS),
                topic,
                components,
            }
        })
        .collect();
    issues.sort_by_key(|i| i.created);
    for (n, i) in issues.iter_mut().enumerate() {
        i.key = format!("{SYNTH_PROJECT_KEY}-{}", n + 1);
    }

    let filler = |r: &mut Rng, n: usize| -> Vec<String> { (0..n).map(|_| generic.choose(r).unwrap().clone()).collect() };

    let raw_issues: Vec<RawIssueRecord> = issues
        .iter()
        .zip(&kinds)
        .map(|(i, &improvement)| {
            let dev = &developers[i.assignee];
            let mut summary = i.topic[..3].to_vec();
            summary.extend(filler(&mut r, 2));
            let mut description = i.topic.clone();
            description.extend(filler(&mut r, 8));
            description.shuffle(&mut r);
            RawIssueRecord {
                key: i.key.clone(),
                raw_type: if improvement { "Improvement" } else { "Bug" }.into(),
                status: Some("Closed".into()),
                resolution: Some("Fixed".into()),
                summary: Some(capitalised(&summary.join(" "))),
                description: Some(description.join(" ") + "."),
                created: Some(iso(i.created)),
                resolved: Some(iso(i.resolved)),
                assignee_name: Some(dev.name.clone()),
                assignee_login: Some(dev.login.clone()),
            }
        })
        .collect();

    let mut commits = Vec::with_capacity(params.n_commits);
    let mut snapshots = Vec::new();
    let mut truth: Vec<(usize, usize)> = Vec::new();
    for c in 0..params.n_commits {
        let hash: String = content_ref(&format!("synth-{seed}-{c}"))[..40].to_string();
        let noise = r.random_bool(NOISE_SHARE);
        let (t, dev, message, paths, topic): (i64, usize, Vec<String>, Vec<usize>, Vec<String>) = if noise {
            let t = SYNTH_EPOCH + hours(r.random_range(0.0..TIMELINE_HOURS));
            let n_files = r.random_range(1..=3);
            let paths = rand::seq::index::sample(&mut r, FILES, n_files).into_vec();
            (t, r.random_range(0..DEVELOPERS), filler(&mut r, 6), paths, Vec::new())
        } else {
            let ii = r.random_range(0..issues.len());
            let issue = &issues[ii];
            let t = if r.random_bool(LATE_SHARE) {
                issue.resolved + hours(r.random_range(0.0..LATE_MAX_HOURS))
            } else {
                r.random_range(issue.created..=issue.resolved)
            };
            let dev = if r.random_bool(0.5 + 0.45 * s) {
                issue.assignee
            } else {
                r.random_range(0..DEVELOPERS)
            };
            let n_topic = (s * 4.0).round() as usize;
            let mut words: Vec<String> = issue.topic.choose_multiple(&mut r, n_topic).cloned().collect();
            words.extend(filler(&mut r, 6 - n_topic.min(4)));
            words.shuffle(&mut r);
            let n_files = r.random_range(1..=issue.components.len().min(3));
            let paths: Vec<usize> = issue.components.choose_multiple(&mut r, n_files).copied().collect();
            let n_file_topic = (s * TOPIC_WORDS as f64).round() as usize;
            let topic = issue.topic[..n_file_topic].to_vec();
            truth.push((c, ii));
            (t, dev, words, paths, topic)
        };
        for &f in &paths {
            let file = &files[f];
            let mut body = format!("package org.syn;\n\n// {}\nclass {} {{\n", file.words.join(" "), capitalised(&file.words[0]));
            for w in &topic {
                body.push_str(&format!("    void {w}() {{}}\n"));
            }
            body.push_str("}\n");
            snapshots.push(SnapshotRecord {
                hash: hash.clone(),
                path: file.path.clone(),
                content: body,
            });
        }
        let dev = &developers[dev];
        commits.push(RawCommitRecord {
            hash,
            author_name: dev.name.clone(),
            author_email: dev.email.clone(),
            committer_name: dev.name.clone(),
            committer_email: dev.email.clone(),
            committed: iso(t),
            message: capitalised(&message.join(" ")),
            changed_paths: paths.iter().map(|&f| files[f].path.clone()).collect(),
        });
    }

    let withheld_count = (params.tag_omission_rate * truth.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.shuffle(&mut r);
    let withheld: BTreeSet<usize> = order[..withheld_count].iter().copied().collect();
    let mut ground_truth = Vec::with_capacity(truth.len());
    for (n, &(c, ii)) in truth.iter().enumerate() {
        let hidden = withheld.contains(&n);
        if !hidden {
            let m = &mut commits[c].message;
            *m = format!("{}: {m}", issues[ii].key);
        }
        ground_truth.push(GroundTruthLink {
            commit_hash: commits[c].hash.clone(),
            issue_key: issues[ii].key.clone(),
            withheld: hidden,
        });
    }
    ground_truth.sort();

    Ok(SynthProject {
        issues: raw_issues,
        commits,
        snapshots,
        ground_truth,
    })
}
