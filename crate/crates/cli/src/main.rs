mod output;

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use trace_forge::eval::{project_stats, read_ground_truth, synth_project, Group, SynthParams};
use trace_forge::features::{AttributeSet, CandidateConfig};
use trace_forge::ingest::{
    build_project, read_commit_export, read_issue_export, read_snapshot_records, FileFilterConfig,
    GitRepoSnapshots, IdentityField, IngestInput, NoSnapshots, SnapshotMap, SnapshotSource,
};
use trace_forge::learn::ClassifierKind;
use trace_forge::model::{load_project, save_project, write_json, IssueKind};
use trace_forge::pipeline::{
    augment, batch_path, evaluate, evidence_links, review_batch, train_and_save, EvaluationConfig, Recommender,
    TrainingConfig,
};
use trace_forge::rng::DEFAULT_SEED;
use trace_forge_service::{AppState, ServiceConfig, DEFAULT_PORT};

use output::{render, BatchSummary, Format, Render, SynthSummary};

/// A bad combination of arguments; exits with status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "trace-forge", version, about = "Recover missing trace links between commits and issues")]
struct Cli {
    /// Worker threads; defaults to the number of logical CPUs.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a project archive from a commit export and an issue export.
    Ingest(IngestArgs),
    /// Describe the linking practice of a project.
    Stats(ProjectArg),
    /// Train and store models for one attribute set.
    Train(TrainArgs),
    /// Train on the older part of the history and evaluate both scenarios on the newer part.
    Evaluate(EvaluateArgs),
    /// Recommend issues for a commit.
    Recommend(RecommendArgs),
    /// Add classifier links for commits that have none.
    Augment(AugmentArgs),
    /// Draw a blind review batch for human raters.
    ReviewBatch(ReviewBatchArgs),
    /// Write a synthetic project with known ground truth.
    Synth(SynthArgs),
    /// Serve the review API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ProjectArg {
    /// Project archive directory.
    #[arg(long)]
    project: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Commit export (see `git log` format in the README).
    #[arg(long, alias = "commits")]
    git: PathBuf,
    /// Issue export, a JSON array.
    #[arg(long)]
    issues: PathBuf,
    /// File snapshots as JSON lines of {commit_hash, path, content}.
    #[arg(long, conflicts_with = "repo")]
    snapshots: Option<PathBuf>,
    /// Git repository to read file snapshots from.
    #[arg(long)]
    repo: Option<PathBuf>,
    /// Project key; inferred from the issue keys when omitted.
    #[arg(long)]
    project_key: Option<String>,
    /// Use the commit author instead of the committer as the commit's user.
    #[arg(long)]
    use_author: bool,
    /// Output archive directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct CandidateArgs {
    /// Hours after resolution a commit may still be a candidate.
    #[arg(long, default_value_t = 30.0)]
    epsilon_candidate_hours: f64,
    /// Hours between commit and resolution below which they count as close.
    #[arg(long, default_value_t = 60.0)]
    epsilon_close_hours: f64,
}

impl CandidateArgs {
    fn config(&self) -> CandidateConfig {
        CandidateConfig {
            epsilon_candidate_hours: self.epsilon_candidate_hours,
            epsilon_close_hours: self.epsilon_close_hours,
        }
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Attribute set: all, process, similarity or auto.
    #[arg(long, default_value = "all")]
    set: AttributeSet,
    /// naive-bayes, decision-tree or random-forest.
    #[arg(long, default_value = "random-forest")]
    classifier: ClassifierKind,
    /// Treat human-accepted links as evidence.
    #[arg(long)]
    include_human: bool,
    #[command(flatten)]
    candidates: CandidateArgs,
}

#[derive(Args, Clone)]
struct LearnArgs {
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    #[arg(long, env = "TRACE_FORGE_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Trees per random forest.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Confidence for pessimistic tree pruning.
    #[arg(long, default_value_t = 0.25)]
    prune_confidence: f64,
    /// Restrict to one issue profile (bug or improvement); repeatable.
    #[arg(long = "profile")]
    profiles: Vec<IssueKind>,
}

impl LearnArgs {
    fn profiles(&self) -> Vec<IssueKind> {
        if self.profiles.is_empty() {
            IssueKind::ALL.to_vec()
        } else {
            self.profiles.clone()
        }
    }
}

fn training_config(model: &ModelArgs, learn: &LearnArgs, kind: ClassifierKind) -> Result<TrainingConfig> {
    if learn.repetitions == 0 || learn.trees == 0 {
        return Err(UsageError("--repetitions and --trees must be at least 1".into()).into());
    }
    let mut cfg = TrainingConfig::new(kind);
    cfg.candidates = model.candidates.config();
    cfg.repetitions = learn.repetitions;
    cfg.seed = learn.seed;
    cfg.include_human = model.include_human;
    cfg.classifier.forest.trees = learn.trees;
    cfg.classifier.tree.confidence = learn.prune_confidence;
    Ok(cfg)
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    project: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    learn: LearnArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    project: PathBuf,
    /// Attribute sets to compare, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    sets: Vec<AttributeSet>,
    #[arg(long, default_value = "random-forest")]
    classifier: ClassifierKind,
    #[arg(long)]
    include_human: bool,
    #[command(flatten)]
    candidates: CandidateArgs,
    #[command(flatten)]
    learn: LearnArgs,
    /// Recommendations per commit.
    #[arg(short, long, default_value_t = 3)]
    k: usize,
    /// Score a link must exceed to be added.
    #[arg(long, default_value_t = 0.95)]
    threshold: f64,
    /// Ground-truth links (JSON array of {commit_hash, issue_key}); explicit
    /// links are the truth when omitted.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long)]
    project: PathBuf,
    #[arg(long)]
    commit: String,
    #[arg(short, long, default_value_t = 3)]
    k: usize,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    project: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    threshold: f64,
    /// Report the links without writing them.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct ReviewBatchArgs {
    #[arg(long)]
    project: PathBuf,
    #[arg(long)]
    id: String,
    #[arg(long, env = "TRACE_FORGE_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Replace an existing batch with the same id.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, env = "TRACE_FORGE_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    n_issues: usize,
    #[arg(long, default_value_t = 400)]
    n_commits: usize,
    /// Share of true links whose commit message omits the issue key.
    #[arg(long, default_value_t = 0.3)]
    tag_omission_rate: f64,
    /// How strongly true pairs differ from unrelated ones, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    signal_strength: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    project: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    #[command(flatten)]
    model: ModelArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let usage = e.chain().any(|c| {
        c.is::<UsageError>() || matches!(c.downcast_ref::<trace_forge::Error>(), Some(trace_forge::Error::InvalidArgument(_)))
    });
    if usage {
        1
    } else {
        2
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!(UsageError("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let format = cli.format;
    match cli.command {
        Command::Ingest(a) => emit(&ingest(&a)?, format),
        Command::Stats(a) => emit(&project_stats(&load(&a.project)?), format),
        Command::Train(a) => {
            let store = load(&a.project)?;
            let cfg = training_config(&a.model, &a.learn, a.model.classifier)?;
            let summary = train_and_save(&store, &a.project, a.model.set, &a.learn.profiles(), &cfg)?;
            emit(&summary, format)
        }
        Command::Evaluate(a) => {
            let store = load(&a.project)?;
            let model = ModelArgs {
                set: AttributeSet::All,
                classifier: a.classifier,
                include_human: a.include_human,
                candidates: a.candidates.clone(),
            };
            let ground_truth = match &a.truth {
                Some(p) => Some(read_ground_truth(p)?),
                None => None,
            };
            let cfg = EvaluationConfig {
                training: training_config(&model, &a.learn, a.classifier)?,
                profiles: a.learn.profiles(),
                sets: a.sets.clone(),
                k: a.k,
                threshold: a.threshold,
                ground_truth,
            };
            emit(&evaluate(&store, &cfg)?, format)
        }
        Command::Recommend(a) => {
            if a.k == 0 {
                bail!(UsageError("-k must be at least 1".into()));
            }
            let store = load(&a.project)?;
            let rec = recommender(&a.project, &a.model)?;
            let links = evidence_links(&store, a.model.include_human);
            emit(&rec.recommend(&store, &a.commit, a.k, &links)?, format)
        }
        Command::Augment(a) => {
            let mut store = load(&a.project)?;
            let rec = recommender(&a.project, &a.model)?;
            let report = augment(&mut store, &rec, a.threshold, a.model.include_human, a.dry_run)?;
            if !a.dry_run && report.added > 0 {
                save_project(&store, &a.project)?;
            }
            emit(&report, format)
        }
        Command::ReviewBatch(a) => {
            let store = load(&a.project)?;
            let rec = recommender(&a.project, &a.model)?;
            let batch = review_batch(&store, &rec, &a.id, a.seed, a.model.include_human)?;
            let path = batch_path(&a.project, &a.id);
            if path.exists() && !a.force {
                bail!("batch {} already exists at {}; pass --force to replace it", a.id, path.display());
            }
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            write_json(&path, &batch)?;
            let group_a = batch.entries.iter().filter(|e| e.group == Group::A).count();
            emit(
                &BatchSummary {
                    id: batch.id.clone(),
                    seed: batch.seed,
                    path: path.display().to_string(),
                    entries: batch.entries.len(),
                    group_a,
                    group_b: batch.entries.len() - group_a,
                },
                format,
            )
        }
        Command::Synth(a) => {
            let params = SynthParams {
                n_issues: a.n_issues,
                n_commits: a.n_commits,
                tag_omission_rate: a.tag_omission_rate,
                signal_strength: a.signal_strength,
            };
            let project = synth_project(a.seed, &params)?;
            let files = project.write(&a.out)?;
            emit(
                &SynthSummary {
                    seed: a.seed,
                    issues: project.issues.len(),
                    commits: project.commits.len(),
                    ground_truth_links: project.ground_truth.len(),
                    files,
                },
                format,
            )
        }
        Command::Serve(a) => {
            let config = ServiceConfig {
                set: a.model.set,
                kind: a.model.classifier,
                candidates: a.model.candidates.config(),
                include_human: a.model.include_human,
            };
            let state = AppState::open(&a.project, config)?;
            let addr = SocketAddr::new(a.host, a.port);
            eprintln!("serving {} on http://{addr}", a.project.display());
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(trace_forge_service::serve(state, addr))?;
            Ok(())
        }
    }
}

fn emit<T: Render>(value: &T, format: Format) -> Result<()> {
    print!("{}", render(value, format)?);
    Ok(())
}

fn load(project: &Path) -> Result<trace_forge::model::ProjectStore> {
    load_project(project).with_context(|| format!("loading project archive {}", project.display()))
}

fn recommender(project: &Path, model: &ModelArgs) -> Result<Recommender> {
    Ok(Recommender::load(project, model.set, model.classifier, model.candidates.config())?)
}

fn ingest(a: &IngestArgs) -> Result<trace_forge::ingest::IngestReport> {
    let snapshots: Box<dyn SnapshotSource> = match (&a.snapshots, &a.repo) {
        (Some(path), _) => Box::new(SnapshotMap::from_records(read_snapshot_records(path)?)),
        (None, Some(repo)) => Box::new(GitRepoSnapshots { repo: repo.clone() }),
        (None, None) => Box::new(NoSnapshots),
    };
    let (store, report) = build_project(IngestInput {
        project_key: a.project_key.clone(),
        issues: read_issue_export(&a.issues)?,
        commits: read_commit_export(&a.git)?,
        filter: FileFilterConfig::default(),
        identity_field: if a.use_author { IdentityField::Author } else { IdentityField::Committer },
        snapshots: snapshots.as_ref(),
    })?;
    save_project(&store, &a.out)?;
    Ok(report)
}
