use std::collections::BTreeSet;

use trace_forge::eval::{synth_project, Group, SynthParams};
use trace_forge::features::{AttributeSet, CandidateConfig};
use trace_forge::learn::ClassifierKind;
use trace_forge::model::{save_project, IssueKind, LinkOrigin, ProjectStore, Timestamp, TraceLink};
use trace_forge::pipeline::{
    augment, evaluate, evidence_links, model_path, review_batch, train_and_save, EvaluationConfig, Recommender,
    TrainingConfig,
};

fn project() -> (ProjectStore, BTreeSet<(String, String)>) {
    let params = SynthParams {
        n_issues: 120,
        n_commits: 240,
        ..SynthParams::default()
    };
    let synth = synth_project(11, &params).unwrap();
    (synth.ingest().unwrap().0, synth.truth_pairs())
}

fn quick(kind: ClassifierKind) -> TrainingConfig {
    let mut cfg = TrainingConfig::new(kind);
    cfg.repetitions = 3;
    cfg.classifier.forest.trees = 20;
    cfg
}

#[test]
fn evaluation_is_deterministic_and_covers_every_row() {
    let (store, truth) = project();
    let cfg = EvaluationConfig {
        training: quick(ClassifierKind::RandomForest),
        profiles: IssueKind::ALL.to_vec(),
        sets: vec![AttributeSet::All, AttributeSet::Process, AttributeSet::Similarity, AttributeSet::Auto],
        k: 3,
        threshold: 0.95,
        ground_truth: Some(truth),
    };
    let a = serde_json::to_string(&evaluate(&store, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&evaluate(&store, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    let report = evaluate(&store, &cfg).unwrap();
    assert_eq!(report.rows.len(), 8);
    assert_eq!(report.comparisons.len(), 6);
    for row in &report.rows {
        assert_eq!(row.scenario1.repetitions.len(), 3);
        for m in [&row.scenario1, &row.scenario2] {
            assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.recall));
        }
    }
    let table = report.to_table();
    assert!(table.contains("Scenario 1") && table.contains("similarity"));
}

#[test]
fn recall_grows_with_k_and_shrinks_with_threshold() {
    let (store, _) = project();
    let run = |k, threshold| {
        let cfg = EvaluationConfig {
            training: quick(ClassifierKind::NaiveBayes),
            profiles: vec![IssueKind::Bug],
            sets: vec![AttributeSet::All],
            k,
            threshold,
            ground_truth: None,
        };
        evaluate(&store, &cfg).unwrap().rows.remove(0)
    };
    let mut last = 0.0;
    for k in 1..=5 {
        let r = run(k, 0.95).scenario1.micro.recall;
        assert!(r >= last);
        last = r;
    }
    let mut last = 1.0;
    for t in [0.0, 0.5, 0.8, 0.95, 1.0] {
        let r = run(3, t).scenario2.micro.recall;
        assert!(r <= last);
        last = r;
    }
}

#[test]
fn trained_models_drive_recommendation_augmentation_and_batches() {
    let (mut store, _) = project();
    let dir = tempfile::tempdir().unwrap();
    save_project(&store, dir.path()).unwrap();
    let cfg = quick(ClassifierKind::RandomForest);
    let summary = train_and_save(&store, dir.path(), AttributeSet::All, &IssueKind::ALL, &cfg).unwrap();
    assert_eq!(summary.models.len(), 2);
    for profile in IssueKind::ALL {
        assert!(model_path(dir.path(), profile, AttributeSet::All, ClassifierKind::RandomForest).exists());
    }

    let rec = Recommender::load(dir.path(), AttributeSet::All, ClassifierKind::RandomForest, CandidateConfig::default())
        .unwrap();
    let links = evidence_links(&store, false);
    for hash in store.commits.keys().take(40) {
        let r = rec.recommend(&store, hash, 3, &links).unwrap();
        assert!(r.recommendations.len() <= 3);
        for w in r.recommendations.windows(2) {
            assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].issue_key < w[1].issue_key));
        }
    }
    assert!(rec.recommend(&store, "feedbeef", 3, &links).is_err());

    let before = store.clone();
    let dry = augment(&mut store, &rec, 0.95, false, true).unwrap();
    assert_eq!(store, before);
    assert_eq!(dry.added, 0);
    assert!(!dry.links.is_empty());
    assert!(dry.stats.contains_key("bug"));
    let wet = augment(&mut store, &rec, 0.95, false, false).unwrap();
    assert_eq!(wet.added, dry.links.len());
    assert_eq!(store.pairs_with_origin(LinkOrigin::Classifier).len(), wet.added);
    assert!(augment(&mut store, &rec, 0.95, false, false).unwrap().links.is_empty());

    let batch = review_batch(&before, &rec, "b1", 3, false).unwrap();
    assert_eq!(batch.entries.len(), 20);
    assert_eq!(batch.entries.iter().filter(|e| e.group == Group::A).count(), 14);
    assert_eq!(batch, review_batch(&before, &rec, "b1", 3, false).unwrap());
    assert!(review_batch(&before, &rec, "../x", 3, false).is_err());
}

#[test]
fn missing_model_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let err = Recommender::load(dir.path(), AttributeSet::All, ClassifierKind::NaiveBayes, CandidateConfig::default())
        .unwrap_err();
    assert!(err.to_string().contains("no trained"));
}

#[test]
fn human_acceptances_count_only_when_included() {
    let (mut store, _) = project();
    let unlinked = store
        .commits
        .keys()
        .find(|h| !store.links.iter().any(|l| &l.commit_hash == *h))
        .unwrap()
        .clone();
    let key = store.issues.keys().next().unwrap().clone();
    let at = Timestamp::from_epoch_seconds(0).unwrap();
    store.add_link(TraceLink::human(&unlinked, &key, true, "ann", at)).unwrap();
    assert!(!evidence_links(&store, false).contains(&(unlinked.clone(), key.clone())));
    assert!(evidence_links(&store, true).contains(&(unlinked, key)));
}
