use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::learn::{AttributeSpec, Dataset, Schema, Value};
use crate::model::example::{commit_hash, issue_key, timeline_project};
use crate::model::{FilePath, FileSet, IssueKind, ProjectStore, Timestamp, TraceLink, UserId};
use crate::textsim::CorpusIndex;

const H: i64 = Timestamp::SECONDS_PER_HOUR;

fn at(seconds: i64) -> Timestamp {
    Timestamp::from_epoch_seconds(seconds).unwrap()
}

fn issue(key: &str, created: i64, resolved: i64, assignee: Option<u32>) -> Issue {
    Issue {
        key: key.into(),
        kind: IssueKind::Bug,
        summary: format!("summary of {key}"),
        description: String::new(),
        created: at(created),
        resolved: at(resolved),
        assignee: assignee.map(UserId),
        status: "Closed".into(),
        resolution: "Fixed".into(),
    }
}

fn commit(hash: &str, committed: i64, committer: Option<u32>, files: &[&str]) -> Commit {
    Commit {
        hash: hash.into(),
        message: format!("commit {hash}"),
        committed: at(committed),
        committer: committer.map(UserId),
        files: files.iter().map(|f| FilePath::new(*f)).collect(),
    }
}

fn index_for(store: &ProjectStore) -> CorpusIndex {
    let mut docs: Vec<String> = store.issues.values().map(|i| i.text()).collect();
    docs.extend(store.commits.values().map(|c| c.message.clone()));
    docs.extend(store.snapshots.values().cloned());
    CorpusIndex::build(&docs).unwrap()
}

fn fig4(c: &str, i: &str) -> AttributeVector {
    let store = timeline_project();
    let index = index_for(&store);
    let ctx = FeatureContext::new(&store, &index, CandidateConfig::default()).unwrap();
    ctx.compute(commit_hash(c), issue_key(i)).unwrap()
}

fn fig4_commit(label: &str) -> Commit {
    timeline_project().commits[commit_hash(label)].clone()
}

#[test]
fn timeline_temporal_attributes() {
    let v = fig4("C6", "I3");
    assert_eq!(v.num(Attribute::A4), Some(1.0));
    assert_eq!(v.num(Attribute::A5), Some(2.0));
    assert_eq!(v.num(Attribute::A6), Some(1.0));
}

#[test]
fn timeline_neighbor_attributes() {
    let v = fig4("C2", "I1");
    assert_eq!(v.num(Attribute::A8), Some(1.0));
    assert_eq!(v.num(Attribute::A9), Some(0.5));
    assert!(v.get(Attribute::A11).is_missing());

    let v = fig4("C7", "B1");
    assert_eq!(v.num(Attribute::A11), Some(2.0));
    assert_eq!(v.num(Attribute::A12), Some(2.0 / 3.0));
    assert_eq!(v.num(Attribute::A14), Some(3.0));
    assert!(v.get(Attribute::A8).is_missing());
}

#[test]
fn timeline_overlaps() {
    assert_eq!(overlap(&fig4_commit("C1"), &fig4_commit("C2")), 0.5);
    assert_eq!(overlap(&fig4_commit("C3"), &fig4_commit("C4")), 0.0);
    assert_eq!(overlap(&fig4_commit("C1"), &fig4_commit("C1")), 1.0);
}

#[test]
fn candidate_boundaries() {
    let cfg = CandidateConfig::default();
    let i = issue("P-1", 100 * H, 200 * H, Some(1));
    assert!(!is_candidate(&commit("a", 99 * H, None, &[]), &i, &cfg));
    assert!(is_candidate(&commit("a", 100 * H, None, &[]), &i, &cfg));
    assert!(is_candidate(&commit("a", 150 * H, None, &[]), &i, &cfg));
    assert!(is_candidate(&commit("a", 229 * H, None, &[]), &i, &cfg));
    assert!(is_candidate(&commit("a", 230 * H, None, &[]), &i, &cfg));
    assert!(!is_candidate(&commit("a", 231 * H, None, &[]), &i, &cfg));
}

fn single_pair_store(committed: i64, committer: Option<u32>, assignee: Option<u32>) -> ProjectStore {
    let mut store = ProjectStore::new("P");
    store.issues.insert("P-1".into(), issue("P-1", 0, 100 * H, assignee));
    store.commits.insert("a".into(), commit("a", committed, committer, &[]));
    store
}

fn single_pair(store: &ProjectStore) -> AttributeVector {
    let index = index_for(store);
    FeatureContext::new(store, &index, CandidateConfig::default())
        .unwrap()
        .compute("a", "P-1")
        .unwrap()
}

#[test]
fn stakeholder_attributes() {
    let same = single_pair(&single_pair_store(10 * H, Some(3), Some(3)));
    assert_eq!(same.get(Attribute::A1), Value::Cat(3));
    assert_eq!(same.num(Attribute::A3), Some(1.0));

    let different = single_pair(&single_pair_store(10 * H, Some(3), Some(4)));
    assert_eq!(different.num(Attribute::A3), Some(0.0));

    let unassigned = single_pair(&single_pair_store(10 * H, Some(3), None));
    assert_eq!(unassigned.get(Attribute::A2), Value::Cat(UserId::UNKNOWN.0));
    assert_eq!(unassigned.num(Attribute::A3), Some(0.0));
    assert_eq!(unassigned.num(Attribute::A15), Some(0.0));

    let both_unknown = single_pair(&single_pair_store(10 * H, None, None));
    assert_eq!(both_unknown.num(Attribute::A3), Some(0.0));
}

#[test]
fn closeness_to_resolution() {
    let at_resolution = single_pair(&single_pair_store(100 * H, Some(1), Some(1)));
    assert_eq!(at_resolution.num(Attribute::A5), Some(0.0));
    assert_eq!(at_resolution.num(Attribute::A6), Some(1.0));
    assert_eq!(at_resolution.num(Attribute::A7), Some(1.0));

    let late = single_pair(&single_pair_store(159 * H, Some(1), Some(1)));
    assert_eq!(late.num(Attribute::A5), Some(-59.0));
    assert_eq!(late.num(Attribute::A6), Some(0.0));
    assert_eq!(late.num(Attribute::A7), Some(1.0));
}

#[test]
fn workload_of_a_lone_issue() {
    let v = single_pair(&single_pair_store(10 * H, Some(1), Some(1)));
    assert_eq!(v.num(Attribute::A14), Some(1.0));
    assert!(v.num(Attribute::A15).unwrap() >= 1.0);
    assert_eq!(v.num(Attribute::A16), Some(0.0));
    for a in [Attribute::A8, Attribute::A9, Attribute::A10, Attribute::A11, Attribute::A12, Attribute::A13] {
        assert!(v.get(a).is_missing(), "{a}");
    }
    assert_eq!(v.num(Attribute::A18), Some(0.0));
}

#[test]
fn message_equal_to_issue_text_is_fully_similar() {
    let mut store = single_pair_store(10 * H, Some(1), Some(1));
    let text = store.issues["P-1"].text();
    store.commits.get_mut("a").unwrap().message = text;
    let v = single_pair(&store);
    assert!((v.num(Attribute::A17).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn best_file_snapshot_wins() {
    let mut store = ProjectStore::new("P");
    let mut i = issue("P-1", 0, 100 * H, Some(1));
    i.summary = "parser cache invalidation".into();
    i.description = "the parser cache keeps stale entries after reload".into();
    store.issues.insert(i.key.clone(), i);
    let weak = "unrelated logging helper mentions cache once";
    let strong = "class ParserCache { void invalidateStaleEntries() { reload(); } }";
    let mut files = FileSet::new();
    files.insert(FilePath::with_content("Log.java", "w"));
    files.insert(FilePath::with_content("ParserCache.java", "s"));
    files.insert(FilePath::with_content("Gone.java", "missing"));
    let mut c = commit("a", 10 * H, Some(1), &[]);
    c.files = files;
    store.commits.insert("a".into(), c);
    store.snapshots.insert("w".into(), weak.into());
    store.snapshots.insert("s".into(), strong.into());

    let index = index_for(&store);
    let issue_text = store.issues["P-1"].text();
    let sims = [index.sim(weak, &issue_text), index.sim(strong, &issue_text)];
    assert!(sims[0] < sims[1]);
    let ctx = FeatureContext::new(&store, &index, CandidateConfig::default()).unwrap();
    assert_eq!(ctx.missing_snapshots(), 1);
    let v = ctx.compute("a", "P-1").unwrap();
    assert!((v.num(Attribute::A18).unwrap() - sims[1]).abs() < 1e-12);
}

#[test]
fn similarity_set_members() {
    assert_eq!(
        AttributeSet::Similarity.fixed().unwrap(),
        vec![Attribute::A6, Attribute::A17, Attribute::A18]
    );
    assert_eq!(AttributeSet::Process.fixed().unwrap().len(), 16);
    assert!(AttributeSet::Process.fixed().unwrap().iter().all(|a| a.index() < 16));
    assert_eq!(AttributeSet::All.fixed().unwrap(), Attribute::ALL.to_vec());
    assert!(AttributeSet::Auto.fixed().is_none());
    assert_eq!("sim".parse::<AttributeSet>().unwrap(), AttributeSet::Similarity);
}

#[test]
fn attribute_names_round_trip() {
    for a in Attribute::ALL {
        assert_eq!(a.name().parse::<Attribute>().unwrap(), a);
    }
    assert!("a19".parse::<Attribute>().is_err());
    assert!("a0".parse::<Attribute>().is_err());
}

#[test]
fn csv_layout() {
    let store = timeline_project();
    let index = index_for(&store);
    let ctx = FeatureContext::new(&store, &index, CandidateConfig::default()).unwrap();
    let pairs: Vec<CandidatePair> = generate_candidates(store.commits.values(), store.issues.values(), ctx.config())
        .into_iter()
        .map(|p| p.labelled(&store.pairs_with_origin(crate::model::LinkOrigin::ExplicitTag)))
        .collect();
    let vectors = ctx.compute_all(&pairs).unwrap();
    let mut out = Vec::new();
    write_csv(&mut out, &pairs, &vectors).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 21);
    assert_eq!(header[0], "hash");
    assert_eq!(header[2], "a1");
    assert_eq!(header[19], "a18");
    assert_eq!(header[20], "label");
    let c2_i1 = lines.find(|l| l.starts_with("c2,FIG-1,")).unwrap();
    let cells: Vec<&str> = c2_i1.split(',').collect();
    assert_eq!(cells[2 + 8], "0.5");
    // nothing linked to FIG-1 after C2
    assert_eq!(cells[2 + 10], "");
    assert_eq!(cells[20], "NonLinked");
    assert!(text.contains("c1,FIG-1,") && text.lines().any(|l| l.starts_with("c1,FIG-1,") && l.ends_with(",Linked")));
}

#[test]
fn auto_selection_drops_a_duplicate_and_noise() {
    use rand::Rng as _;
    let mut r = crate::rng::seeded(11);
    let schema = Schema::new(
        ["signal", "copy", "n1", "n2", "n3"]
            .into_iter()
            .map(AttributeSpec::numeric)
            .collect(),
    );
    let mut d = Dataset::new(schema);
    for _ in 0..300 {
        let label = r.random_bool(0.5);
        let signal = if label { r.random_range(0.4..1.0) } else { r.random_range(0.0..0.6) };
        let row = vec![
            Value::Num(signal),
            Value::Num(signal),
            Value::Num(r.random::<f64>()),
            Value::Num(r.random::<f64>()),
            Value::Num(r.random::<f64>()),
        ];
        d.push(row, label).unwrap();
    }
    assert_eq!(crate::learn::cfs::select(&d).unwrap(), vec![0]);
}

fn arb_store() -> impl Strategy<Value = ProjectStore> {
    let issues = prop::collection::vec((0i64..400, 0i64..200, prop::option::of(0u32..4)), 1..20);
    let commits = prop::collection::vec(
        (0i64..700, prop::option::of(0u32..4), prop::collection::btree_set(0u8..6, 0..4)),
        1..40,
    );
    let links = prop::collection::vec((0usize..40, 0usize..20), 0..15);
    (issues, commits, links).prop_map(|(issues, commits, links)| {
        let mut store = ProjectStore::new("P");
        for (n, (created, dur, assignee)) in issues.iter().enumerate() {
            let key = format!("P-{}", n + 1);
            store.issues.insert(key.clone(), issue(&key, created * H, (created + dur) * H, *assignee));
        }
        for (n, (t, committer, files)) in commits.iter().enumerate() {
            let hash = format!("h{n:02}");
            let names: Vec<String> = files.iter().map(|f| format!("F{f}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            store.commits.insert(hash.clone(), commit(&hash, t * H + 1800, *committer, &refs));
        }
        let hashes: Vec<String> = store.commits.keys().cloned().collect();
        let keys: Vec<String> = store.issues.keys().cloned().collect();
        for (c, i) in links {
            if c < hashes.len() && i < keys.len() {
                let _ = store.add_link(TraceLink::explicit(hashes[c].clone(), keys[i].clone()));
            }
        }
        store
    })
}

proptest! {
    #[test]
    fn candidate_generation_matches_cross_product(store in arb_store()) {
        let cfg = CandidateConfig::default();
        let fast = generate_candidates(store.commits.values(), store.issues.values(), &cfg);
        let slow = brute_force_candidates(store.commits.values(), store.issues.values(), &cfg);
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn attribute_invariants(store in arb_store()) {
        let cfg = CandidateConfig::default();
        let index = index_for(&store);
        let ctx = FeatureContext::new(&store, &index, cfg).unwrap();
        let pairs = generate_candidates(store.commits.values(), store.issues.values(), &cfg);
        let vectors = ctx.compute_all(&pairs).unwrap();
        for v in &vectors {
            let n = |a| v.num(a).unwrap();
            prop_assert!(n(Attribute::A4) >= 0.0);
            prop_assert!(n(Attribute::A5) >= -cfg.epsilon_candidate_hours);
            if n(Attribute::A6) == 1.0 {
                prop_assert!(n(Attribute::A4) >= 0.0 && n(Attribute::A5) >= 0.0);
            }
            prop_assert!(n(Attribute::A3) == 0.0 || n(Attribute::A3) == 1.0);
            prop_assert_eq!(n(Attribute::A3) == 1.0, v.get(Attribute::A1) == v.get(Attribute::A2) && v.get(Attribute::A1) != Value::Cat(UserId::UNKNOWN.0));
            for a in [Attribute::A9, Attribute::A12, Attribute::A17, Attribute::A18] {
                if let Some(x) = v.num(a) {
                    prop_assert!((0.0..=1.0).contains(&x));
                }
            }
            let prev: BTreeSet<bool> = [Attribute::A8, Attribute::A9, Attribute::A10].iter().map(|a| v.get(*a).is_missing()).collect();
            let next: BTreeSet<bool> = [Attribute::A11, Attribute::A12, Attribute::A13].iter().map(|a| v.get(*a).is_missing()).collect();
            prop_assert_eq!(prev.len(), 1);
            prop_assert_eq!(next.len(), 1);
        }
    }

    #[test]
    fn overlap_is_symmetric_and_bounded(
        a in prop::collection::btree_set(0u8..8, 0..6),
        b in prop::collection::btree_set(0u8..8, 0..6),
    ) {
        let name = |s: &BTreeSet<u8>| s.iter().map(|f| format!("F{f}")).collect::<Vec<_>>();
        let (na, nb) = (name(&a), name(&b));
        let ca = commit("a", 0, None, &na.iter().map(String::as_str).collect::<Vec<_>>());
        let cb = commit("b", 0, None, &nb.iter().map(String::as_str).collect::<Vec<_>>());
        let o = overlap(&ca, &cb);
        prop_assert_eq!(o, overlap(&cb, &ca));
        prop_assert!((0.0..=1.0).contains(&o));
        if !a.is_empty() {
            prop_assert_eq!(overlap(&ca, &ca), 1.0);
        }
    }
}
