//! C4.5-style decision tree.
//!
//! Splits maximise gain ratio among attributes whose information gain is at
//! least the average gain (numeric gains carry the MDL threshold penalty).
//! Numeric attributes split binary at a midpoint, categorical ones multiway
//! on the categories present at the node. An instance with a missing value is
//! sent down every branch with weight proportional to the branch's share of
//! known training weight, both while growing and while predicting.
//! Pruning replaces a subtree by a leaf whenever the leaf's pessimistic error
//! estimate is not worse than the subtree's.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{AttributeKind, Dataset, Value};
use crate::rng::Rng;
use crate::{Error, Result};

const EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub prune: bool,
    /// Upper confidence limit for the pessimistic error estimate.
    pub confidence: f64,
    /// Minimum weight in at least two branches of a split.
    pub min_leaf: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            prune: true,
            confidence: 0.25,
            min_leaf: 2.0,
        }
    }
}

impl TreeParams {
    pub fn unpruned(min_leaf: f64) -> Self {
        TreeParams {
            prune: false,
            confidence: 0.25,
            min_leaf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "pruning confidence {} outside (0, 0.5)",
                self.confidence
            )));
        }
        if !(self.min_leaf > 0.0) {
            return Err(Error::InvalidArgument("min_leaf must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Test {
    /// Branch 0 takes `x <= threshold`, branch 1 the rest.
    Threshold(f64),
    /// One branch per listed category.
    Categories(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Training weight per class, index 1 is Linked.
        dist: [f64; 2],
    },
    Split {
        attr: usize,
        test: Test,
        dist: [f64; 2],
        /// Share of the known training weight each branch received.
        shares: Vec<f64>,
        children: Vec<Node>,
    },
}

impl Node {
    pub fn dist(&self) -> [f64; 2] {
        match self {
            Node::Leaf { dist } | Node::Split { dist, .. } => *dist,
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { children, .. } => children.iter().map(Node::leaf_count).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { children, .. } => 1 + children.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    /// Weighted combination of `leaf(dist)` over the leaves `row` reaches.
    pub fn predict(&self, row: &[Value], leaf: &impl Fn([f64; 2]) -> f64) -> f64 {
        match self {
            Node::Leaf { dist } => leaf(*dist),
            Node::Split {
                attr,
                test,
                dist,
                shares,
                children,
            } => match branch_of(test, row[*attr]) {
                Branch::Known(b) => children[b].predict(row, leaf),
                Branch::Unseen => leaf(*dist),
                Branch::Missing => children
                    .iter()
                    .zip(shares)
                    .map(|(c, s)| s * c.predict(row, leaf))
                    .sum(),
            },
        }
    }

    fn training_errors(&self) -> f64 {
        match self {
            Node::Leaf { dist } => dist[0].min(dist[1]),
            Node::Split { children, .. } => children.iter().map(Node::training_errors).sum(),
        }
    }
}

enum Branch {
    Known(usize),
    Missing,
    Unseen,
}

fn branch_of(test: &Test, v: Value) -> Branch {
    match (test, v) {
        (_, Value::Missing) => Branch::Missing,
        (Test::Threshold(t), Value::Num(x)) => Branch::Known(if x <= *t { 0 } else { 1 }),
        (Test::Categories(cats), Value::Cat(c)) => match cats.binary_search(&c) {
            Ok(i) => Branch::Known(i),
            Err(_) => Branch::Unseen,
        },
        _ => Branch::Unseen,
    }
}

/// Class-1 fraction of a leaf, 0.5 for an empty one.
pub fn raw_fraction(dist: [f64; 2]) -> f64 {
    let total = dist[0] + dist[1];
    if total <= 0.0 {
        0.5
    } else {
        dist[1] / total
    }
}

/// Laplace-smoothed class-1 fraction of a leaf.
pub fn laplace_fraction(dist: [f64; 2]) -> f64 {
    (dist[1] + 1.0) / (dist[0] + dist[1] + 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
}

impl DecisionTree {
    pub fn fit(data: &Dataset, params: &TreeParams) -> Self {
        let items: Vec<(usize, f64)> = (0..data.len()).map(|i| (i, 1.0)).collect();
        let mut root = grow(data, items, params.min_leaf, &mut None);
        if params.prune {
            collapse(&mut root);
            let z = Normal::new(0.0, 1.0)
                .expect("standard normal")
                .inverse_cdf(1.0 - params.confidence);
            prune(&mut root, params.confidence, z);
        }
        DecisionTree { root }
    }

    /// Laplace-smoothed Linked fraction at the reached leaf.
    pub fn score(&self, row: &[Value]) -> f64 {
        self.root.predict(row, &laplace_fraction)
    }

    /// Unsmoothed Linked fraction at the reached leaf.
    pub fn leaf_fraction(&self, row: &[Value]) -> f64 {
        self.root.predict(row, &raw_fraction)
    }
}

/// Random attribute subsets for forest trees: `k` attributes are drawn per
/// node; if none of them yields a usable split, further attributes are drawn
/// one at a time until one does or all were tried.
pub(crate) struct AttributeSampler<'a> {
    pub k: usize,
    pub rng: &'a mut Rng,
}

fn class_dist(data: &Dataset, items: &[(usize, f64)]) -> [f64; 2] {
    let mut d = [0.0; 2];
    for &(i, w) in items {
        d[data.labels[i] as usize] += w;
    }
    d
}

/// `sum -w log2 w` style entropy of a weight vector, normalised by its total.
fn entropy(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum()
}

#[derive(Debug, Clone)]
struct Candidate {
    attr: usize,
    test: Test,
    gain: f64,
    ratio: f64,
}

pub(crate) fn grow(
    data: &Dataset,
    items: Vec<(usize, f64)>,
    min_leaf: f64,
    sampler: &mut Option<AttributeSampler<'_>>,
) -> Node {
    let dist = class_dist(data, &items);
    let total = dist[0] + dist[1];
    if total < 2.0 * min_leaf || dist[0] <= EPS || dist[1] <= EPS {
        return Node::Leaf { dist };
    }

    let m = data.schema.len();
    let mut evaluated: Vec<Candidate> = Vec::new();
    match sampler {
        None => {
            evaluated.extend((0..m).filter_map(|a| evaluate(data, &items, a, total, min_leaf)));
        }
        Some(s) => {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(s.rng);
            for (n, &a) in order.iter().enumerate() {
                if n >= s.k && evaluated.iter().any(|c| c.gain > 0.0 && c.ratio > 0.0) {
                    break;
                }
                if let Some(c) = evaluate(data, &items, a, total, min_leaf) {
                    evaluated.push(c);
                }
            }
            evaluated.sort_by_key(|c| c.attr);
        }
    }

    let Some(best) = select(&evaluated) else {
        return Node::Leaf { dist };
    };
    let (subsets, shares) = partition(data, &items, &best);
    let children = subsets
        .into_iter()
        .map(|sub| grow(data, sub, min_leaf, sampler))
        .collect();
    Node::Split {
        attr: best.attr,
        test: best.test,
        dist,
        shares,
        children,
    }
}

/// Highest gain ratio among candidates with at least average gain; ties go
/// to the lowest attribute index (candidates arrive sorted by attribute).
fn select(candidates: &[Candidate]) -> Option<Candidate> {
    if candidates.is_empty() {
        return None;
    }
    let avg = candidates.iter().map(|c| c.gain).sum::<f64>() / candidates.len() as f64;
    let mut best: Option<&Candidate> = None;
    for c in candidates {
        if c.gain > 0.0 && c.gain >= avg - 1e-3 && c.ratio > best.map_or(0.0, |b| b.ratio) {
            best = Some(c);
        }
    }
    best.cloned()
}

fn evaluate(data: &Dataset, items: &[(usize, f64)], attr: usize, total: f64, min_leaf: f64) -> Option<Candidate> {
    match data.schema.attributes[attr].kind {
        AttributeKind::Numeric => evaluate_numeric(data, items, attr, total, min_leaf),
        AttributeKind::Categorical => evaluate_categorical(data, items, attr, total, min_leaf),
    }
}

fn evaluate_numeric(data: &Dataset, items: &[(usize, f64)], attr: usize, total: f64, min_leaf: f64) -> Option<Candidate> {
    let mut known: Vec<(f64, usize, f64)> = items
        .iter()
        .filter_map(|&(i, w)| data.rows[i][attr].as_num().map(|x| (x, i, w)))
        .collect();
    if known.len() < 2 {
        return None;
    }
    known.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut known_dist = [0.0; 2];
    for &(_, i, w) in &known {
        known_dist[data.labels[i] as usize] += w;
    }
    let known_total = known_dist[0] + known_dist[1];
    let min_split = (0.1 * known_total / 2.0).clamp(min_leaf, 25f64.max(min_leaf));
    let base = entropy(&known_dist);

    let mut left = [0.0; 2];
    let mut split_points = 0usize;
    let mut best: Option<(f64, usize, [f64; 2])> = None;
    for idx in 0..known.len() - 1 {
        let (x, i, w) = known[idx];
        left[data.labels[i] as usize] += w;
        let next = known[idx + 1].0;
        if next <= x {
            continue;
        }
        let lw = left[0] + left[1];
        let rw = known_total - lw;
        if lw < min_split - EPS || rw < min_split - EPS {
            continue;
        }
        split_points += 1;
        let right = [known_dist[0] - left[0], known_dist[1] - left[1]];
        let gain = base - (lw * entropy(&left) + rw * entropy(&right)) / known_total;
        if best.is_none_or(|(g, _, _)| gain > g + 1e-12) {
            best = Some((gain, idx, left));
        }
    }
    let (gain, idx, left) = best?;
    let lw = left[0] + left[1];
    let known_share = known_total / total;
    let gain = known_share * gain - (split_points as f64).log2() / total;
    if gain <= 0.0 {
        return Some(Candidate {
            attr,
            test: Test::Threshold(known[idx].0),
            gain,
            ratio: 0.0,
        });
    }
    let lo = known[idx].0;
    let hi = known[idx + 1].0;
    let mut threshold = lo + (hi - lo) / 2.0;
    if threshold >= hi || threshold < lo {
        threshold = lo;
    }
    let split_info = entropy(&[lw, known_total - lw, total - known_total]);
    let ratio = if split_info > EPS { gain / split_info } else { 0.0 };
    Some(Candidate {
        attr,
        test: Test::Threshold(threshold),
        gain,
        ratio,
    })
}

fn evaluate_categorical(
    data: &Dataset,
    items: &[(usize, f64)],
    attr: usize,
    total: f64,
    min_leaf: f64,
) -> Option<Candidate> {
    let mut per_cat: std::collections::BTreeMap<u32, [f64; 2]> = std::collections::BTreeMap::new();
    for &(i, w) in items {
        if let Value::Cat(c) = data.rows[i][attr] {
            per_cat.entry(c).or_default()[data.labels[i] as usize] += w;
        }
    }
    if per_cat.len() < 2 {
        return None;
    }
    let big_branches = per_cat.values().filter(|d| d[0] + d[1] >= min_leaf - EPS).count();
    if big_branches < 2 {
        return None;
    }
    let mut known_dist = [0.0; 2];
    for d in per_cat.values() {
        known_dist[0] += d[0];
        known_dist[1] += d[1];
    }
    let known_total = known_dist[0] + known_dist[1];
    let after: f64 = per_cat
        .values()
        .map(|d| (d[0] + d[1]) * entropy(d))
        .sum::<f64>()
        / known_total;
    let gain = known_total / total * (entropy(&known_dist) - after);
    let mut sizes: Vec<f64> = per_cat.values().map(|d| d[0] + d[1]).collect();
    sizes.push(total - known_total);
    let split_info = entropy(&sizes);
    let ratio = if split_info > EPS && gain > 0.0 { gain / split_info } else { 0.0 };
    Some(Candidate {
        attr,
        test: Test::Categories(per_cat.keys().copied().collect()),
        gain,
        ratio,
    })
}

fn partition(data: &Dataset, items: &[(usize, f64)], split: &Candidate) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
    let n_branches = match &split.test {
        Test::Threshold(_) => 2,
        Test::Categories(c) => c.len(),
    };
    let mut subsets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_branches];
    let mut weights = vec![0.0; n_branches];
    let mut missing = Vec::new();
    for &(i, w) in items {
        match branch_of(&split.test, data.rows[i][split.attr]) {
            Branch::Known(b) => {
                subsets[b].push((i, w));
                weights[b] += w;
            }
            Branch::Missing => missing.push((i, w)),
            Branch::Unseen => unreachable!("categories are taken from the node's own items"),
        }
    }
    let known: f64 = weights.iter().sum();
    let shares: Vec<f64> = weights.iter().map(|w| w / known).collect();
    for (i, w) in missing {
        for (b, s) in shares.iter().enumerate() {
            if *s > 0.0 {
                subsets[b].push((i, w * s));
            }
        }
    }
    (subsets, shares)
}

/// Replaces subtrees that do not reduce training error by leaves.
fn collapse(node: &mut Node) {
    if let Node::Split { dist, children, .. } = node {
        let as_leaf = dist[0].min(dist[1]);
        let subtree: f64 = children.iter().map(Node::training_errors).sum();
        if subtree >= as_leaf - 1e-3 {
            *node = Node::Leaf { dist: *dist };
        } else {
            children.iter_mut().for_each(collapse);
        }
    }
}

/// Bottom-up pessimistic pruning; returns the estimated errors of the
/// (possibly pruned) subtree.
fn prune(node: &mut Node, cf: f64, z: f64) -> f64 {
    match node {
        Node::Leaf { dist } => estimated_errors(*dist, cf, z),
        Node::Split { dist, children, .. } => {
            let subtree: f64 = children.iter_mut().map(|c| prune(c, cf, z)).sum();
            let leaf = estimated_errors(*dist, cf, z);
            if leaf <= subtree + 0.1 {
                *node = Node::Leaf { dist: *dist };
                leaf
            } else {
                subtree
            }
        }
    }
}

fn estimated_errors(dist: [f64; 2], cf: f64, z: f64) -> f64 {
    let n = dist[0] + dist[1];
    if n <= 0.0 {
        return 0.0;
    }
    let e = dist[0].min(dist[1]);
    e + add_errs(n, e, cf, z)
}

/// Extra errors so that `e + add_errs` is the upper confidence bound of the
/// binomial error count at level `cf` (normal approximation for `e >= 1`,
/// exact interpolation below).
pub fn add_errs(n: f64, e: f64, cf: f64, z: f64) -> f64 {
    if e < 1.0 {
        let base = n * (1.0 - cf.powf(1.0 / n));
        if e == 0.0 {
            return base;
        }
        return base + e * (add_errs(n, 1.0, cf, z) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt()) / (1.0 + z * z / n);
    r * n - e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{AttributeSpec, Schema};

    fn dataset(rows: &[(Value, Value, bool)]) -> Dataset {
        let mut d = Dataset::new(Schema::new(vec![
            AttributeSpec::numeric("x"),
            AttributeSpec::categorical("u"),
        ]));
        for (x, u, l) in rows {
            d.push(vec![*x, *u], *l).unwrap();
        }
        d
    }

    #[test]
    fn add_errs_matches_reference_values() {
        let z = 0.6744897501960817;
        // upper 75% bound for 0 errors in 6 instances: 6 * (1 - 0.25^(1/6))
        assert!((add_errs(6.0, 0.0, 0.25, z) - 6.0 * (1.0 - 0.25f64.powf(1.0 / 6.0))).abs() < 1e-12);
        // e + 0.5 >= n branch
        assert!((add_errs(2.0, 1.6, 0.25, z) - 0.4).abs() < 1e-12);
        let got = add_errs(20.0, 4.0, 0.25, z);
        let f: f64 = 4.5 / 20.0;
        let want = (f + z * z / 40.0 + z * (f / 20.0 - f * f / 20.0 + z * z / 1600.0).sqrt()) / (1.0 + z * z / 20.0) * 20.0 - 4.0;
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn perfect_numeric_split() {
        let rows: Vec<_> = (0..20)
            .map(|i| (Value::Num(i as f64), Value::Cat(0), i >= 10))
            .collect();
        let tree = DecisionTree::fit(&dataset(&rows), &TreeParams::default());
        match &tree.root {
            Node::Split { attr, test, .. } => {
                assert_eq!(*attr, 0);
                assert_eq!(*test, Test::Threshold(9.5));
            }
            other => panic!("expected a split, got {other:?}"),
        }
        assert!(tree.score(&[Value::Num(15.0), Value::Cat(0)]) > 0.9);
        assert!(tree.score(&[Value::Num(1.0), Value::Cat(0)]) < 0.1);
        let m = tree.score(&[Value::Missing, Value::Cat(0)]);
        assert!((m - 0.5).abs() < 1e-9, "{m}");
    }

    #[test]
    fn constant_attribute_is_never_split_on() {
        let rows: Vec<_> = (0..20)
            .map(|i| (Value::Num(1.0), Value::Cat(i % 2), i % 2 == 0))
            .collect();
        let tree = DecisionTree::fit(&dataset(&rows), &TreeParams::default());
        match &tree.root {
            Node::Split { attr, .. } => assert_eq!(*attr, 1),
            other => panic!("expected a split, got {other:?}"),
        }
        // unseen category falls back to the node distribution
        assert!((tree.score(&[Value::Num(1.0), Value::Cat(7)]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn missing_values_travel_fractionally() {
        let mut rows: Vec<_> = (0..20)
            .map(|i| (Value::Num(i as f64), Value::Cat(0), i >= 10))
            .collect();
        rows.push((Value::Missing, Value::Cat(0), true));
        let tree = DecisionTree::fit(&dataset(&rows), &TreeParams::unpruned(2.0));
        let dist = tree.root.dist();
        assert_eq!(dist, [10.0, 11.0]);
        if let Node::Split { children, shares, .. } = &tree.root {
            assert_eq!(shares, &vec![0.5, 0.5]);
            assert!((children[0].dist()[1] - 0.5).abs() < 1e-12);
        } else {
            panic!("expected split");
        }
    }

    #[test]
    fn pruning_removes_noise_splits() {
        // one real boundary, everything else is label noise
        use rand::Rng as _;
        let mut r = crate::rng::seeded(5);
        let rows: Vec<_> = (0..300)
            .map(|i| (Value::Num(i as f64), Value::Cat(0), r.random_bool(if i < 150 { 0.8 } else { 0.2 })))
            .collect();
        let pruned = DecisionTree::fit(&dataset(&rows), &TreeParams::default());
        let unpruned = DecisionTree::fit(&dataset(&rows), &TreeParams::unpruned(2.0));
        assert!(unpruned.root.leaf_count() > 1);
        assert!(pruned.root.leaf_count() < unpruned.root.leaf_count());
    }
}
