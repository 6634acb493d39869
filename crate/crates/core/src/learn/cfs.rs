//! Correlation-based feature subset selection.
//!
//! Numeric attributes are discretised with the Fayyad-Irani MDL criterion,
//! missing values form a bin of their own, and every correlation is the
//! symmetric uncertainty between two discrete columns. A subset `S` of `k`
//! attributes is worth
//!
//! ```text
//! merit(S) = k * mean SU(a, class) / sqrt(k + k (k - 1) * mean SU(a, b))
//! ```
//!
//! and the search is best-first forward selection from the empty set that
//! stops after five consecutive expansions without a strictly better subset.

use std::collections::{BTreeSet, HashMap};

use super::{AttributeKind, Dataset, Value};
use crate::{Error, Result};

pub const STALE_EXPANSIONS: usize = 5;

const MISSING_BIN: u32 = u32::MAX;

/// Indices of the selected attributes, ascending.
pub fn select(data: &Dataset) -> Result<Vec<usize>> {
    let linked = data.linked_count();
    if linked == 0 || linked == data.len() {
        return Err(Error::SingleClass);
    }
    let class: Vec<u32> = data.labels.iter().map(|&l| l as u32).collect();
    let columns: Vec<Vec<u32>> = (0..data.schema.len()).map(|c| discretize(data, c)).collect();
    let r_cf: Vec<f64> = columns.iter().map(|col| symmetric_uncertainty(col, &class)).collect();
    let m = columns.len();
    let mut r_ff = vec![vec![1.0; m]; m];
    for a in 0..m {
        for b in a + 1..m {
            let su = symmetric_uncertainty(&columns[a], &columns[b]);
            r_ff[a][b] = su;
            r_ff[b][a] = su;
        }
    }
    let subset = best_first(m, |s| merit(s, &r_cf, &r_ff));
    if subset.is_empty() {
        return Err(Error::InsufficientData("no attribute is correlated with the class".into()));
    }
    Ok(subset)
}

pub fn merit(subset: &[usize], r_cf: &[f64], r_ff: &[Vec<f64>]) -> f64 {
    let k = subset.len() as f64;
    if subset.is_empty() {
        return 0.0;
    }
    let mean_cf = subset.iter().map(|&a| r_cf[a]).sum::<f64>() / k;
    let mut pair_sum = 0.0;
    let mut pairs = 0usize;
    for (i, &a) in subset.iter().enumerate() {
        for &b in &subset[i + 1..] {
            pair_sum += r_ff[a][b];
            pairs += 1;
        }
    }
    let mean_ff = if pairs == 0 { 0.0 } else { pair_sum / pairs as f64 };
    let denom = (k + k * (k - 1.0) * mean_ff).sqrt();
    if denom <= 0.0 {
        0.0
    } else {
        k * mean_cf / denom
    }
}

/// Best-first forward search over subsets of `0..m`. Ties between equally
/// good subsets go to the one generated first (lower attribute indices).
pub fn best_first(m: usize, mut merit: impl FnMut(&[usize]) -> f64) -> Vec<usize> {
    let mut visited: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut open: Vec<(f64, Vec<usize>)> = vec![(0.0, Vec::new())];
    let mut best: (f64, Vec<usize>) = (0.0, Vec::new());
    let mut stale = 0;
    visited.insert(Vec::new());
    while !open.is_empty() {
        let head_pos = open
            .iter()
            .enumerate()
            .fold(0, |best_i, (i, (s, _))| if *s > open[best_i].0 { i } else { best_i });
        let (_, head) = open.remove(head_pos);
        let mut improved = false;
        for a in 0..m {
            if head.contains(&a) {
                continue;
            }
            let mut child = head.clone();
            child.push(a);
            child.sort_unstable();
            if !visited.insert(child.clone()) {
                continue;
            }
            let score = merit(&child);
            if score > best.0 + 1e-12 {
                best = (score, child.clone());
                improved = true;
            }
            open.push((score, child));
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= STALE_EXPANSIONS {
                break;
            }
        }
    }
    best.1
}

/// Bin index per row; categories map to themselves, numbers to MDL bins.
pub fn discretize(data: &Dataset, column: usize) -> Vec<u32> {
    match data.schema.attributes[column].kind {
        AttributeKind::Categorical => data
            .rows
            .iter()
            .map(|r| r[column].as_cat().unwrap_or(MISSING_BIN))
            .collect(),
        AttributeKind::Numeric => {
            let mut known: Vec<(f64, bool)> = data
                .rows
                .iter()
                .zip(&data.labels)
                .filter_map(|(r, &l)| r[column].as_num().map(|x| (x, l)))
                .collect();
            known.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let cuts = mdl_cuts(&known);
            data.rows
                .iter()
                .map(|r| match r[column] {
                    Value::Num(x) => cuts.partition_point(|c| *c < x) as u32,
                    _ => MISSING_BIN,
                })
                .collect()
        }
    }
}

fn class_entropy(slice: &[(f64, bool)]) -> (f64, usize) {
    let n = slice.len() as f64;
    let linked = slice.iter().filter(|(_, l)| *l).count() as f64;
    let mut h = 0.0;
    let mut classes = 0;
    for c in [linked, n - linked] {
        if c > 0.0 {
            classes += 1;
            let p = c / n;
            h -= p * p.log2();
        }
    }
    (h, classes)
}

/// Fayyad-Irani recursive minimum-description-length cut points, ascending.
pub fn mdl_cuts(sorted: &[(f64, bool)]) -> Vec<f64> {
    let mut cuts = Vec::new();
    mdl_recurse(sorted, &mut cuts);
    cuts.sort_by(f64::total_cmp);
    cuts
}

fn mdl_recurse(s: &[(f64, bool)], cuts: &mut Vec<f64>) {
    let n = s.len();
    if n < 2 {
        return;
    }
    let (h, k) = class_entropy(s);
    if k < 2 {
        return;
    }
    let mut best: Option<(f64, usize)> = None;
    for i in 1..n {
        if s[i - 1].0 >= s[i].0 {
            continue;
        }
        let (hl, _) = class_entropy(&s[..i]);
        let (hr, _) = class_entropy(&s[i..]);
        let e = (i as f64 * hl + (n - i) as f64 * hr) / n as f64;
        if best.is_none_or(|(b, _)| e < b - 1e-12) {
            best = Some((e, i));
        }
    }
    let Some((e, i)) = best else { return };
    let (hl, k1) = class_entropy(&s[..i]);
    let (hr, k2) = class_entropy(&s[i..]);
    let gain = h - e;
    let delta = (3f64.powi(k as i32) - 2.0).log2() - (k as f64 * h - k1 as f64 * hl - k2 as f64 * hr);
    if gain > (((n - 1) as f64).log2() + delta) / n as f64 {
        cuts.push((s[i - 1].0 + s[i].0) / 2.0);
        mdl_recurse(&s[..i], cuts);
        mdl_recurse(&s[i..], cuts);
    }
}

fn entropy_of_counts<K: std::hash::Hash + Eq>(values: impl Iterator<Item = K>) -> f64 {
    let mut counts: HashMap<K, f64> = HashMap::new();
    let mut n = 0.0;
    for v in values {
        *counts.entry(v).or_default() += 1.0;
        n += 1.0;
    }
    let mut ps: Vec<f64> = counts.into_values().map(|c| c / n).collect();
    ps.sort_by(f64::total_cmp);
    -ps.iter().map(|p| p * p.log2()).sum::<f64>()
}

/// `2 (H(x) + H(y) - H(x, y)) / (H(x) + H(y))`, 0 when both are constant.
pub fn symmetric_uncertainty(x: &[u32], y: &[u32]) -> f64 {
    let hx = entropy_of_counts(x.iter().copied());
    let hy = entropy_of_counts(y.iter().copied());
    let hxy = entropy_of_counts(x.iter().copied().zip(y.iter().copied()));
    if hx + hy <= 0.0 {
        return 0.0;
    }
    (2.0 * (hx + hy - hxy) / (hx + hy)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{AttributeSpec, Schema};

    #[test]
    fn su_bounds() {
        assert_eq!(symmetric_uncertainty(&[0, 0, 1, 1], &[0, 0, 1, 1]), 1.0);
        assert_eq!(symmetric_uncertainty(&[0, 1, 0, 1], &[0, 0, 1, 1]), 0.0);
        assert_eq!(symmetric_uncertainty(&[3, 3, 3], &[3, 3, 3]), 0.0);
    }

    #[test]
    fn merit_by_hand() {
        let r_cf = [0.8, 0.0];
        let r_ff = vec![vec![1.0, 0.1], vec![0.1, 1.0]];
        assert!((merit(&[0], &r_cf, &r_ff) - 0.8).abs() < 1e-12);
        // 2 * 0.4 / sqrt(2 + 2 * 0.1)
        assert!((merit(&[0, 1], &r_cf, &r_ff) - 0.8 / 2.2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn two_attribute_toy_excludes_noise() {
        let mut d = Dataset::new(Schema::new(vec![AttributeSpec::numeric("signal"), AttributeSpec::numeric("noise")]));
        for i in 0..40 {
            let label = i % 2 == 0;
            let signal = if label { 1.0 + (i % 5) as f64 } else { -1.0 - (i % 5) as f64 };
            let noise = ((i / 2) % 4) as f64;
            d.push(vec![Value::Num(signal), Value::Num(noise)], label).unwrap();
        }
        assert_eq!(select(&d).unwrap(), vec![0]);
    }

    #[test]
    fn mdl_finds_the_class_boundary() {
        let s: Vec<(f64, bool)> = (0..20).map(|i| (i as f64, i >= 10)).collect();
        assert_eq!(mdl_cuts(&s), vec![9.5]);
        let flat: Vec<(f64, bool)> = (0..20).map(|i| (i as f64, i % 2 == 0)).collect();
        assert!(mdl_cuts(&flat).is_empty());
    }

    #[test]
    fn single_class_is_an_error() {
        let mut d = Dataset::new(Schema::new(vec![AttributeSpec::numeric("x")]));
        d.push(vec![Value::Num(1.0)], true).unwrap();
        assert!(matches!(select(&d), Err(Error::SingleClass)));
    }
}
