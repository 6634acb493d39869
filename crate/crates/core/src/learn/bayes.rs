//! Naive Bayes with Gaussian numeric likelihoods and Laplace-smoothed
//! categorical frequencies. Missing values drop the attribute's factor.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AttributeKind, Dataset, Value};

const DEFAULT_PRECISION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    /// Log prior per class, index 0 NonLinked, 1 Linked.
    pub log_prior: [f64; 2],
    pub attributes: Vec<AttributeModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttributeModel {
    Gaussian { mean: [f64; 2], std: [f64; 2] },
    Frequencies {
        counts: [BTreeMap<u32, f64>; 2],
        totals: [f64; 2],
        /// Distinct categories seen in training plus one for unseen values.
        buckets: f64,
    },
}

impl NaiveBayes {
    pub fn fit(data: &Dataset) -> Self {
        let n = data.len() as f64;
        let n_linked = data.linked_count() as f64;
        let class_n = [n - n_linked, n_linked];
        let log_prior = [
            ((class_n[0] + 1.0) / (n + 2.0)).ln(),
            ((class_n[1] + 1.0) / (n + 2.0)).ln(),
        ];
        let attributes = data
            .schema
            .attributes
            .iter()
            .enumerate()
            .map(|(col, spec)| match spec.kind {
                AttributeKind::Numeric => fit_gaussian(data, col),
                AttributeKind::Categorical => fit_frequencies(data, col),
            })
            .collect();
        NaiveBayes { log_prior, attributes }
    }

    /// Posterior probability of Linked.
    pub fn score(&self, row: &[Value]) -> f64 {
        let mut log_p = self.log_prior;
        for (model, v) in self.attributes.iter().zip(row) {
            for (c, lp) in log_p.iter_mut().enumerate() {
                if let Some(l) = model.log_likelihood(c, *v) {
                    *lp += l;
                }
            }
        }
        let max = log_p[0].max(log_p[1]);
        let e0 = (log_p[0] - max).exp();
        let e1 = (log_p[1] - max).exp();
        e1 / (e0 + e1)
    }
}

impl AttributeModel {
    fn log_likelihood(&self, class: usize, v: Value) -> Option<f64> {
        match (self, v) {
            (_, Value::Missing) => None,
            (AttributeModel::Gaussian { mean, std }, Value::Num(x)) => {
                let z = (x - mean[class]) / std[class];
                Some(-0.5 * z * z - std[class].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln())
            }
            (AttributeModel::Frequencies { counts, totals, buckets }, Value::Cat(c)) => {
                let n = counts[class].get(&c).copied().unwrap_or(0.0);
                Some(((n + 1.0) / (totals[class] + buckets)).ln())
            }
            _ => None,
        }
    }
}

fn fit_gaussian(data: &Dataset, col: usize) -> AttributeModel {
    let mut per_class: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (row, &linked) in data.rows.iter().zip(&data.labels) {
        if let Value::Num(x) = row[col] {
            per_class[linked as usize].push(x);
        }
    }
    for v in per_class.iter_mut() {
        v.sort_by(f64::total_cmp);
    }
    let mut all: Vec<f64> = per_class.concat();
    all.sort_by(f64::total_cmp);
    all.dedup();
    // mean gap between distinct values bounds how narrow a class can be
    let precision = if all.len() >= 2 {
        (all[all.len() - 1] - all[0]) / (all.len() - 1) as f64
    } else {
        DEFAULT_PRECISION
    };
    let floor = precision / 6.0;
    let pooled: Vec<f64> = {
        let mut p = per_class.concat();
        p.sort_by(f64::total_cmp);
        p
    };
    let mut mean = [0.0; 2];
    let mut std = [floor; 2];
    for c in 0..2 {
        let xs = if per_class[c].is_empty() { &pooled } else { &per_class[c] };
        if xs.is_empty() {
            continue;
        }
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
        mean[c] = m;
        std[c] = var.sqrt().max(floor);
    }
    AttributeModel::Gaussian { mean, std }
}

fn fit_frequencies(data: &Dataset, col: usize) -> AttributeModel {
    let mut counts: [BTreeMap<u32, f64>; 2] = [BTreeMap::new(), BTreeMap::new()];
    let mut totals = [0.0; 2];
    let mut seen = std::collections::BTreeSet::new();
    for (row, &linked) in data.rows.iter().zip(&data.labels) {
        if let Value::Cat(c) = row[col] {
            *counts[linked as usize].entry(c).or_default() += 1.0;
            totals[linked as usize] += 1.0;
            seen.insert(c);
        }
    }
    AttributeModel::Frequencies {
        counts,
        totals,
        buckets: seen.len() as f64 + 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{AttributeSpec, Schema};

    #[test]
    fn symmetric_two_points_equidistant_query_is_even() {
        let mut d = Dataset::new(Schema::new(vec![AttributeSpec::numeric("x")]));
        d.push(vec![Value::Num(0.0)], true).unwrap();
        d.push(vec![Value::Num(2.0)], false).unwrap();
        let nb = NaiveBayes::fit(&d);
        assert!((nb.score(&[Value::Num(1.0)]) - 0.5).abs() < 1e-12);
        assert!(nb.score(&[Value::Num(0.1)]) > 0.99);
        assert!((nb.score(&[Value::Missing]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unseen_category_gets_the_prior_term() {
        let mut d = Dataset::new(Schema::new(vec![AttributeSpec::categorical("user")]));
        for _ in 0..3 {
            d.push(vec![Value::Cat(1)], true).unwrap();
            d.push(vec![Value::Cat(2)], false).unwrap();
        }
        let nb = NaiveBayes::fit(&d);
        assert!(nb.score(&[Value::Cat(1)]) > 0.7);
        assert!((nb.score(&[Value::Cat(99)]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn row_order_does_not_change_parameters() {
        let mut a = Dataset::new(Schema::new(vec![AttributeSpec::numeric("x"), AttributeSpec::categorical("u")]));
        let rows = [(0.1, 1, true), (0.7, 2, false), (0.3, 1, true), (0.9, 3, false), (0.2, 2, true)];
        for (x, u, l) in rows {
            a.push(vec![Value::Num(x), Value::Cat(u)], l).unwrap();
        }
        let mut b = Dataset::new(a.schema.clone());
        for (x, u, l) in rows.iter().rev() {
            b.push(vec![Value::Num(*x), Value::Cat(*u)], *l).unwrap();
        }
        assert_eq!(NaiveBayes::fit(&a), NaiveBayes::fit(&b));
    }
}
