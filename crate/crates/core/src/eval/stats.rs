//! Mann-Whitney U and Fleiss' kappa.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Largest per-sample size for which the exact distribution is enumerated.
pub const EXACT_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of `values`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Rank-sum U of `a` against `b` with midranks for ties. The p-value is exact
/// (enumerating every split of the pooled ranks) when both samples have at
/// most [`EXACT_LIMIT`] values, otherwise a tie-corrected normal approximation
/// with continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("Mann-Whitney U needs two non-empty samples".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let mean = (n1 * n2) as f64 / 2.0;

    if n1 <= EXACT_LIMIT && n2 <= EXACT_LIMIT {
        let observed = (u - mean).abs();
        let mut extreme = 0u64;
        let mut total = 0u64;
        for_each_combination(n1 + n2, n1, &mut |chosen| {
            let rs: f64 = chosen.iter().map(|&i| ranks[i]).sum();
            let uu = rs - (n1 * (n1 + 1)) as f64 / 2.0;
            total += 1;
            if (uu - mean).abs() >= observed - 1e-9 {
                extreme += 1;
            }
        });
        return Ok(MannWhitney {
            u,
            p: extreme as f64 / total as f64,
            exact: true,
        });
    }

    let n = (n1 + n2) as f64;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney { u, p: 1.0, exact: false });
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * (1.0 - normal.cdf(z))).min(1.0);
    Ok(MannWhitney { u, p, exact: false })
}

fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub kappa: f64,
    /// All ratings fell into one category; kappa is reported as 1.0.
    pub undefined: bool,
    pub items: usize,
    pub raters: usize,
}

/// Fleiss' kappa over an items x categories matrix of rating counts.
pub fn fleiss_kappa(ratings: &[Vec<u32>]) -> Result<Kappa> {
    if ratings.len() < 2 {
        return Err(Error::InsufficientData("Fleiss kappa needs at least two items".into()));
    }
    let categories = ratings[0].len();
    let raters: u32 = ratings[0].iter().sum();
    if raters < 2 {
        return Err(Error::InsufficientData("Fleiss kappa needs at least two raters per item".into()));
    }
    for (i, row) in ratings.iter().enumerate() {
        if row.len() != categories || row.iter().sum::<u32>() != raters {
            return Err(Error::InvalidArgument(format!(
                "item {i} does not have {raters} ratings over {categories} categories"
            )));
        }
    }
    let n = raters as f64;
    let items = ratings.len() as f64;
    let p_bar = ratings
        .iter()
        .map(|row| (row.iter().map(|&c| (c * c) as f64).sum::<f64>() - n) / (n * (n - 1.0)))
        .sum::<f64>()
        / items;
    let p_e: f64 = (0..categories)
        .map(|j| {
            let pj = ratings.iter().map(|row| row[j] as f64).sum::<f64>() / (items * n);
            pj * pj
        })
        .sum();
    let (kappa, undefined) = if (1.0 - p_e).abs() < 1e-12 {
        (1.0, true)
    } else {
        ((p_bar - p_e) / (1.0 - p_e), false)
    };
    Ok(Kappa {
        kappa,
        undefined,
        items: ratings.len(),
        raters: raters as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!((r.p - 0.1).abs() < 1e-12);
        assert!(r.exact);
    }

    #[test]
    fn identical_samples() {
        let r = mann_whitney_u(&[0.5, 0.6, 0.7], &[0.5, 0.6, 0.7]).unwrap();
        assert_eq!(r.u, 4.5);
        assert!((r.p - 1.0).abs() < 1e-12);
        let big: Vec<f64> = (0..20).map(f64::from).collect();
        let r = mann_whitney_u(&big, &big).unwrap();
        assert!(!r.exact);
        assert_eq!(r.u, 200.0);
        assert!((r.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn kappa_examples() {
        let agree = fleiss_kappa(&[vec![2, 0], vec![0, 2], vec![2, 0]]).unwrap();
        assert!((agree.kappa - 1.0).abs() < 1e-12);
        let one_category = fleiss_kappa(&[vec![3, 0], vec![3, 0]]).unwrap();
        assert!(one_category.undefined);
        assert!(fleiss_kappa(&[vec![2, 1], vec![1, 1]]).is_err());
        assert!(fleiss_kappa(&[vec![2, 1]]).is_err());
    }
}
