//! Random forest: bagged, unpruned gain-ratio trees that look at a random
//! subset of attributes at every node. The score is the fraction of trees
//! whose reached leaf favours Linked.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, raw_fraction, AttributeSampler, Node};
use super::{Dataset, Value};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// Attributes drawn per node; `None` means `floor(log2 m) + 1`.
    pub attrs_per_split: Option<usize>,
    pub bootstrap: bool,
    pub min_leaf: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            attrs_per_split: None,
            bootstrap: true,
            min_leaf: 1.0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::InvalidArgument("a forest needs at least one tree".into()));
        }
        if self.attrs_per_split == Some(0) {
            return Err(Error::InvalidArgument("attrs_per_split must be positive".into()));
        }
        if !(self.min_leaf > 0.0) {
            return Err(Error::InvalidArgument("min_leaf must be positive".into()));
        }
        Ok(())
    }

    pub fn attrs_for(&self, m: usize) -> usize {
        self.attrs_per_split
            .unwrap_or_else(|| (m.max(1) as f64).log2().floor() as usize + 1)
            .min(m.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Node>,
}

impl RandomForest {
    /// Tree `t` draws its bootstrap sample and attribute subsets from the
    /// stream `rng::derive(seed, t)`, so the result does not depend on how
    /// trees are scheduled across threads.
    pub fn fit(data: &Dataset, params: &ForestParams, seed: u64) -> Self {
        let k = params.attrs_for(data.schema.len());
        let n = data.len();
        let trees = (0..params.trees as u64)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::derive(seed, t);
                let items: Vec<(usize, f64)> = if params.bootstrap {
                    let mut counts = vec![0u32; n];
                    for _ in 0..n {
                        counts[r.random_range(0..n)] += 1;
                    }
                    counts
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| **c > 0)
                        .map(|(i, c)| (i, *c as f64))
                        .collect()
                } else {
                    (0..n).map(|i| (i, 1.0)).collect()
                };
                let mut sampler = Some(AttributeSampler { k, rng: &mut r });
                grow(data, items, params.min_leaf, &mut sampler)
            })
            .collect();
        RandomForest { trees }
    }

    /// Fraction of trees voting Linked (leaf fraction at least one half).
    pub fn score(&self, row: &[Value]) -> f64 {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict(row, &raw_fraction) >= 0.5)
            .count();
        votes as f64 / self.trees.len() as f64
    }

    /// Mean unsmoothed Linked fraction over the trees' reached leaves.
    pub fn leaf_fraction(&self, row: &[Value]) -> f64 {
        self.trees.iter().map(|t| t.predict(row, &raw_fraction)).sum::<f64>() / self.trees.len() as f64
    }
}
