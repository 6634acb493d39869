use serde::{Deserialize, Serialize};

/// `(1 + b^2) p r / (b^2 p + r)`, 0 when the denominator is 0.
pub fn fbeta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom <= 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Retrieval counts of one evaluation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub retrieved: usize,
    pub relevant: usize,
    pub hits: usize,
}

impl Counts {
    pub fn add(&mut self, other: Counts) {
        self.retrieved += other.retrieved;
        self.relevant += other.relevant;
        self.hits += other.hits;
    }

    pub fn metrics(&self, beta: f64) -> Metrics {
        let precision_undefined = self.retrieved == 0;
        let precision = if precision_undefined {
            1.0
        } else {
            self.hits as f64 / self.retrieved as f64
        };
        let recall = if self.relevant == 0 {
            0.0
        } else {
            self.hits as f64 / self.relevant as f64
        };
        Metrics {
            precision,
            recall,
            f: fbeta(precision, recall, beta),
            precision_undefined,
            counts: *self,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    /// Nothing was retrieved; precision is reported as 1.0.
    pub precision_undefined: bool,
    pub counts: Counts,
}

/// Headline metrics plus the per-repetition values they summarise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub beta: f64,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub precision_undefined: bool,
    pub repetitions: Vec<Metrics>,
    /// Counts pooled over all repetitions.
    pub micro: Metrics,
}

impl MetricsReport {
    /// Headline = mean over repetitions.
    pub fn macro_average(beta: f64, repetitions: Vec<Metrics>) -> MetricsReport {
        let n = repetitions.len().max(1) as f64;
        let mean = |f: fn(&Metrics) -> f64| repetitions.iter().map(f).sum::<f64>() / n;
        let mut pooled = Counts::default();
        repetitions.iter().for_each(|m| pooled.add(m.counts));
        MetricsReport {
            beta,
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f: mean(|m| m.f),
            precision_undefined: repetitions.iter().all(|m| m.precision_undefined),
            micro: pooled.metrics(beta),
            repetitions,
        }
    }

    /// Headline = one aggregate run, with per-repetition values kept alongside.
    pub fn with_headline(beta: f64, headline: Metrics, repetitions: Vec<Metrics>) -> MetricsReport {
        let mut pooled = Counts::default();
        repetitions.iter().for_each(|m| pooled.add(m.counts));
        MetricsReport {
            beta,
            precision: headline.precision,
            recall: headline.recall,
            f: headline.f,
            precision_undefined: headline.precision_undefined,
            micro: pooled.metrics(beta),
            repetitions,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fbeta_examples() {
        assert!((fbeta(0.34, 1.0, 2.0) - 0.72).abs() < 0.005);
        assert!((fbeta(1.0, 0.9, 0.5) - 0.978).abs() < 0.001);
        assert!((fbeta(0.98, 0.10, 0.5) - 0.355).abs() < 0.005);
        for x in [0.0, 0.2, 0.5, 1.0] {
            for beta in [0.5, 1.0, 2.0] {
                assert!((fbeta(x, x, beta) - x).abs() < 1e-12);
            }
        }
        assert_eq!(fbeta(0.0, 0.0, 2.0), 0.0);
    }

    #[test]
    fn empty_retrieval_flags_precision() {
        let m = Counts { retrieved: 0, relevant: 4, hits: 0 }.metrics(0.5);
        assert!(m.precision_undefined);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 0.0);
    }
}
