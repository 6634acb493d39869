//! Text preprocessing and the n-gram vector space model.
//!
//! A document is tokenised on non-alphanumeric characters, identifiers are
//! split at camel-case boundaries, tokens are lower-cased, stop words dropped
//! and the rest Porter-stemmed. The document's terms are its unigrams plus
//! every contiguous run of 2 to 4 tokens, joined with `_`. Terms are weighted
//! with raw term frequency times `ln(N / df) + 1` and compared by cosine.

pub mod porter;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NGRAM_MIN: usize = 2;
pub const NGRAM_MAX: usize = 4;

const STOP_WORDS: &str = include_str!("stopwords.txt");

fn stop_words() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOP_WORDS
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .collect()
    })
}

pub fn is_stop_word(word: &str) -> bool {
    stop_words().contains(word)
}

/// Splits one alphanumeric token at camel-case boundaries: `optionsParser`
/// gives `options`, `Parser`; `HTTPServer` gives `HTTP`, `Server`.
pub fn split_identifier(token: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = token.char_indices().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let (at, c) = chars[i];
        let prev = chars[i - 1].1;
        let lower_to_upper = c.is_uppercase() && (prev.is_lowercase() || prev.is_numeric());
        let acronym_end = c.is_uppercase()
            && prev.is_uppercase()
            && chars.get(i + 1).is_some_and(|(_, n)| n.is_lowercase());
        if lower_to_upper || acronym_end {
            parts.push(&token[start..at]);
            start = at;
        }
    }
    if start < token.len() {
        parts.push(&token[start..]);
    }
    parts
}

/// Text to stemmed tokens. Snake case needs no special handling since `_` is
/// a separator.
pub fn preprocess(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .flat_map(split_identifier)
        .map(str::to_lowercase)
        .filter(|t| !is_stop_word(t))
        .map(|t| porter::stem(&t))
        .filter(|t| !t.is_empty())
        .collect()
}

/// Contiguous token runs of length `n_min..=n_max`, joined with `_`.
pub fn ngrams(tokens: &[String], n_min: usize, n_max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in n_min.max(1)..=n_max {
        if n > tokens.len() {
            break;
        }
        out.extend(tokens.windows(n).map(|w| w.join("_")));
    }
    out
}

/// Unigrams followed by the 2..4-grams of a text.
pub fn terms(text: &str) -> Vec<String> {
    let mut tokens = preprocess(text);
    let grams = ngrams(&tokens, NGRAM_MIN, NGRAM_MAX);
    tokens.extend(grams);
    tokens
}

/// Document frequencies over a fixed corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub document_count: u32,
    pub ngram_range: (usize, usize),
    pub df: BTreeMap<String, u32>,
}

impl CorpusIndex {
    /// Preprocesses and indexes raw texts.
    pub fn build<S: AsRef<str> + Sync>(documents: &[S]) -> Result<Self> {
        let term_lists: Vec<Vec<String>> = documents.par_iter().map(|d| terms(d.as_ref())).collect();
        Self::from_term_lists(&term_lists)
    }

    pub fn from_term_lists(documents: &[Vec<String>]) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::InsufficientData("cannot index an empty corpus".into()));
        }
        let mut df: BTreeMap<String, u32> = BTreeMap::new();
        for doc in documents {
            let distinct: HashSet<&String> = doc.iter().collect();
            for term in distinct {
                *df.entry(term.clone()).or_default() += 1;
            }
        }
        Ok(CorpusIndex {
            document_count: documents.len() as u32,
            ngram_range: (NGRAM_MIN, NGRAM_MAX),
            df,
        })
    }

    /// `ln(N / max(df, 1)) + 1`
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0).max(1);
        (self.document_count as f64 / df as f64).ln() + 1.0
    }

    pub fn vectorize_terms(&self, terms: &[String]) -> DocumentVector {
        let mut tf: HashMap<&str, u32> = HashMap::new();
        for t in terms {
            *tf.entry(t.as_str()).or_default() += 1;
        }
        DocumentVector::from_weights(tf.into_iter().map(|(t, n)| (t.to_string(), n as f64 * self.idf(t))))
    }

    pub fn vectorize(&self, text: &str) -> DocumentVector {
        self.vectorize_terms(&terms(text))
    }

    pub fn sim(&self, a: &str, b: &str) -> f64 {
        cosine(&self.vectorize(a), &self.vectorize(b))
    }
}

/// Sparse tf-idf vector, terms sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocumentVector {
    weights: Vec<(String, f64)>,
    norm: f64,
}

impl DocumentVector {
    /// Zero weights are dropped; repeated terms are summed.
    pub fn from_weights(weights: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut merged: BTreeMap<String, f64> = BTreeMap::new();
        for (t, w) in weights {
            *merged.entry(t).or_default() += w;
        }
        let weights: Vec<(String, f64)> = merged.into_iter().filter(|(_, w)| *w != 0.0).collect();
        let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        DocumentVector { weights, norm }
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.weights
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .ok()
            .map(|i| self.weights[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn scaled(&self, k: f64) -> DocumentVector {
        DocumentVector::from_weights(self.weights.iter().map(|(t, w)| (t.clone(), w * k)))
    }
}

/// Cosine of the angle between two vectors; 0 when either is zero.
pub fn cosine(a: &DocumentVector, b: &DocumentVector) -> f64 {
    if a.norm == 0.0 || b.norm == 0.0 {
        return 0.0;
    }
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.weights.len() && j < b.weights.len() {
        match a.weights[i].0.cmp(&b.weights[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a.weights[i].1 * b.weights[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    (dot / (a.norm * b.norm)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn s(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn camel_and_snake_case_split() {
        assert_eq!(split_identifier("optionsParser"), ["options", "Parser"]);
        assert_eq!(split_identifier("HTTPServer"), ["HTTP", "Server"]);
        assert_eq!(split_identifier("utf8Decoder"), ["utf8", "Decoder"]);
        assert_eq!(preprocess("optionsParser"), preprocess("options_parser"));
    }

    #[test]
    fn stop_words_never_survive() {
        assert!(preprocess("the and of to in it is was").is_empty());
    }

    #[test]
    fn preprocess_examples() {
        assert!(preprocess("").is_empty());
        assert_eq!(preprocess("options_parser loading"), ["option", "parser", "load"]);
        assert_eq!(preprocess("The parser is in the Loader"), ["parser", "loader"]);
    }

    #[test]
    fn ngram_examples() {
        assert_eq!(ngrams(&s(&["a", "b", "c"]), 2, 4), ["a_b", "b_c", "a_b_c"]);
        assert!(ngrams(&s(&["a"]), 2, 4).is_empty());
        assert_eq!(ngrams(&s(&["a", "b", "c", "d", "e"]), 2, 4).len(), 9);
    }

    #[test]
    fn idf_examples() {
        let idx = CorpusIndex::from_term_lists(&[s(&["a", "b"]), s(&["a"])]).unwrap();
        assert_abs_diff_eq!(idx.idf("a"), 1.0);
        assert_abs_diff_eq!(idx.idf("b"), 2f64.ln() + 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(idx.idf("zzz"), 2f64.ln() + 1.0, epsilon = 1e-12);
        assert!(CorpusIndex::from_term_lists(&[]).is_err());
    }

    #[test]
    fn tf_times_idf() {
        let idx = CorpusIndex::from_term_lists(&[s(&["a", "b"]), s(&["a"])]).unwrap();
        let v = idx.vectorize_terms(&s(&["a", "a", "b"]));
        assert_abs_diff_eq!(v.get("a").unwrap(), 2.0);
        assert_abs_diff_eq!(v.get("b").unwrap(), 2f64.ln() + 1.0, epsilon = 1e-12);
        assert!(idx.vectorize("").is_empty());
    }

    #[test]
    fn cosine_examples() {
        let v1 = DocumentVector::from_weights([("a".to_string(), 1.0), ("b".to_string(), 1.0)]);
        let v2 = DocumentVector::from_weights([("a".to_string(), 1.0)]);
        assert_abs_diff_eq!(cosine(&v1, &v2), 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        let v3 = DocumentVector::from_weights([("c".to_string(), 3.0)]);
        assert_eq!(cosine(&v1, &v3), 0.0);
        assert_eq!(cosine(&v1, &DocumentVector::default()), 0.0);
        let idx = CorpusIndex::build(&["options parser loading", "bytecode writer"]).unwrap();
        assert_abs_diff_eq!(idx.sim("optionsParser loading", "options_parser loading"), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn index_round_trips_through_json() {
        let idx = CorpusIndex::build(&["Speed up options parser", "Parser crashes on empty input"]).unwrap();
        let back: CorpusIndex = serde_json::from_str(&serde_json::to_string(&idx).unwrap()).unwrap();
        assert_eq!(idx, back);
        assert!(idx.df.values().all(|&d| d >= 1 && d <= idx.document_count));
    }

    fn vector() -> impl Strategy<Value = DocumentVector> {
        proptest::collection::vec(("[a-f]", 0.0f64..10.0), 0..6)
            .prop_map(DocumentVector::from_weights)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn cosine_symmetric_bounded_scale_invariant(a in vector(), b in vector(), k in 0.01f64..100.0) {
            let ab = cosine(&a, &b);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - cosine(&b, &a)).abs() < 1e-12);
            prop_assert!((ab - cosine(&a.scaled(k), &b)).abs() < 1e-9);
            if !a.is_empty() {
                prop_assert!((cosine(&a, &a) - 1.0).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn tokens_are_clean(text in "[ -~]{0,60}") {
            for t in preprocess(&text) {
                prop_assert!(!t.is_empty());
                prop_assert_eq!(t.to_lowercase(), t);
            }
        }

        #[test]
        fn ngram_count_formula(len in 0usize..12) {
            let toks: Vec<String> = (0..len).map(|i| format!("t{i}")).collect();
            let want: usize = (2..=4).filter(|n| *n <= len).map(|n| len - n + 1).sum();
            prop_assert_eq!(ngrams(&toks, 2, 4).len(), want);
        }

        #[test]
        fn adding_a_document_changes_idf_not_tf(text in "[a-z ]{1,40}", extra in "[a-z ]{1,40}") {
            let a = CorpusIndex::build(&[text.as_str()]).unwrap();
            let b = CorpusIndex::build(&[text.as_str(), extra.as_str()]).unwrap();
            let va = a.vectorize(&text);
            let vb = b.vectorize(&text);
            for (t, w) in va.iter() {
                let tf_a = w / a.idf(t);
                let tf_b = vb.get(t).unwrap() / b.idf(t);
                prop_assert!((tf_a - tf_b).abs() < 1e-9);
            }
        }
    }
}
