//! Relevance-based sparse word representations.
//!
//! Each vocabulary term is issued as a one-term query against the BM25
//! index; the term's representation is the BM25-weighted average of the
//! tf-idf vectors of the retrieved documents. Rows of the resulting square
//! term-by-term matrix are the input to every compression stage.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::index::{Bm25Params, InvertedIndex};
use crate::sparse::SparseVector;

/// Configuration for representation building.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReprConfig {
    /// How many top-ranked documents feed each term's weighted average.
    pub len_topdocs: usize,
}

impl Default for ReprConfig {
    fn default() -> Self {
        ReprConfig { len_topdocs: 10 }
    }
}

/// Sparse word-representation matrix: one row per vocabulary term, columns
/// indexed by the same vocabulary.
#[derive(Debug, Clone)]
pub struct WordReprMatrix {
    pub rows: Vec<SparseVector>,
    pub cols: usize,
    pub fingerprint: [u8; 16],
}

impl WordReprMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, r: usize) -> &SparseVector {
        &self.rows[r]
    }
}

/// Weighted average of sparse vectors: `sum(w_i * v_i) / sum(w_i)`.
///
/// Every component of the result is a convex combination of the inputs'
/// components, so it lies within their per-component min/max; scaling all
/// weights by a positive constant leaves the result unchanged (up to
/// rounding). A zero (or empty) weight total yields the zero vector.
pub fn weighted_mean(pairs: &[(f64, &SparseVector)]) -> SparseVector {
    let total: f64 = pairs.iter().map(|(w, _)| w).sum();
    if total == 0.0 {
        return SparseVector::new();
    }
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    for (w, v) in pairs {
        for (i, x) in v.iter() {
            *acc.entry(i).or_insert(0.0) += w * x;
        }
    }
    SparseVector::from_sorted(acc.into_iter().map(|(i, s)| (i, s / total)))
}

/// Builds the relevance representation of one term: retrieve the top
/// documents for the one-term query, then average their tf-idf vectors
/// weighted by BM25 score. Terms that retrieve nothing (or only zero
/// weights) get the zero vector.
pub fn word_repr(
    index: &InvertedIndex,
    params: Bm25Params,
    config: ReprConfig,
    term: u32,
) -> SparseVector {
    let hits = index.search(params, &[term], config.len_topdocs);
    if hits.is_empty() {
        return SparseVector::new();
    }
    let vectors: Vec<SparseVector> = hits.iter().map(|h| index.vsm_vector(h.doc)).collect();
    let pairs: Vec<(f64, &SparseVector)> = hits
        .iter()
        .zip(vectors.iter())
        .map(|(h, v)| (h.score, v))
        .collect();
    weighted_mean(&pairs)
}

/// Builds representations for every vocabulary term. Rows are independent,
/// so the work is parallelized; the output is identical at any thread count.
pub fn build_all_reprs(
    index: &InvertedIndex,
    params: Bm25Params,
    config: ReprConfig,
) -> WordReprMatrix {
    let n = index.vocab_size();
    let rows: Vec<SparseVector> = (0..n as u32)
        .into_par_iter()
        .map(|term| word_repr(index, params, config, term))
        .collect();
    WordReprMatrix {
        rows,
        cols: n,
        fingerprint: index.fingerprint(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, tokenize, AppRecord, Corpus, Vocabulary};
    use approx::assert_relative_eq;

    fn corpus_from(docs: &[(&str, &str)]) -> Corpus {
        Corpus {
            records: docs
                .iter()
                .map(|(id, desc)| AppRecord {
                    app_id: id.to_string(),
                    title: id.to_uppercase(),
                    description_raw: desc.to_string(),
                    description_tokens: tokenize(desc),
                    category: "misc".to_string(),
                    package: None,
                })
                .collect(),
        }
    }

    fn tiny() -> (Corpus, Vocabulary, InvertedIndex) {
        let corpus = corpus_from(&[
            ("d1", "music player stream music"),
            ("d2", "music guitar"),
            ("d3", "shopping list coupons"),
        ]);
        let vocab = build_vocabulary(&corpus).unwrap();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        (corpus, vocab, index)
    }

    #[test]
    fn music_component_matches_hand_average() {
        let (_, vocab, index) = tiny();
        let music = vocab.id("music").unwrap();
        let repr = word_repr(
            &index,
            Bm25Params::default(),
            ReprConfig { len_topdocs: 2 },
            music,
        );
        // (0.509728 * 0.810930 + 0.469486 * 0.405465) / (0.509728 + 0.469486)
        assert_relative_eq!(repr.get(music), 0.6165291369863869, epsilon = 1e-12);
    }

    #[test]
    fn single_top_doc_reproduces_its_vsm_vector() {
        let (_, vocab, index) = tiny();
        let music = vocab.id("music").unwrap();
        let repr = word_repr(
            &index,
            Bm25Params::default(),
            ReprConfig { len_topdocs: 1 },
            music,
        );
        let vsm = index.vsm_vector(0);
        assert_eq!(repr.indices(), vsm.indices());
        for (i, v) in vsm.iter() {
            assert_relative_eq!(repr.get(i), v, epsilon = 1e-12);
        }
    }

    #[test]
    fn equal_weights_reduce_to_plain_mean() {
        let a = SparseVector::from_sorted([(0, 1.0), (2, 4.0)]);
        let b = SparseVector::from_sorted([(2, 2.0), (5, 6.0)]);
        let mean = weighted_mean(&[(0.7, &a), (0.7, &b)]);
        assert_relative_eq!(mean.get(0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(mean.get(2), 3.0, epsilon = 1e-12);
        assert_relative_eq!(mean.get(5), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_weight_total_gives_zero_vector() {
        let a = SparseVector::from_sorted([(0, 1.0)]);
        assert!(weighted_mean(&[(0.0, &a)]).is_empty());
        assert!(weighted_mean(&[]).is_empty());
    }

    #[test]
    fn ubiquitous_term_gets_zero_representation() {
        // "common" appears in every doc: idf 0, BM25 0, nothing retrieved.
        let corpus = corpus_from(&[("a", "common apple"), ("b", "common pear")]);
        let vocab = build_vocabulary(&corpus).unwrap();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let repr = word_repr(
            &index,
            Bm25Params::default(),
            ReprConfig::default(),
            vocab.id("common").unwrap(),
        );
        assert!(repr.is_empty());
    }

    #[test]
    fn support_is_union_of_retrieved_docs() {
        let (_, vocab, index) = tiny();
        let music = vocab.id("music").unwrap();
        let repr = word_repr(&index, Bm25Params::default(), ReprConfig::default(), music);
        // music retrieves d1 and d2 only; d3's terms must stay zero.
        assert_eq!(repr.get(vocab.id("shopping").unwrap()), 0.0);
        assert!(repr.get(vocab.id("guitar").unwrap()) > 0.0);
        assert!(repr.get(vocab.id("player").unwrap()) > 0.0);
    }

    #[test]
    fn build_all_covers_every_term() {
        let (_, vocab, index) = tiny();
        let matrix = build_all_reprs(&index, Bm25Params::default(), ReprConfig::default());
        assert_eq!(matrix.n_rows(), vocab.len());
        assert_eq!(matrix.cols, vocab.len());
        assert!(matrix.rows.iter().all(|r| !r.is_empty()));
    }

    #[test]
    fn build_all_is_stable_across_thread_counts() {
        let (_, _, index) = tiny();
        let params = Bm25Params::default();
        let config = ReprConfig::default();
        let parallel = build_all_reprs(&index, params, config);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| build_all_reprs(&index, params, config));
        assert_eq!(parallel.rows, serial.rows);
    }
}
