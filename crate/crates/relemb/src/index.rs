//! Native inverted index with Okapi BM25 and tf-idf document vectors.
//!
//! The index owns everything scoring needs: per-term postings `(doc, tf)`,
//! document lengths and their mean. Scores are plain f64 throughout so that
//! ranking is reproducible bit for bit.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// BM25 free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

/// One posting: document ordinal and term frequency within it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Inverted index over a corpus, aligned with a [`Vocabulary`].
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    postings: Vec<Vec<Posting>>,
    doc_len: Vec<u32>,
    avgdl: f64,
    fingerprint: [u8; 16],
}

/// A scored document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDoc {
    pub doc: u32,
    pub score: f64,
}

impl InvertedIndex {
    /// Indexes every description token of the corpus. Each token must be in
    /// the vocabulary.
    pub fn build(corpus: &Corpus, vocab: &Vocabulary) -> Result<Self> {
        let mut postings = vec![Vec::new(); vocab.len()];
        let mut doc_len = Vec::with_capacity(corpus.total_docs());
        for (ordinal, record) in corpus.records.iter().enumerate() {
            let mut tf: HashMap<u32, u32> = HashMap::new();
            for token in &record.description_tokens {
                let id = vocab
                    .id(token)
                    .ok_or_else(|| Error::TokenNotInVocab(token.clone()))?;
                *tf.entry(id).or_insert(0) += 1;
            }
            let mut counts: Vec<(u32, u32)> = tf.into_iter().collect();
            counts.sort_unstable_by_key(|&(id, _)| id);
            for (id, count) in counts {
                postings[id as usize].push(Posting {
                    doc: ordinal as u32,
                    tf: count,
                });
            }
            doc_len.push(record.description_tokens.len() as u32);
        }
        let avgdl = if doc_len.is_empty() {
            0.0
        } else {
            doc_len.iter().map(|&l| l as f64).sum::<f64>() / doc_len.len() as f64
        };
        Ok(InvertedIndex {
            postings,
            doc_len,
            avgdl,
            fingerprint: vocab.fingerprint(),
        })
    }

    /// Reassembles an index from its raw parts (used by the binary loader).
    pub(crate) fn from_parts(
        postings: Vec<Vec<Posting>>,
        doc_len: Vec<u32>,
        avgdl: f64,
        fingerprint: [u8; 16],
    ) -> Self {
        InvertedIndex {
            postings,
            doc_len,
            avgdl,
            fingerprint,
        }
    }

    pub fn total_docs(&self) -> usize {
        self.doc_len.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.postings.len()
    }

    pub fn doc_len(&self, doc: u32) -> u32 {
        self.doc_len[doc as usize]
    }

    pub fn doc_lens(&self) -> &[u32] {
        &self.doc_len
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn postings(&self, term: u32) -> &[Posting] {
        &self.postings[term as usize]
    }

    /// Number of documents containing `term`.
    pub fn df(&self, term: u32) -> usize {
        self.postings[term as usize].len()
    }

    pub fn fingerprint(&self) -> [u8; 16] {
        self.fingerprint
    }

    /// Inverse document frequency `ln(TotalDocs / df)`; `0` when df is 0.
    pub fn idf(&self, term: u32) -> f64 {
        let df = self.df(term);
        if df == 0 {
            0.0
        } else {
            (self.total_docs() as f64 / df as f64).ln()
        }
    }

    /// Term frequency of `term` in `doc`.
    pub fn tf(&self, term: u32, doc: u32) -> u32 {
        match self.postings[term as usize].binary_search_by_key(&doc, |p| p.doc) {
            Ok(pos) => self.postings[term as usize][pos].tf,
            Err(_) => 0,
        }
    }

    /// tf-idf vector of a document: `tf * idf` per term, zeros omitted.
    pub fn vsm_vector(&self, doc: u32) -> SparseVector {
        let mut pairs = Vec::new();
        for (term, postings) in self.postings.iter().enumerate() {
            if let Ok(pos) = postings.binary_search_by_key(&doc, |p| p.doc) {
                let idf = self.idf(term as u32);
                let w = postings[pos].tf as f64 * idf;
                if w != 0.0 {
                    pairs.push((term as u32, w));
                }
            }
        }
        SparseVector::from_sorted(pairs)
    }

    /// BM25 score of `doc` for a bag of query term ids. Repeated query terms
    /// contribute once per occurrence.
    pub fn bm25(&self, params: Bm25Params, query: &[u32], doc: u32) -> f64 {
        let mut score = 0.0;
        for &term in query {
            let tf = self.tf(term, doc) as f64;
            if tf == 0.0 {
                continue;
            }
            score += self.bm25_term(params, term, tf, doc);
        }
        score
    }

    fn bm25_term(&self, params: Bm25Params, term: u32, tf: f64, doc: u32) -> f64 {
        let idf = self.idf(term);
        let dl = self.doc_len[doc as usize] as f64;
        let norm = if self.avgdl == 0.0 { 0.0 } else { dl / self.avgdl };
        let denom = tf + params.k1 * (1.0 - params.b + params.b * norm);
        idf * (tf * (params.k1 + 1.0)) / denom
    }

    /// Accumulates `weight * bm25(term)` for every document touched by the
    /// query into `scores` (a dense per-document buffer).
    pub(crate) fn accumulate_bm25(
        &self,
        params: Bm25Params,
        query: &[u32],
        weight: f64,
        scores: &mut [f64],
    ) {
        for &term in query {
            for posting in &self.postings[term as usize] {
                let s = self.bm25_term(params, term, posting.tf as f64, posting.doc);
                scores[posting.doc as usize] += weight * s;
            }
        }
    }

    /// Ranks the `topk` documents with positive BM25 score: descending score,
    /// ties by ascending document ordinal.
    pub fn search(&self, params: Bm25Params, query: &[u32], topk: usize) -> Vec<ScoredDoc> {
        let mut scores = vec![0.0; self.total_docs()];
        self.accumulate_bm25(params, query, 1.0, &mut scores);
        rank_positive(&scores, topk)
    }
}

/// Extracts the top-k positive entries of a dense score buffer.
pub(crate) fn rank_positive(scores: &[f64], topk: usize) -> Vec<ScoredDoc> {
    let mut hits: Vec<ScoredDoc> = scores
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s > 0.0)
        .map(|(doc, &score)| ScoredDoc {
            doc: doc as u32,
            score,
        })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.doc.cmp(&b.doc))
    });
    hits.truncate(topk);
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, tokenize, AppRecord};
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

    fn tiny() -> (Corpus, Vocabulary) {
        let corpus = corpus_from(&[
            ("d1", "music player stream music"),
            ("d2", "music guitar"),
            ("d3", "shopping list coupons"),
        ]);
        let vocab = build_vocabulary(&corpus).unwrap();
        (corpus, vocab)
    }

    #[test]
    fn build_counts_tf_df_and_lengths() {
        let (corpus, vocab) = tiny();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let music = vocab.id("music").unwrap();
        assert_eq!(index.df(music), 2);
        assert_eq!(index.tf(music, 0), 2);
        assert_eq!(index.tf(music, 1), 1);
        assert_eq!(index.doc_lens(), &[4, 2, 3]);
        assert_eq!(index.avgdl(), 3.0);
    }

    #[test]
    fn build_rejects_token_outside_vocabulary() {
        let (corpus, _) = tiny();
        let other = corpus_from(&[("x", "piano")]);
        let vocab = build_vocabulary(&other).unwrap();
        let err = InvertedIndex::build(&corpus, &vocab).unwrap_err();
        assert!(matches!(err, Error::TokenNotInVocab(_)), "got {err}");
    }

    #[test]
    fn single_doc_avgdl_is_its_length() {
        let corpus = corpus_from(&[("x", "alpha beta gamma")]);
        let vocab = build_vocabulary(&corpus).unwrap();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        assert_eq!(index.avgdl(), 3.0);
    }

    #[test]
    fn idf_of_tiny_corpus() {
        let (corpus, vocab) = tiny();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let music = vocab.id("music").unwrap();
        let guitar = vocab.id("guitar").unwrap();
        assert_relative_eq!(index.idf(music), 0.4054651081081644, epsilon = 1e-15);
        assert_relative_eq!(index.idf(guitar), 1.0986122886681098, epsilon = 1e-15);
    }

    #[test]
    fn idf_is_zero_when_term_is_everywhere() {
        let corpus = corpus_from(&[("a", "common apple"), ("b", "common pear")]);
        let vocab = build_vocabulary(&corpus).unwrap();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let common = vocab.id("common").unwrap();
        assert_eq!(index.idf(common), 0.0);
    }

    #[test]
    fn idf_is_non_increasing_in_df() {
        let corpus = corpus_from(&[
            ("a", "rare mid wide"),
            ("b", "mid wide filler"),
            ("c", "wide filler padding"),
        ]);
        let vocab = build_vocabulary(&corpus).unwrap();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let rare = index.idf(vocab.id("rare").unwrap());
        let mid = index.idf(vocab.id("mid").unwrap());
        let wide = index.idf(vocab.id("wide").unwrap());
        assert!(rare > mid && mid > wide);
    }

    #[test]
    fn vsm_vector_of_d1() {
        let (corpus, vocab) = tiny();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let v = index.vsm_vector(0);
        assert_eq!(v.nnz(), 3);
        assert_relative_eq!(v.get(vocab.id("music").unwrap()), 0.8109302162163288, epsilon = 1e-15);
        assert_relative_eq!(v.get(vocab.id("player").unwrap()), 1.0986122886681098, epsilon = 1e-15);
        assert_relative_eq!(v.get(vocab.id("stream").unwrap()), 1.0986122886681098, epsilon = 1e-15);
    }

    #[test]
    fn vsm_vector_omits_zero_idf_terms() {
        let corpus = corpus_from(&[("a", "common apple"), ("b", "common pear")]);
        let vocab = build_vocabulary(&corpus).unwrap();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let v = index.vsm_vector(0);
        assert_eq!(v.get(vocab.id("common").unwrap()), 0.0);
        assert!(v.get(vocab.id("apple").unwrap()) > 0.0);
    }

    #[test]
    fn vsm_vector_of_empty_doc_is_empty() {
        let corpus = corpus_from(&[("a", "alpha"), ("b", "!!")]);
        let vocab = build_vocabulary(&corpus).unwrap();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        assert!(index.vsm_vector(1).is_empty());
    }

    #[test]
    fn bm25_matches_hand_values() {
        let (corpus, vocab) = tiny();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let music = vocab.id("music").unwrap();
        let q = [music];
        assert_relative_eq!(
            index.bm25(Bm25Params::default(), &q, 0),
            0.5097275644788353,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            index.bm25(Bm25Params::default(), &q, 1),
            0.4694859146515588,
            epsilon = 1e-15
        );
        assert_eq!(index.bm25(Bm25Params::default(), &q, 2), 0.0);
    }

    #[test]
    fn bm25_counts_repeated_query_terms_twice() {
        let (corpus, vocab) = tiny();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let music = vocab.id("music").unwrap();
        let once = index.bm25(Bm25Params::default(), &[music], 0);
        let twice = index.bm25(Bm25Params::default(), &[music, music], 0);
        assert_relative_eq!(twice, 2.0 * once, epsilon = 1e-15);
    }

    #[test]
    fn search_ranks_and_drops_zero_scores() {
        let (corpus, vocab) = tiny();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let music = vocab.id("music").unwrap();
        let hits = index.search(Bm25Params::default(), &[music], 10);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].doc, 0);
        assert_eq!(hits[1].doc, 1);
        assert_relative_eq!(hits[0].score, 0.5097275644788353, epsilon = 1e-15);
        assert_relative_eq!(hits[1].score, 0.4694859146515588, epsilon = 1e-15);
    }

    #[test]
    fn search_respects_topk() {
        let (corpus, vocab) = tiny();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let music = vocab.id("music").unwrap();
        let hits = index.search(Bm25Params::default(), &[music], 1);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].doc, 0);
    }

    #[test]
    fn search_with_empty_query_is_empty() {
        let (corpus, vocab) = tiny();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        assert!(index.search(Bm25Params::default(), &[], 5).is_empty());
    }

    #[test]
    fn equal_scores_break_ties_by_ordinal() {
        let corpus = corpus_from(&[("a", "twin note"), ("b", "twin note"), ("c", "other song")]);
        let vocab = build_vocabulary(&corpus).unwrap();
        let index = InvertedIndex::build(&corpus, &vocab).unwrap();
        let twin = vocab.id("twin").unwrap();
        let hits = index.search(Bm25Params::default(), &[twin], 10);
        assert_eq!(hits.len(), 2);
        assert_eq!((hits[0].doc, hits[1].doc), (0, 1));
        assert_eq!(hits[0].score, hits[1].score);
    }
}
