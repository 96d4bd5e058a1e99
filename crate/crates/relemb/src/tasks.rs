//! Retrieval-side tasks over trained embeddings: app-level aggregation,
//! query expansion, expanded BM25 search, NDCG evaluation, and
//! nearest-neighbor recommendation.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{tokenize, AppRecord, Corpus, QueryJudgment, Vocabulary};
use crate::embedding::{EmbeddingKind, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::index::{rank_positive, Bm25Params, InvertedIndex, ScoredDoc};

/// How query expansion is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    /// Number of expansion terms to add.
    pub k: usize,
    /// Weight of the expansion terms in the second scoring pass.
    pub gamma: f64,
    /// Drop the original query terms from the candidate pool.
    pub exclude_query_terms: bool,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            k: 5,
            gamma: 0.5,
            exclude_query_terms: true,
        }
    }
}

/// Gain function applied to graded relevance inside DCG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gain {
    /// `rel` as-is; the default since relevance grades are real-valued.
    Linear,
    /// `2^rel - 1`.
    Exponential,
}

impl Gain {
    fn apply(self, rel: f64) -> f64 {
        match self {
            Gain::Linear => rel,
            Gain::Exponential => rel.exp2() - 1.0,
        }
    }
}

/// Dense query vector plus the term ids it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector {
    pub vector: Vec<f64>,
    pub source_terms: Vec<u32>,
}

/// App-level embeddings, one row per corpus record.
#[derive(Debug, Clone)]
pub struct AppEmbeddingSet {
    pub app_ids: Vec<String>,
    pub matrix: EmbeddingMatrix,
}

/// Mean NDCG of one method over a judgment set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryExpansionEval {
    pub method: String,
    pub queries: usize,
    pub ndcg3: f64,
    pub ndcg5: f64,
    pub ndcg10: f64,
}

/// Embeds one app: the mean of the embedding rows of its description
/// tokens, every occurrence counted. Tokens outside the vocabulary are
/// skipped; an app with no in-vocabulary token gets the zero vector.
pub fn app_embedding(
    record: &AppRecord,
    vocab: &Vocabulary,
    wordemb: &EmbeddingMatrix,
) -> Vec<f64> {
    let d = wordemb.cols();
    let mut sum = vec![0.0; d];
    let mut count = 0usize;
    for token in &record.description_tokens {
        if let Some(id) = vocab.id(token) {
            for (s, &v) in sum.iter_mut().zip(wordemb.row(id as usize)) {
                *s += v;
            }
            count += 1;
        }
    }
    if count > 0 {
        for s in sum.iter_mut() {
            *s /= count as f64;
        }
    }
    sum
}

/// Builds the full app-embedding set by aggregating a word-level matrix.
/// `kind` names the app-level result and must be [`EmbeddingKind::RelEmb`]
/// or [`EmbeddingKind::RelEmbAe`].
pub fn build_app_embeddings(
    corpus: &Corpus,
    vocab: &Vocabulary,
    wordemb: &EmbeddingMatrix,
    kind: EmbeddingKind,
) -> Result<AppEmbeddingSet> {
    if !matches!(kind, EmbeddingKind::RelEmb | EmbeddingKind::RelEmbAe) {
        return Err(Error::InvalidArgument(format!(
            "app embeddings must be of kind relemb or relembae, got {}",
            kind.as_str()
        )));
    }
    if wordemb.rows() != vocab.len() {
        return Err(Error::ShapeMismatch(format!(
            "word embedding has {} rows but the vocabulary has {} terms",
            wordemb.rows(),
            vocab.len()
        )));
    }
    let d = wordemb.cols();
    let mut data = Vec::with_capacity(corpus.total_docs() * d);
    let mut app_ids = Vec::with_capacity(corpus.total_docs());
    for record in &corpus.records {
        data.extend_from_slice(&app_embedding(record, vocab, wordemb));
        app_ids.push(record.app_id.clone());
    }
    Ok(AppEmbeddingSet {
        app_ids,
        matrix: EmbeddingMatrix::from_data(kind, corpus.total_docs(), d, data)?,
    })
}

/// Builds the dense query vector: the mean of the embedding rows of the
/// in-vocabulary query terms.
pub fn query_vector(
    query_terms: &[String],
    vocab: &Vocabulary,
    wordemb: &EmbeddingMatrix,
) -> Result<QueryVector> {
    let mut source_terms = Vec::new();
    let mut vector = vec![0.0; wordemb.cols()];
    for term in query_terms {
        if let Some(id) = vocab.id(term) {
            for (s, &v) in vector.iter_mut().zip(wordemb.row(id as usize)) {
                *s += v;
            }
            source_terms.push(id);
        }
    }
    if source_terms.is_empty() {
        return Err(Error::AllTermsOov(query_terms.to_vec()));
    }
    for s in vector.iter_mut() {
        *s /= source_terms.len() as f64;
    }
    Ok(QueryVector {
        vector,
        source_terms,
    })
}

/// Ranks expansion candidates by cosine similarity of the query vector
/// against every embedding row. Zero-norm rows never qualify; ties break
/// toward the lexicographically smaller term (term ids follow sorted
/// vocabulary order). Returns `(term_id, similarity)` pairs, best first.
pub fn expand_query(
    qv: &QueryVector,
    wordemb: &EmbeddingMatrix,
    config: &ExpansionConfig,
) -> Vec<(u32, f64)> {
    if config.k == 0 {
        return Vec::new();
    }
    let qnorm = qv.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    if qnorm == 0.0 {
        return Vec::new();
    }
    let excluded: BTreeSet<u32> = if config.exclude_query_terms {
        qv.source_terms.iter().copied().collect()
    } else {
        BTreeSet::new()
    };
    let mut candidates: Vec<(u32, f64)> = Vec::new();
    for row in 0..wordemb.rows() {
        let id = row as u32;
        if excluded.contains(&id) {
            continue;
        }
        if let Some(sim) = wordemb.cosine_to_row(&qv.vector, qnorm, row) {
            candidates.push((id, sim));
        }
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    candidates.truncate(config.k);
    candidates
}

/// Two-pass retrieval: BM25 on the original terms plus `gamma` times BM25
/// on the expansion terms. With `gamma = 0` the scores equal plain
/// [`InvertedIndex::search`] exactly.
pub fn expanded_search(
    index: &InvertedIndex,
    params: Bm25Params,
    query: &[u32],
    expansion: &[u32],
    config: &ExpansionConfig,
    topk: usize,
) -> Vec<ScoredDoc> {
    let mut scores = vec![0.0; index.total_docs()];
    index.accumulate_bm25(params, query, 1.0, &mut scores);
    index.accumulate_bm25(params, expansion, config.gamma, &mut scores);
    rank_positive(&scores, topk)
}

/// Normalized discounted cumulative gain at cutoff `n`. `rel` maps judged
/// ids to their grades; unjudged ids count as zero. The ideal DCG comes
/// from the full judgment list, so relevant documents missing from the
/// ranking still lower the score. An all-zero judgment set yields 0.
pub fn ndcg(ranked_ids: &[String], rel: &BTreeMap<String, f64>, n: usize, gain: Gain) -> f64 {
    let dcg: f64 = ranked_ids
        .iter()
        .take(n)
        .enumerate()
        .map(|(i, id)| {
            let g = gain.apply(rel.get(id).copied().unwrap_or(0.0));
            g / ((i + 2) as f64).log2()
        })
        .sum();
    let mut ideal: Vec<f64> = rel.values().copied().collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(n)
        .enumerate()
        .map(|(i, &r)| gain.apply(r) / ((i + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Scores one retrieval method over a judgment set: per query, tokenize,
/// optionally expand through `embedding`, search, and compute NDCG at
/// cutoffs 3, 5 and 10; report the means. `embedding = None` is the plain
/// BM25 baseline. A query whose terms are all out of vocabulary falls back
/// to plain BM25 with a warning and still counts.
#[allow(clippy::too_many_arguments)]
pub fn eval_query_expansion(
    index: &InvertedIndex,
    corpus: &Corpus,
    vocab: &Vocabulary,
    judgments: &[QueryJudgment],
    embedding: Option<&EmbeddingMatrix>,
    params: Bm25Params,
    config: &ExpansionConfig,
    gain: Gain,
) -> Result<QueryExpansionEval> {
    let mut groups: BTreeMap<&str, (&str, BTreeMap<String, f64>)> = BTreeMap::new();
    for j in judgments {
        let entry = groups
            .entry(&j.query_id)
            .or_insert_with(|| (&j.query_text, BTreeMap::new()));
        entry.1.insert(j.app_id.clone(), j.relevance);
    }
    if groups.is_empty() {
        return Err(Error::InvalidArgument("no judgments to evaluate".into()));
    }
    let method = embedding
        .map(|e| e.kind().as_str().to_string())
        .unwrap_or_else(|| "baseline".to_string());
    let mut sums = [0.0f64; 3];
    for (query_id, (query_text, rel)) in &groups {
        let tokens = tokenize(query_text);
        let ids: Vec<u32> = tokens.iter().filter_map(|t| vocab.id(t)).collect();
        let ranking = match embedding {
            Some(emb) => match query_vector(&tokens, vocab, emb) {
                Ok(qv) => {
                    let expansion: Vec<u32> = expand_query(&qv, emb, config)
                        .into_iter()
                        .map(|(id, _)| id)
                        .collect();
                    expanded_search(index, params, &ids, &expansion, config, 10)
                }
                Err(err) => {
                    log::warn!("query {query_id}: {err}; falling back to plain search");
                    index.search(params, &ids, 10)
                }
            },
            None => index.search(params, &ids, 10),
        };
        let ranked_ids: Vec<String> = ranking
            .iter()
            .map(|sd| corpus.records[sd.doc as usize].app_id.clone())
            .collect();
        for (slot, n) in sums.iter_mut().zip([3usize, 5, 10]) {
            *slot += ndcg(&ranked_ids, rel, n, gain);
        }
    }
    let count = groups.len() as f64;
    Ok(QueryExpansionEval {
        method,
        queries: groups.len(),
        ndcg3: sums[0] / count,
        ndcg5: sums[1] / count,
        ndcg10: sums[2] / count,
    })
}

/// Top-`k` most similar apps to `app_id` by cosine over the app-embedding
/// rows. The query app is excluded; apps with zero embeddings never
/// qualify; ties break toward the lexicographically smaller app id.
pub fn nearest_apps(
    app_id: &str,
    apps: &AppEmbeddingSet,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    let pos = apps
        .app_ids
        .iter()
        .position(|id| id == app_id)
        .ok_or_else(|| Error::UnknownAppId(app_id.to_string()))?;
    let query = apps.matrix.row(pos);
    let qnorm = apps.matrix.row_norm(pos);
    if qnorm == 0.0 {
        return Err(Error::ZeroVector(format!("app embedding of {app_id:?}")));
    }
    let mut hits: Vec<(String, f64)> = Vec::new();
    for (i, other) in apps.app_ids.iter().enumerate() {
        if i == pos {
            continue;
        }
        if let Some(sim) = apps.matrix.cosine_to_row(query, qnorm, i) {
            hits.push((other.clone(), sim));
        }
    }
    hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    hits.truncate(k);
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;
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

    /// One distinct row per term so aggregation is easy to follow by hand.
    fn unit_rows(vocab: &Vocabulary) -> EmbeddingMatrix {
        let n = vocab.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        EmbeddingMatrix::from_data(EmbeddingKind::WordEmb, n, n, data).unwrap()
    }

    #[test]
    fn single_word_app_is_that_words_row() {
        let (corpus, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let one = corpus_from(&[("x", "guitar")]);
        let v = app_embedding(&one.records[0], &vocab, &emb);
        assert_eq!(v, emb.row(vocab.id("guitar").unwrap() as usize));
        drop(corpus);
    }

    #[test]
    fn duplicate_tokens_average_to_the_same_row() {
        let (_, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let one = corpus_from(&[("x", "music music")]);
        let v = app_embedding(&one.records[0], &vocab, &emb);
        assert_eq!(v, emb.row(vocab.id("music").unwrap() as usize));
    }

    #[test]
    fn token_order_does_not_matter() {
        let (_, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let pair = corpus_from(&[("x", "music guitar"), ("y", "guitar music")]);
        let vx = app_embedding(&pair.records[0], &vocab, &emb);
        let vy = app_embedding(&pair.records[1], &vocab, &emb);
        assert_eq!(vx, vy);
    }

    #[test]
    fn oov_tokens_are_skipped_and_all_oov_gives_zero() {
        let (_, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let mixed = corpus_from(&[("x", "music zither"), ("y", "zither oboe")]);
        let vx = app_embedding(&mixed.records[0], &vocab, &emb);
        assert_eq!(vx, emb.row(vocab.id("music").unwrap() as usize));
        let vy = app_embedding(&mixed.records[1], &vocab, &emb);
        assert!(vy.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn app_embedding_set_covers_every_record() {
        let (corpus, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let apps = build_app_embeddings(&corpus, &vocab, &emb, EmbeddingKind::RelEmb).unwrap();
        assert_eq!(apps.app_ids, vec!["d1", "d2", "d3"]);
        assert_eq!(apps.matrix.rows(), 3);
        assert_eq!(apps.matrix.kind(), EmbeddingKind::RelEmb);
    }

    #[test]
    fn app_embedding_set_rejects_word_level_kind() {
        let (corpus, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let err = build_app_embeddings(&corpus, &vocab, &emb, EmbeddingKind::WordEmb).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)), "got {err}");
    }

    #[test]
    fn query_vector_of_single_term_is_its_row() {
        let (_, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let qv = query_vector(&["music".to_string()], &vocab, &emb).unwrap();
        assert_eq!(qv.vector, emb.row(vocab.id("music").unwrap() as usize));
        assert_eq!(qv.source_terms, vec![vocab.id("music").unwrap()]);
    }

    #[test]
    fn query_vector_names_oov_terms_in_error() {
        let (_, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let err = query_vector(&["zither".to_string()], &vocab, &emb).unwrap_err();
        match err {
            Error::AllTermsOov(terms) => assert_eq!(terms, vec!["zither"]),
            other => panic!("expected AllTermsOov, got {other}"),
        }
    }

    #[test]
    fn expansion_with_k_zero_is_empty() {
        let (_, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let qv = query_vector(&["music".to_string()], &vocab, &emb).unwrap();
        let config = ExpansionConfig {
            k: 0,
            ..ExpansionConfig::default()
        };
        assert!(expand_query(&qv, &emb, &config).is_empty());
    }

    #[test]
    fn self_term_tops_expansion_when_not_excluded() {
        let (_, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let qv = query_vector(&["music".to_string()], &vocab, &emb).unwrap();
        let config = ExpansionConfig {
            k: 1,
            exclude_query_terms: false,
            ..ExpansionConfig::default()
        };
        let exp = expand_query(&qv, &emb, &config);
        assert_eq!(exp.len(), 1);
        assert_eq!(exp[0].0, vocab.id("music").unwrap());
        assert_relative_eq!(exp[0].1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn excluded_query_terms_never_appear() {
        let (_, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let qv = query_vector(&["music".to_string()], &vocab, &emb).unwrap();
        let config = ExpansionConfig::default();
        let exp = expand_query(&qv, &emb, &config);
        let music = vocab.id("music").unwrap();
        assert!(exp.iter().all(|&(id, _)| id != music));
    }

    #[test]
    fn expansion_ties_break_toward_smaller_term_id() {
        // Every non-query row is orthogonal to the query, so all candidate
        // similarities tie at zero and ordering is purely lexicographic.
        let (_, vocab, _) = tiny();
        let emb = unit_rows(&vocab);
        let qv = query_vector(&["music".to_string()], &vocab, &emb).unwrap();
        let config = ExpansionConfig {
            k: 3,
            ..ExpansionConfig::default()
        };
        let exp = expand_query(&qv, &emb, &config);
        let ids: Vec<u32> = exp.iter().map(|&(id, _)| id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn gamma_zero_matches_plain_search_exactly() {
        let (_, vocab, index) = tiny();
        let music = vocab.id("music").unwrap();
        let guitar = vocab.id("guitar").unwrap();
        let config = ExpansionConfig {
            gamma: 0.0,
            ..ExpansionConfig::default()
        };
        let expanded =
            expanded_search(&index, Bm25Params::default(), &[music], &[guitar], &config, 10);
        let plain = index.search(Bm25Params::default(), &[music], 10);
        assert_eq!(expanded, plain);
    }

    #[test]
    fn empty_expansion_matches_plain_search_for_any_gamma() {
        let (_, vocab, index) = tiny();
        let music = vocab.id("music").unwrap();
        let config = ExpansionConfig {
            gamma: 7.5,
            ..ExpansionConfig::default()
        };
        let expanded = expanded_search(&index, Bm25Params::default(), &[music], &[], &config, 10);
        let plain = index.search(Bm25Params::default(), &[music], 10);
        assert_eq!(expanded, plain);
    }

    #[test]
    fn expanded_scores_match_hand_computed_sums() {
        // Query "guitar" expanded with "music" at gamma 1: D2 matches both
        // terms, D1 only the expansion term, D3 neither.
        let (_, vocab, index) = tiny();
        let guitar = vocab.id("guitar").unwrap();
        let music = vocab.id("music").unwrap();
        let config = ExpansionConfig {
            gamma: 1.0,
            ..ExpansionConfig::default()
        };
        let hits =
            expanded_search(&index, Bm25Params::default(), &[guitar], &[music], &config, 3);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].doc, 1);
        assert_relative_eq!(hits[0].score, 1.741563301530423, epsilon = 1e-15);
        assert_eq!(hits[1].doc, 0);
        assert_relative_eq!(hits[1].score, 0.5097275644788353, epsilon = 1e-15);
    }

    fn rels(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    fn ids(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ideal_ranking_scores_one() {
        let rel = rels(&[("a", 2.0), ("b", 1.0), ("c", 0.0)]);
        let ranking = ids(&["a", "b", "c"]);
        assert_relative_eq!(ndcg(&ranking, &rel, 3, Gain::Linear), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ndcg_matches_hand_computed_fixture() {
        // Ranked relevances [2, 0, 1]: DCG = 2 + 0 + 1/2 = 2.5;
        // ideal [2, 1, 0]: IDCG = 2 + 1/log2(3) = 2.6309297535714575.
        let rel = rels(&[("a", 2.0), ("b", 1.0), ("c", 0.0)]);
        let ranking = ids(&["a", "c", "b"]);
        assert_relative_eq!(
            ndcg(&ranking, &rel, 3, Gain::Linear),
            0.9502344167898356,
            epsilon = 1e-15
        );
    }

    #[test]
    fn all_zero_judgments_score_zero() {
        let rel = rels(&[("a", 0.0), ("b", 0.0)]);
        assert_eq!(ndcg(&ids(&["a", "b"]), &rel, 3, Gain::Linear), 0.0);
    }

    #[test]
    fn unjudged_documents_count_as_zero_relevance() {
        let rel = rels(&[("a", 2.0)]);
        let with_noise = ndcg(&ids(&["x", "a"]), &rel, 3, Gain::Linear);
        let clean = ndcg(&ids(&["a"]), &rel, 3, Gain::Linear);
        assert!(with_noise < clean);
        assert_relative_eq!(clean, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn swapping_better_doc_earlier_never_hurts() {
        let rel = rels(&[("a", 2.0), ("b", 1.0), ("c", 0.5)]);
        let worse = ndcg(&ids(&["c", "b", "a"]), &rel, 3, Gain::Linear);
        let better = ndcg(&ids(&["a", "b", "c"]), &rel, 3, Gain::Linear);
        assert!(better >= worse);
        for ranking in [["a", "b", "c"], ["c", "a", "b"], ["b", "c", "a"]] {
            let v = ndcg(&ids(&ranking), &rel, 3, Gain::Linear);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn exponential_gain_changes_the_weighting() {
        let rel = rels(&[("a", 2.0), ("b", 1.0)]);
        let lin = ndcg(&ids(&["b", "a"]), &rel, 2, Gain::Linear);
        let exp = ndcg(&ids(&["b", "a"]), &rel, 2, Gain::Exponential);
        // The misranked pair is punished harder when gains are exponential.
        assert!(exp < lin);
    }

    #[test]
    fn missing_relevant_documents_lower_the_ceiling() {
        // "b" is judged relevant but absent from the ranking; IDCG still
        // includes it, so a perfect prefix cannot reach 1.
        let rel = rels(&[("a", 2.0), ("b", 2.0)]);
        let v = ndcg(&ids(&["a"]), &rel, 3, Gain::Linear);
        assert!(v < 1.0 && v > 0.0);
    }

    fn tiny_judgments() -> Vec<QueryJudgment> {
        let mk = |qid: &str, text: &str, app: &str, rel: f64| QueryJudgment {
            query_id: qid.to_string(),
            query_text: text.to_string(),
            app_id: app.to_string(),
            relevance: rel,
        };
        vec![
            mk("q1", "music", "d1", 2.0),
            mk("q1", "music", "d2", 1.0),
            mk("q1", "music", "d3", 0.0),
            mk("q2", "shopping list", "d3", 2.0),
            mk("q2", "shopping list", "d1", 0.0),
        ]
    }

    #[test]
    fn baseline_eval_averages_over_queries() {
        let (corpus, vocab, index) = tiny();
        let eval = eval_query_expansion(
            &index,
            &corpus,
            &vocab,
            &tiny_judgments(),
            None,
            Bm25Params::default(),
            &ExpansionConfig::default(),
            Gain::Linear,
        )
        .unwrap();
        assert_eq!(eval.method, "baseline");
        assert_eq!(eval.queries, 2);
        // Both queries rank their relevant docs ideally under plain BM25.
        assert_relative_eq!(eval.ndcg3, 1.0, epsilon = 1e-12);
        assert_relative_eq!(eval.ndcg10, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eval_with_embedding_reports_method_name() {
        let (corpus, vocab, index) = tiny();
        let emb = unit_rows(&vocab);
        let eval = eval_query_expansion(
            &index,
            &corpus,
            &vocab,
            &tiny_judgments(),
            Some(&emb),
            Bm25Params::default(),
            &ExpansionConfig::default(),
            Gain::Linear,
        )
        .unwrap();
        assert_eq!(eval.method, "wordemb");
        assert!(eval.ndcg5 > 0.0);
    }

    #[test]
    fn eval_without_judgments_is_an_error() {
        let (corpus, vocab, index) = tiny();
        let err = eval_query_expansion(
            &index,
            &corpus,
            &vocab,
            &[],
            None,
            Bm25Params::default(),
            &ExpansionConfig::default(),
            Gain::Linear,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)), "got {err}");
    }

    fn app_set(rows: &[(&str, Vec<f64>)]) -> AppEmbeddingSet {
        let d = rows[0].1.len();
        let data: Vec<f64> = rows.iter().flat_map(|(_, v)| v.clone()).collect();
        AppEmbeddingSet {
            app_ids: rows.iter().map(|(id, _)| id.to_string()).collect(),
            matrix: EmbeddingMatrix::from_data(EmbeddingKind::RelEmb, rows.len(), d, data)
                .unwrap(),
        }
    }

    #[test]
    fn duplicate_app_ranks_first_with_unit_similarity() {
        let apps = app_set(&[
            ("orig", vec![1.0, 2.0]),
            ("copy", vec![2.0, 4.0]),
            ("far", vec![-3.0, 1.0]),
        ]);
        let hits = nearest_apps("orig", &apps, 2).unwrap();
        assert_eq!(hits[0].0, "copy");
        assert_relative_eq!(hits[0].1, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn oversized_k_returns_all_other_apps() {
        let apps = app_set(&[
            ("a", vec![1.0, 0.0]),
            ("b", vec![0.0, 1.0]),
            ("c", vec![1.0, 1.0]),
        ]);
        let hits = nearest_apps("a", &apps, 50).unwrap();
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn zero_embedding_query_is_rejected() {
        let apps = app_set(&[("a", vec![0.0, 0.0]), ("b", vec![1.0, 0.0])]);
        let err = nearest_apps("a", &apps, 3).unwrap_err();
        assert!(matches!(err, Error::ZeroVector(_)), "got {err}");
    }

    #[test]
    fn unknown_app_is_rejected() {
        let apps = app_set(&[("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]);
        let err = nearest_apps("missing", &apps, 3).unwrap_err();
        assert!(matches!(err, Error::UnknownAppId(_)), "got {err}");
    }

    #[test]
    fn similarity_ties_break_by_app_id() {
        let apps = app_set(&[
            ("query", vec![1.0, 0.0]),
            ("zeta", vec![2.0, 0.0]),
            ("alpha", vec![3.0, 0.0]),
        ]);
        let hits = nearest_apps("query", &apps, 2).unwrap();
        assert_eq!(hits[0].0, "alpha");
        assert_eq!(hits[1].0, "zeta");
    }
}
