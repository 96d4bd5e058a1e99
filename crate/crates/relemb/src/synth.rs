//! Deterministic synthetic corpus generator: topic-structured documents
//! with controllable cross-topic vocabulary overlap, one query per topic,
//! and graded relevance judgments. Desk-scale substrate for end-to-end
//! testing of the whole pipeline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::corpus::{tokenize, AppRecord, Corpus, QueryJudgment};
use crate::error::{Error, Result};
use crate::storage::atomic_write;

/// Shape of the generated corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    /// Topic count, at most 25 (one lowercase prefix letter per topic).
    pub topics: usize,
    pub docs_per_topic: usize,
    /// Private words per topic.
    pub vocab_per_topic: usize,
    /// Fraction of `vocab_per_topic` shared between chain-adjacent topics.
    pub overlap: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            topics: 3,
            docs_per_topic: 60,
            vocab_per_topic: 40,
            overlap: 0.1,
            seed: 42,
        }
    }
}

/// Everything the generator produces, kept in memory so tests can inspect
/// topic membership directly.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub corpus: Corpus,
    pub judgments: Vec<QueryJudgment>,
    /// Full sampling pool per topic: private words plus the shared words
    /// of its adjacent pairs.
    pub topic_pools: Vec<BTreeSet<String>>,
    /// Private words only.
    pub private_words: Vec<BTreeSet<String>>,
}

const DOC_LEN_RANGE: std::ops::RangeInclusive<usize> = 15..=30;

fn base26(mut value: usize, width: usize) -> String {
    let mut out = vec![b'a'; width];
    for slot in out.iter_mut().rev() {
        *slot = b'a' + (value % 26) as u8;
        value /= 26;
    }
    String::from_utf8(out).expect("ascii")
}

fn validate(spec: &SyntheticSpec) -> Result<()> {
    if spec.topics == 0 || spec.topics > 25 {
        return Err(Error::InvalidArgument(format!(
            "topics must be in 1..=25, got {}",
            spec.topics
        )));
    }
    if spec.docs_per_topic == 0 {
        return Err(Error::InvalidArgument("docs_per_topic must be positive".into()));
    }
    if spec.vocab_per_topic < 2 {
        return Err(Error::InvalidArgument(
            "vocab_per_topic must be at least 2 (queries use two terms)".into(),
        ));
    }
    if spec.vocab_per_topic > 26 * 26 * 26 {
        return Err(Error::InvalidArgument(format!(
            "vocab_per_topic is capped at {}, got {}",
            26 * 26 * 26,
            spec.vocab_per_topic
        )));
    }
    if !(0.0..=1.0).contains(&spec.overlap) {
        return Err(Error::InvalidArgument(format!(
            "overlap must be in [0, 1], got {}",
            spec.overlap
        )));
    }
    Ok(())
}

/// Generates the corpus, queries and judgments. Same spec, same output,
/// byte for byte.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    validate(spec)?;
    let shared_per_pair = if spec.overlap > 0.0 {
        ((spec.overlap * spec.vocab_per_topic as f64).round() as usize).max(1)
    } else {
        0
    };

    // Vocabulary: topic t owns words "<letter(t)><code>"; the pair
    // (t, t+1) shares words "z<letter(t)><code>".
    let letter = |t: usize| (b'a' + t as u8) as char;
    let private_words: Vec<BTreeSet<String>> = (0..spec.topics)
        .map(|t| {
            (0..spec.vocab_per_topic)
                .map(|i| format!("{}{}", letter(t), base26(i, 3)))
                .collect()
        })
        .collect();
    let shared_words: Vec<BTreeSet<String>> = (0..spec.topics.saturating_sub(1))
        .map(|pair| {
            (0..shared_per_pair)
                .map(|i| format!("z{}{}", letter(pair), base26(i, 2)))
                .collect()
        })
        .collect();
    let topic_pools: Vec<BTreeSet<String>> = (0..spec.topics)
        .map(|t| {
            let mut pool = private_words[t].clone();
            if t > 0 {
                pool.extend(shared_words[t - 1].iter().cloned());
            }
            if t + 1 < spec.topics {
                pool.extend(shared_words[t].iter().cloned());
            }
            pool
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(spec.topics * spec.docs_per_topic);
    let mut topic_term_counts: Vec<BTreeMap<String, usize>> =
        vec![BTreeMap::new(); spec.topics];
    for topic in 0..spec.topics {
        let pool: Vec<&String> = topic_pools[topic].iter().collect();
        for doc in 0..spec.docs_per_topic {
            let len = rng.gen_range(DOC_LEN_RANGE);
            let tokens: Vec<String> = (0..len)
                .map(|_| pool[rng.gen_range(0..pool.len())].clone())
                .collect();
            for token in &tokens {
                if private_words[topic].contains(token) {
                    *topic_term_counts[topic].entry(token.clone()).or_insert(0) += 1;
                }
            }
            let description = tokens.join(" ");
            records.push(AppRecord {
                app_id: format!("t{topic:02}d{doc:03}"),
                title: format!("Synthetic App {topic}-{doc}"),
                description_tokens: tokenize(&description),
                description_raw: description,
                category: format!("topic_{}", letter(topic)),
                package: None,
            });
        }
    }
    let corpus = Corpus { records };

    // One query per topic: its two most frequent private words, ties
    // toward the lexicographically smaller word.
    let mut judgments = Vec::new();
    #[allow(clippy::needless_range_loop)] // `topic` also names ids and pools below
    for topic in 0..spec.topics {
        let mut by_count: Vec<(&String, usize)> = topic_term_counts[topic]
            .iter()
            .map(|(w, &c)| (w, c))
            .collect();
        by_count.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if by_count.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "topic {topic} produced fewer than 2 distinct private words; \
                 increase docs_per_topic"
            )));
        }
        let query_text = format!("{} {}", by_count[0].0, by_count[1].0);
        let query_id = format!("q{topic:02}");
        for record in &corpus.records {
            let doc_topic: usize = record.app_id[1..3].parse().expect("generated id");
            let relevance = if doc_topic == topic {
                2.0
            } else if shared_per_pair > 0 && doc_topic.abs_diff(topic) == 1 {
                1.0
            } else {
                0.0
            };
            judgments.push(QueryJudgment {
                query_id: query_id.clone(),
                query_text: query_text.clone(),
                app_id: record.app_id.clone(),
                relevance,
            });
        }
    }

    Ok(SyntheticData {
        corpus,
        judgments,
        topic_pools,
        private_words,
    })
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    id: &'a str,
    title: &'a str,
    description: &'a str,
    category: &'a str,
}

/// Writes a corpus as JSONL, one record per line, in corpus order.
pub fn write_corpus_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        for record in &corpus.records {
            let line = serde_json::to_string(&JsonRecord {
                id: &record.app_id,
                title: &record.title,
                description: &record.description_raw,
                category: &record.category,
            })
            .map_err(|e| Error::InvalidArgument(format!("json encoding failed: {e}")))?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

/// Writes judgments as TSV: query_id, query_text, app_id, relevance.
pub fn write_judgments_tsv(judgments: &[QueryJudgment], path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        for j in judgments {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                j.query_id, j.query_text, j.app_id, j.relevance
            )?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, load_corpus, load_judgments};
    use crate::index::{Bm25Params, InvertedIndex};

    fn spec(topics: usize, overlap: f64, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            topics,
            docs_per_topic: 20,
            vocab_per_topic: 10,
            overlap,
            seed,
        }
    }

    #[test]
    fn record_and_judgment_counts_match_the_spec() {
        let data = generate_synthetic(&SyntheticSpec::default()).unwrap();
        assert_eq!(data.corpus.records.len(), 180);
        let query_ids: BTreeSet<&String> =
            data.judgments.iter().map(|j| &j.query_id).collect();
        assert_eq!(query_ids.len(), 3);
        assert_eq!(data.judgments.len(), 3 * 180);
    }

    #[test]
    fn zero_overlap_keeps_topic_pools_disjoint() {
        let data = generate_synthetic(&spec(3, 0.0, 1)).unwrap();
        for a in 0..3 {
            for b in (a + 1)..3 {
                assert!(data.topic_pools[a].is_disjoint(&data.topic_pools[b]));
            }
        }
    }

    #[test]
    fn zero_overlap_queries_never_hit_other_topics() {
        let data = generate_synthetic(&spec(3, 0.0, 2)).unwrap();
        let vocab = build_vocabulary(&data.corpus).unwrap();
        let index = InvertedIndex::build(&data.corpus, &vocab).unwrap();
        let queries: BTreeMap<&String, &String> = data
            .judgments
            .iter()
            .map(|j| (&j.query_id, &j.query_text))
            .collect();
        for (query_id, text) in queries {
            let topic: usize = query_id[1..].parse().unwrap();
            let ids: Vec<u32> = tokenize(text)
                .iter()
                .map(|t| vocab.id(t).unwrap())
                .collect();
            for hit in index.search(Bm25Params::default(), &ids, 1000) {
                let doc_topic: usize = data.corpus.records[hit.doc as usize].app_id[1..3]
                    .parse()
                    .unwrap();
                assert_eq!(doc_topic, topic, "query {query_id} leaked across topics");
            }
        }
    }

    #[test]
    fn positive_overlap_shares_words_between_neighbors() {
        let data = generate_synthetic(&spec(3, 0.2, 3)).unwrap();
        let shared01: BTreeSet<_> = data.topic_pools[0]
            .intersection(&data.topic_pools[1])
            .collect();
        let shared02: BTreeSet<_> = data.topic_pools[0]
            .intersection(&data.topic_pools[2])
            .collect();
        assert!(!shared01.is_empty());
        assert!(shared02.is_empty(), "non-adjacent topics must not overlap");
    }

    #[test]
    fn judgments_grade_same_topic_two_adjacent_one() {
        let data = generate_synthetic(&spec(3, 0.2, 4)).unwrap();
        for j in &data.judgments {
            let q_topic: usize = j.query_id[1..].parse().unwrap();
            let d_topic: usize = j.app_id[1..3].parse().unwrap();
            let expected = if q_topic == d_topic {
                2.0
            } else if q_topic.abs_diff(d_topic) == 1 {
                1.0
            } else {
                0.0
            };
            assert_eq!(j.relevance, expected, "judgment {j:?}");
        }
    }

    #[test]
    fn zero_overlap_has_no_grade_one_judgments() {
        let data = generate_synthetic(&spec(3, 0.0, 5)).unwrap();
        assert!(data.judgments.iter().all(|j| j.relevance != 1.0));
    }

    #[test]
    fn query_terms_are_private_words_of_their_topic() {
        let data = generate_synthetic(&SyntheticSpec::default()).unwrap();
        let queries: BTreeMap<&String, &String> = data
            .judgments
            .iter()
            .map(|j| (&j.query_id, &j.query_text))
            .collect();
        for (query_id, text) in queries {
            let topic: usize = query_id[1..].parse().unwrap();
            let words = tokenize(text);
            assert_eq!(words.len(), 2);
            assert_ne!(words[0], words[1]);
            for w in &words {
                assert!(data.private_words[topic].contains(w), "{w} not private");
            }
        }
    }

    #[test]
    fn descriptions_tokenize_to_themselves() {
        let data = generate_synthetic(&spec(2, 0.1, 6)).unwrap();
        for record in &data.corpus.records {
            let split: Vec<String> = record
                .description_raw
                .split(' ')
                .map(str::to_string)
                .collect();
            assert_eq!(record.description_tokens, split);
            assert!((15..=30).contains(&split.len()));
        }
    }

    #[test]
    fn same_seed_gives_byte_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec::default();
        let mut bytes = Vec::new();
        for run in 0..2 {
            let data = generate_synthetic(&spec).unwrap();
            let corpus_path = dir.path().join(format!("corpus{run}.jsonl"));
            let judg_path = dir.path().join(format!("judg{run}.tsv"));
            write_corpus_jsonl(&data.corpus, &corpus_path).unwrap();
            write_judgments_tsv(&data.judgments, &judg_path).unwrap();
            bytes.push((
                std::fs::read(&corpus_path).unwrap(),
                std::fs::read(&judg_path).unwrap(),
            ));
        }
        assert_eq!(bytes[0], bytes[1]);
    }

    #[test]
    fn different_seeds_give_different_corpora() {
        let a = generate_synthetic(&spec(2, 0.1, 1)).unwrap();
        let b = generate_synthetic(&spec(2, 0.1, 2)).unwrap();
        let texts = |d: &SyntheticData| -> Vec<String> {
            d.corpus
                .records
                .iter()
                .map(|r| r.description_raw.clone())
                .collect()
        };
        assert_ne!(texts(&a), texts(&b));
    }

    #[test]
    fn written_files_load_back_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let data = generate_synthetic(&spec(3, 0.1, 7)).unwrap();
        let corpus_path = dir.path().join("corpus.jsonl");
        let judg_path = dir.path().join("judgments.tsv");
        write_corpus_jsonl(&data.corpus, &corpus_path).unwrap();
        write_judgments_tsv(&data.judgments, &judg_path).unwrap();
        let corpus = load_corpus(&corpus_path).unwrap();
        assert_eq!(corpus.records.len(), data.corpus.records.len());
        for (loaded, original) in corpus.records.iter().zip(&data.corpus.records) {
            assert_eq!(loaded, original);
        }
        let judgments = load_judgments(&judg_path).unwrap();
        assert_eq!(judgments, data.judgments);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        for bad in [
            SyntheticSpec {
                topics: 0,
                ..SyntheticSpec::default()
            },
            SyntheticSpec {
                topics: 26,
                ..SyntheticSpec::default()
            },
            SyntheticSpec {
                vocab_per_topic: 1,
                ..SyntheticSpec::default()
            },
            SyntheticSpec {
                overlap: 1.5,
                ..SyntheticSpec::default()
            },
            SyntheticSpec {
                docs_per_topic: 0,
                ..SyntheticSpec::default()
            },
        ] {
            assert!(generate_synthetic(&bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn categories_name_the_topics() {
        let data = generate_synthetic(&spec(2, 0.0, 8)).unwrap();
        let categories: BTreeSet<&String> =
            data.corpus.records.iter().map(|r| &r.category).collect();
        assert_eq!(categories.len(), 2);
        assert!(categories.contains(&"topic_a".to_string()));
        assert!(categories.contains(&"topic_b".to_string()));
    }
}
