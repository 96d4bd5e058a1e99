//! Corpus loading, tokenization, vocabulary and relevance judgments.
//!
//! A corpus is a JSONL file of app records; the vocabulary is the sorted set
//! of description tokens; judgments are TSV rows of graded query relevance.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One mobile-app record.
#[derive(Debug, Clone, PartialEq)]
pub struct AppRecord {
    pub app_id: String,
    pub title: String,
    pub description_raw: String,
    pub description_tokens: Vec<String>,
    pub category: String,
    pub package: Option<String>,
}

/// An ordered collection of app records; document ordinals are positions here.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub records: Vec<AppRecord>,
}

impl Corpus {
    pub fn total_docs(&self) -> usize {
        self.records.len()
    }

    /// Ordinal of the record with the given app id.
    pub fn ordinal_of(&self, app_id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.app_id == app_id)
    }
}

/// Sorted term list with its inverse lookup.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    terms: Vec<String>,
    term_to_id: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds directly from a sorted, duplicate-free term list.
    pub fn from_sorted_terms(terms: Vec<String>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        for pair in terms.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidArgument(format!(
                    "vocabulary terms must be strictly ascending, got {:?} before {:?}",
                    pair[0], pair[1]
                )));
            }
        }
        let term_to_id = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Vocabulary { terms, term_to_id })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.term_to_id.get(term).copied()
    }

    /// 16-byte digest binding downstream artifacts to this exact term list.
    pub fn fingerprint(&self) -> [u8; 16] {
        let mut hasher = Sha256::new();
        for term in &self.terms {
            hasher.update(term.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let mut out = [0u8; 16];
        out.copy_from_slice(&digest[..16]);
        out
    }
}

/// One graded relevance judgment row.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryJudgment {
    pub query_id: String,
    pub query_text: String,
    pub app_id: String,
    pub relevance: f64,
}

/// Lowercases, splits on every non-ASCII-alphabetic code point, and keeps
/// fragments of length >= 2. No stemming, no stop-word removal; duplicates
/// and order are preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_ascii_alphabetic())
        .filter(|frag| frag.len() >= 2)
        .map(|frag| frag.to_string())
        .collect()
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    title: String,
    description: String,
    category: String,
    #[serde(default)]
    package: Option<String>,
}

/// Loads a JSONL corpus. Unknown keys are ignored; a malformed line or a
/// duplicate app id is an error.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut seen = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, lineno + 1, format!("bad record: {e}")))?;
        if seen.insert(raw.id.clone(), lineno).is_some() {
            return Err(Error::DuplicateAppId(raw.id));
        }
        let description_tokens = tokenize(&raw.description);
        records.push(AppRecord {
            app_id: raw.id,
            title: raw.title,
            description_raw: raw.description,
            description_tokens,
            category: raw.category,
            package: raw.package,
        });
    }
    Ok(Corpus { records })
}

/// Builds the vocabulary from every description token in the corpus, sorted
/// ascending by code point.
pub fn build_vocabulary(corpus: &Corpus) -> Result<Vocabulary> {
    let mut set = BTreeSet::new();
    for record in &corpus.records {
        for token in &record.description_tokens {
            set.insert(token.clone());
        }
    }
    Vocabulary::from_sorted_terms(set.into_iter().collect())
}

/// Loads a 4-column TSV of judgments: query id, query text, app id, relevance.
/// Relevance must lie in `[0, 2]`. No header row.
pub fn load_judgments(path: &Path) -> Result<Vec<QueryJudgment>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno + 1,
                format!("expected 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        let relevance: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno + 1, format!("bad relevance {:?}", fields[3])))?;
        if !(0.0..=2.0).contains(&relevance) {
            return Err(Error::parse(
                path,
                lineno + 1,
                format!("relevance {relevance} outside [0, 2]"),
            ));
        }
        rows.push(QueryJudgment {
            query_id: fields[0].to_string(),
            query_text: fields[1].to_string(),
            app_id: fields[2].to_string(),
            relevance,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    pub(crate) fn tiny_corpus() -> Corpus {
        let docs = [
            ("d1", "music player stream music"),
            ("d2", "music guitar"),
            ("d3", "shopping list coupons"),
        ];
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

    #[test]
    fn tokenize_splits_and_lowercases() {
        assert_eq!(tokenize("Real Piano!"), vec!["real", "piano"]);
    }

    #[test]
    fn tokenize_drops_short_fragments() {
        assert!(tokenize("a I 4K").is_empty());
    }

    #[test]
    fn tokenize_splits_on_non_ascii() {
        assert_eq!(tokenize("café"), vec!["caf"]);
    }

    #[test]
    fn tokenize_keeps_duplicates_in_order() {
        assert_eq!(tokenize("b-side b-side"), vec!["side", "side"]);
    }

    #[test]
    fn tokenize_is_idempotent_on_its_own_output() {
        let once = tokenize("Stream 100s of HD movies & TV-shows!");
        let again = tokenize(&once.join(" "));
        assert_eq!(once, again);
    }

    #[test]
    fn vocabulary_is_sorted_and_deduplicated() {
        let vocab = build_vocabulary(&tiny_corpus()).unwrap();
        assert_eq!(
            vocab.terms(),
            &["coupons", "guitar", "list", "music", "player", "shopping", "stream"]
        );
        assert_eq!(vocab.id("music"), Some(3));
        assert_eq!(vocab.id("piano"), None);
    }

    #[test]
    fn vocabulary_of_duplicate_token_has_one_entry() {
        let corpus = Corpus {
            records: vec![AppRecord {
                app_id: "x".into(),
                title: "X".into(),
                description_raw: "music music".into(),
                description_tokens: tokenize("music music"),
                category: "misc".into(),
                package: None,
            }],
        };
        let vocab = build_vocabulary(&corpus).unwrap();
        assert_eq!(vocab.terms(), &["music"]);
    }

    #[test]
    fn empty_corpus_has_no_vocabulary() {
        let corpus = Corpus { records: vec![] };
        assert!(matches!(
            build_vocabulary(&corpus),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn vocabulary_ignores_record_order() {
        let mut reversed = tiny_corpus();
        reversed.records.reverse();
        let a = build_vocabulary(&tiny_corpus()).unwrap();
        let b = build_vocabulary(&reversed).unwrap();
        assert_eq!(a.terms(), b.terms());
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn fingerprint_changes_with_terms() {
        let a = Vocabulary::from_sorted_terms(vec!["apple".into(), "pear".into()]).unwrap();
        let b = Vocabulary::from_sorted_terms(vec!["apple".into(), "plum".into()]).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_corpus_reads_jsonl() {
        let f = write_temp(concat!(
            r#"{"id":"a","title":"A","description":"alpha beta","category":"tools"}"#,
            "\n",
            r#"{"id":"b","title":"B","description":"gamma","category":"games","package":"com.b","extra":1}"#,
            "\n",
        ));
        let corpus = load_corpus(f.path()).unwrap();
        assert_eq!(corpus.total_docs(), 2);
        assert_eq!(corpus.records[0].description_tokens, vec!["alpha", "beta"]);
        assert_eq!(corpus.records[1].package.as_deref(), Some("com.b"));
    }

    #[test]
    fn load_corpus_names_bad_line() {
        let f = write_temp("{\"id\":\"a\",\"title\":\"A\",\"description\":\"x y\",\"category\":\"c\"}\nnot json\n");
        let err = load_corpus(f.path()).unwrap_err();
        assert!(err.to_string().contains(":2:"), "got {err}");
    }

    #[test]
    fn load_corpus_rejects_duplicate_id() {
        let row = r#"{"id":"a","title":"A","description":"x y","category":"c"}"#;
        let f = write_temp(&format!("{row}\n{row}\n"));
        let err = load_corpus(f.path()).unwrap_err();
        assert!(matches!(err, Error::DuplicateAppId(ref id) if id == "a"), "got {err}");
    }

    #[test]
    fn load_judgments_parses_rows() {
        let f = write_temp("q1\tmusic stream\ta\t2\nq1\tmusic stream\tb\t0\n");
        let rows = load_judgments(f.path()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].query_id, "q1");
        assert_eq!(rows[0].relevance, 2.0);
    }

    #[test]
    fn load_judgments_rejects_out_of_range_relevance() {
        let f = write_temp("q1\tmusic\ta\t2.5\n");
        let err = load_judgments(f.path()).unwrap_err();
        assert!(err.to_string().contains("outside [0, 2]"), "got {err}");
    }

    #[test]
    fn load_judgments_rejects_wrong_arity() {
        let f = write_temp("q1\tmusic\ta\n");
        let err = load_judgments(f.path()).unwrap_err();
        assert!(err.to_string().contains("expected 4"), "got {err}");
    }
}
