//! End-to-end orchestration: a corpus file in, evaluation tables out.
//!
//! Every stage reads its inputs from files (the corpus, plus artifacts under
//! one directory) and writes its outputs back as files, so each stage can run
//! on its own — the CLI maps subcommands onto them one to one — or chained by
//! [`run_pipeline`]. Artifact writes are atomic and every load re-checks the
//! vocabulary fingerprint, so a half-built or mixed-up artifact directory
//! fails loudly instead of producing silently wrong tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::categorize::{
    self, Averaging, ClassifierKind, ClusterAlgorithm, ClusteringResult, LabeledDataset,
};
use crate::corpus::{build_vocabulary, load_corpus, load_judgments, Corpus, Vocabulary};
use crate::embedding::{EmbeddingKind, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::index::{Bm25Params, InvertedIndex};
use crate::neural::{train_autoencoder, train_encoder, TrainConfig};
use crate::reduce::{pca, truncated_svd, ReduceConfig};
use crate::reprs::{build_all_reprs, ReprConfig, WordReprMatrix};
use crate::storage::{
    atomic_write, ensure_fingerprint, load_embedding, load_index, load_reprs, load_vocabulary,
    save_embedding, save_index, save_reprs, save_vocabulary,
};
use crate::tasks::{
    build_app_embeddings, eval_query_expansion, AppEmbeddingSet, ExpansionConfig, Gain,
    QueryExpansionEval,
};

/// File names of the artifacts each stage produces, all relative to
/// [`PipelineConfig::artifacts`].
pub const VOCAB_FILE: &str = "vocab.txt";
pub const INDEX_FILE: &str = "index.relidx";
pub const REPRS_FILE: &str = "reprs.relspr";
pub const QE_RESULTS_FILE: &str = "qe_results.tsv";
pub const CLS_RESULTS_FILE: &str = "cls_results.tsv";
pub const CLU_RESULTS_FILE: &str = "clu_results.tsv";

/// Artifact file name for a word- or app-level embedding of the given kind.
pub fn embedding_file(kind: EmbeddingKind) -> String {
    match kind {
        EmbeddingKind::RelEmb | EmbeddingKind::RelEmbAe => {
            format!("appemb_{}.relemb", kind.as_str())
        }
        _ => format!("{}.relemb", kind.as_str()),
    }
}

/// Artifact file name for the per-epoch loss curve of a trained model.
pub fn loss_file(kind: EmbeddingKind) -> String {
    format!("{}_loss.csv", kind.as_str())
}

fn default_folds() -> usize {
    5
}

fn default_min_pts() -> usize {
    4
}

fn default_averaging() -> Averaging {
    Averaging::Weighted
}

fn default_gain() -> Gain {
    Gain::Linear
}

fn default_seed() -> u64 {
    42
}

/// Everything one pipeline run needs. Serializes to JSON so a run is fully
/// described by a single config file; all numeric fields round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// JSON-lines corpus to ingest.
    pub corpus: PathBuf,
    /// Optional TSV relevance judgments; without them the query-expansion
    /// evaluation is skipped.
    #[serde(default)]
    pub judgments: Option<PathBuf>,
    /// Directory all artifacts are written to (created if missing).
    pub artifacts: PathBuf,
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub repr: ReprConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub reduce: ReduceConfig,
    #[serde(default)]
    pub expansion: ExpansionConfig,
    /// Cross-validation folds for the classification evaluation.
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// DBSCAN neighborhood size.
    #[serde(default = "default_min_pts")]
    pub min_pts: usize,
    /// DBSCAN radius; estimated from the data when absent.
    #[serde(default)]
    pub eps: Option<f64>,
    /// k for k-means; defaults to the number of distinct categories.
    #[serde(default)]
    pub clusters: Option<usize>,
    /// F1 averaging for the classification evaluation.
    #[serde(default = "default_averaging")]
    pub averaging: Averaging,
    /// NDCG gain for the query-expansion evaluation.
    #[serde(default = "default_gain")]
    pub gain: Gain,
    /// L2-normalize app embeddings before clustering.
    #[serde(default)]
    pub normalize: bool,
    /// Seed for the evaluation stages (fold shuffling, k-means init, eps
    /// estimation). Training and reduction seeds live in their own configs.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl PipelineConfig {
    /// A config with default parameters everywhere, evaluating QE only if a
    /// judgments path is given.
    pub fn new(corpus: PathBuf, judgments: Option<PathBuf>, artifacts: PathBuf) -> Self {
        PipelineConfig {
            corpus,
            judgments,
            artifacts,
            bm25: Bm25Params::default(),
            repr: ReprConfig::default(),
            train: TrainConfig::default(),
            reduce: ReduceConfig::default(),
            expansion: ExpansionConfig::default(),
            folds: default_folds(),
            min_pts: default_min_pts(),
            eps: None,
            clusters: None,
            averaging: default_averaging(),
            gain: default_gain(),
            normalize: false,
            seed: default_seed(),
        }
    }

    /// Absolute path of an artifact by file name.
    pub fn artifact(&self, name: &str) -> PathBuf {
        self.artifacts.join(name)
    }
}

/// Reads a pipeline config from a JSON file.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

/// Writes a pipeline config as pretty JSON.
pub fn save_config(config: &PipelineConfig, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(config)
        .map_err(|e| Error::InvalidArgument(format!("config not serializable: {e}")))?;
    atomic_write(path, |w| {
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn ensure_artifact_dir(config: &PipelineConfig) -> Result<()> {
    std::fs::create_dir_all(&config.artifacts)?;
    Ok(())
}

fn load_corpus_and_vocab(config: &PipelineConfig) -> Result<(Corpus, Vocabulary)> {
    let corpus = load_corpus(&config.corpus)?;
    let vocab = load_vocabulary(&config.artifact(VOCAB_FILE))?;
    Ok((corpus, vocab))
}

/// Loads the corpus, builds the vocabulary, and saves it. The root of every
/// later fingerprint check.
pub fn stage_ingest(config: &PipelineConfig) -> Result<Vocabulary> {
    ensure_artifact_dir(config)?;
    let corpus = load_corpus(&config.corpus)?;
    let vocab = build_vocabulary(&corpus)?;
    save_vocabulary(&vocab, &config.artifact(VOCAB_FILE))?;
    log::info!(
        "ingested {} records, vocabulary of {} terms",
        corpus.total_docs(),
        vocab.len()
    );
    Ok(vocab)
}

/// Builds the inverted index from the corpus and saved vocabulary.
pub fn stage_index(config: &PipelineConfig) -> Result<InvertedIndex> {
    ensure_artifact_dir(config)?;
    let (corpus, vocab) = load_corpus_and_vocab(config)?;
    let index = InvertedIndex::build(&corpus, &vocab)?;
    save_index(&index, &config.artifact(INDEX_FILE))?;
    log::info!(
        "indexed {} documents over {} terms",
        index.total_docs(),
        index.vocab_size()
    );
    Ok(index)
}

/// Builds the sparse relevance-feedback representation of every vocabulary
/// term from the saved index.
pub fn stage_reprs(config: &PipelineConfig) -> Result<WordReprMatrix> {
    ensure_artifact_dir(config)?;
    let index = load_index(&config.artifact(INDEX_FILE))?;
    let reprs = build_all_reprs(&index, config.bm25, config.repr);
    save_reprs(&reprs, &config.artifact(REPRS_FILE))?;
    let nnz: usize = reprs.rows.iter().map(|r| r.nnz()).sum();
    log::info!(
        "built {} representations of width {} ({} nonzeros)",
        reprs.n_rows(),
        reprs.cols,
        nnz
    );
    Ok(reprs)
}

fn save_loss_csv(losses: &[f64], path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        w.write_all(b"epoch,loss\n")?;
        for (i, loss) in losses.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, loss)?;
        }
        Ok(())
    })
}

/// Trains the relevance encoder on the saved representations and stores the
/// resulting word embedding plus its loss curve.
pub fn stage_train_encoder(config: &PipelineConfig) -> Result<EmbeddingMatrix> {
    ensure_artifact_dir(config)?;
    let reprs = load_reprs(&config.artifact(REPRS_FILE))?;
    let trained = train_encoder(&reprs, &config.train)?;
    save_embedding(
        &trained.embedding,
        reprs.fingerprint,
        &config.artifact(&embedding_file(EmbeddingKind::WordEmb)),
    )?;
    save_loss_csv(
        &trained.loss_history,
        &config.artifact(&loss_file(EmbeddingKind::WordEmb)),
    )?;
    log_final_loss("encoder", &trained.loss_history);
    Ok(trained.embedding)
}

/// Trains the autoencoder on the saved representations and stores the
/// resulting word embedding plus its loss curve.
pub fn stage_train_autoencoder(config: &PipelineConfig) -> Result<EmbeddingMatrix> {
    ensure_artifact_dir(config)?;
    let reprs = load_reprs(&config.artifact(REPRS_FILE))?;
    let trained = train_autoencoder(&reprs, &config.train)?;
    save_embedding(
        &trained.embedding,
        reprs.fingerprint,
        &config.artifact(&embedding_file(EmbeddingKind::WordEmbAe)),
    )?;
    save_loss_csv(
        &trained.loss_history,
        &config.artifact(&loss_file(EmbeddingKind::WordEmbAe)),
    )?;
    log_final_loss("autoencoder", &trained.loss_history);
    Ok(trained.embedding)
}

fn log_final_loss(what: &str, losses: &[f64]) {
    if let Some(last) = losses.last() {
        log::info!("{what} trained for {} epochs, final loss {last:.6}", losses.len());
    }
}

/// Shrinks the requested dimensionality so the factorization stays within the
/// rank the matrix can support; small corpora would otherwise be rejected.
fn clamped_reduce(config: &ReduceConfig, n_rows: usize, cols: usize) -> ReduceConfig {
    let min_dim = n_rows.min(cols);
    let dim = config.dim.min(min_dim);
    let oversampling = config.oversampling.min(min_dim - dim);
    if dim != config.dim || oversampling != config.oversampling {
        log::warn!(
            "reduction clamped to dim {dim}, oversampling {oversampling} \
             (matrix is {n_rows}x{cols})"
        );
    }
    ReduceConfig {
        dim,
        oversampling,
        ..*config
    }
}

/// Factorizes the saved representations with truncated SVD and stores the
/// projected word embedding.
pub fn stage_reduce_svd(config: &PipelineConfig) -> Result<EmbeddingMatrix> {
    ensure_artifact_dir(config)?;
    let reprs = load_reprs(&config.artifact(REPRS_FILE))?;
    let reduce = clamped_reduce(&config.reduce, reprs.n_rows(), reprs.cols);
    let result = truncated_svd(&reprs, &reduce)?;
    save_embedding(
        &result.embedding,
        reprs.fingerprint,
        &config.artifact(&embedding_file(EmbeddingKind::Svd)),
    )?;
    log::info!(
        "svd kept {} components, top singular value {:.6}",
        result.singular_values.len(),
        result.singular_values.first().copied().unwrap_or(0.0)
    );
    Ok(result.embedding)
}

/// Factorizes the saved representations with PCA and stores the projected
/// word embedding.
pub fn stage_reduce_pca(config: &PipelineConfig) -> Result<EmbeddingMatrix> {
    ensure_artifact_dir(config)?;
    let reprs = load_reprs(&config.artifact(REPRS_FILE))?;
    let reduce = clamped_reduce(&config.reduce, reprs.n_rows(), reprs.cols);
    let result = pca(&reprs, &reduce)?;
    save_embedding(
        &result.embedding,
        reprs.fingerprint,
        &config.artifact(&embedding_file(EmbeddingKind::Pca)),
    )?;
    log::info!(
        "pca kept {} components, top explained variance {:.6}",
        result.explained_variance.len(),
        result.explained_variance.first().copied().unwrap_or(0.0)
    );
    Ok(result.embedding)
}

/// Loads a word-level embedding artifact and verifies it matches the saved
/// vocabulary.
pub fn load_word_embedding(config: &PipelineConfig, kind: EmbeddingKind) -> Result<EmbeddingMatrix> {
    let vocab = load_vocabulary(&config.artifact(VOCAB_FILE))?;
    let path = config.artifact(&embedding_file(kind));
    let (matrix, fingerprint) = load_embedding(kind, &path)?;
    ensure_fingerprint(vocab.fingerprint(), fingerprint, &path.display().to_string())?;
    if matrix.rows() != vocab.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} has {} rows but the vocabulary has {} terms",
            path.display(),
            matrix.rows(),
            vocab.len()
        )));
    }
    Ok(matrix)
}

/// Which word embedding feeds each app-level embedding.
fn app_source(kind: EmbeddingKind) -> Result<EmbeddingKind> {
    match kind {
        EmbeddingKind::RelEmb => Ok(EmbeddingKind::WordEmb),
        EmbeddingKind::RelEmbAe => Ok(EmbeddingKind::WordEmbAe),
        other => Err(Error::InvalidArgument(format!(
            "no app-level embedding is defined for {:?}",
            other
        ))),
    }
}

/// Aggregates a trained word embedding into one vector per app and stores the
/// result.
pub fn stage_embed_apps(config: &PipelineConfig, kind: EmbeddingKind) -> Result<AppEmbeddingSet> {
    ensure_artifact_dir(config)?;
    let (corpus, vocab) = load_corpus_and_vocab(config)?;
    let wordemb = load_word_embedding(config, app_source(kind)?)?;
    let set = build_app_embeddings(&corpus, &vocab, &wordemb, kind)?;
    save_embedding(&set.matrix, vocab.fingerprint(), &config.artifact(&embedding_file(kind)))?;
    log::info!(
        "embedded {} apps into {} dimensions ({})",
        set.matrix.rows(),
        set.matrix.cols(),
        kind.as_str()
    );
    Ok(set)
}

/// Loads a saved app-level embedding and re-attaches the corpus app ids.
pub fn load_app_embeddings(config: &PipelineConfig, kind: EmbeddingKind) -> Result<AppEmbeddingSet> {
    let (corpus, vocab) = load_corpus_and_vocab(config)?;
    let path = config.artifact(&embedding_file(kind));
    let (matrix, fingerprint) = load_embedding(kind, &path)?;
    ensure_fingerprint(vocab.fingerprint(), fingerprint, &path.display().to_string())?;
    if matrix.rows() != corpus.total_docs() {
        return Err(Error::ShapeMismatch(format!(
            "{} has {} rows but the corpus has {} apps",
            path.display(),
            matrix.rows(),
            corpus.total_docs()
        )));
    }
    let app_ids = corpus.records.iter().map(|r| r.app_id.clone()).collect();
    Ok(AppEmbeddingSet { app_ids, matrix })
}

/// The word-level methods compared in the query-expansion table, in column
/// order after the plain-search baseline.
pub const QE_METHODS: [EmbeddingKind; 4] = [
    EmbeddingKind::Svd,
    EmbeddingKind::Pca,
    EmbeddingKind::WordEmbAe,
    EmbeddingKind::WordEmb,
];

/// Evaluates retrieval with and without embedding-based query expansion and
/// writes the NDCG table. The baseline row always runs; an embedding method
/// is included when its artifact exists.
pub fn stage_eval_qe(config: &PipelineConfig) -> Result<Vec<QueryExpansionEval>> {
    ensure_artifact_dir(config)?;
    let judgments_path = config.judgments.as_ref().ok_or_else(|| {
        Error::InvalidArgument("query-expansion evaluation needs a judgments file".into())
    })?;
    let (corpus, vocab) = load_corpus_and_vocab(config)?;
    let index = load_index(&config.artifact(INDEX_FILE))?;
    ensure_fingerprint(vocab.fingerprint(), index.fingerprint(), "index")?;
    let judgments = load_judgments(judgments_path)?;

    let mut evals = Vec::new();
    evals.push(eval_query_expansion(
        &index,
        &corpus,
        &vocab,
        &judgments,
        None,
        config.bm25,
        &config.expansion,
        config.gain,
    )?);
    for kind in QE_METHODS {
        let path = config.artifact(&embedding_file(kind));
        if !path.exists() {
            log::warn!(
                "skipping {} in the query-expansion table: {} not found",
                kind.as_str(),
                path.display()
            );
            continue;
        }
        let matrix = load_word_embedding(config, kind)?;
        evals.push(eval_query_expansion(
            &index,
            &corpus,
            &vocab,
            &judgments,
            Some(&matrix),
            config.bm25,
            &config.expansion,
            config.gain,
        )?);
    }
    write_qe_tsv(&evals, &config.artifact(QE_RESULTS_FILE))?;
    Ok(evals)
}

fn write_qe_tsv(evals: &[QueryExpansionEval], path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        let mut header = String::from("metric");
        for eval in evals {
            header.push('\t');
            header.push_str(&eval.method);
        }
        writeln!(w, "{header}")?;
        for (label, pick) in [
            ("NDCG@3", 0usize),
            ("NDCG@5", 1),
            ("NDCG@10", 2),
        ] {
            let mut line = String::from(label);
            for eval in evals {
                let value = match pick {
                    0 => eval.ndcg3,
                    1 => eval.ndcg5,
                    _ => eval.ndcg10,
                };
                line.push('\t');
                line.push_str(&format!("{value:.6}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

/// One classifier score on one app-level embedding, as a percentage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyCell {
    pub classifier: String,
    pub embedding: String,
    pub f1_percent: f64,
}

/// The app-level embeddings compared in the classification and clustering
/// tables, in column order.
pub const APP_METHODS: [EmbeddingKind; 2] = [EmbeddingKind::RelEmb, EmbeddingKind::RelEmbAe];

fn labeled_dataset(corpus: &Corpus, set: &AppEmbeddingSet) -> Result<LabeledDataset> {
    let mut names: Vec<String> = corpus
        .records
        .iter()
        .map(|r| r.category.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    names.sort();
    let id_of: BTreeMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, name)| (name.as_str(), i))
        .collect();
    let labels = corpus
        .records
        .iter()
        .map(|r| id_of[r.category.as_str()])
        .collect();
    let features = (0..set.matrix.rows())
        .map(|i| set.matrix.row(i).to_vec())
        .collect();
    LabeledDataset::new(features, labels, names)
}

/// Scores both classifiers on every saved app-level embedding with K-fold
/// cross-validation and writes the F1 table.
pub fn stage_classify(config: &PipelineConfig) -> Result<Vec<ClassifyCell>> {
    ensure_artifact_dir(config)?;
    let corpus = load_corpus(&config.corpus)?;
    let mut columns = Vec::new();
    for kind in APP_METHODS {
        let set = load_app_embeddings(config, kind)?;
        let dataset = labeled_dataset(&corpus, &set)?;
        let mut scores = Vec::new();
        for classifier in [ClassifierKind::Svm, ClassifierKind::DecisionTree] {
            let f1 = categorize::evaluate_classifier(
                &dataset,
                classifier,
                config.folds,
                config.averaging,
                config.seed,
            )?;
            scores.push(ClassifyCell {
                classifier: classifier.as_str().to_string(),
                embedding: kind.as_str().to_string(),
                f1_percent: f1,
            });
        }
        columns.push(scores);
    }
    let cells: Vec<ClassifyCell> = columns.into_iter().flatten().collect();
    write_cls_tsv(&cells, &config.artifact(CLS_RESULTS_FILE))?;
    Ok(cells)
}

fn write_cls_tsv(cells: &[ClassifyCell], path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        let mut header = String::from("classifier");
        for kind in APP_METHODS {
            header.push('\t');
            header.push_str(kind.as_str());
        }
        writeln!(w, "{header}")?;
        for classifier in ["svm", "tree"] {
            let mut line = String::from(classifier);
            for kind in APP_METHODS {
                let cell = cells
                    .iter()
                    .find(|c| c.classifier == classifier && c.embedding == kind.as_str());
                line.push('\t');
                match cell {
                    Some(c) => line.push_str(&format!("{:.6}", c.f1_percent)),
                    None => line.push_str("NA"),
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

/// One clustering run on one app-level embedding. Metrics are absent when
/// they are undefined for the produced labeling (for example DBSCAN finding a
/// single cluster).
#[derive(Debug, Clone, Serialize)]
pub struct ClusterCell {
    pub embedding: String,
    pub algorithm: String,
    #[serde(skip)]
    pub result: Option<ClusteringResult>,
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
}

/// Runs k-means and DBSCAN on every saved app-level embedding, scores both
/// validity metrics, and writes the clustering table.
pub fn stage_cluster(config: &PipelineConfig) -> Result<Vec<ClusterCell>> {
    ensure_artifact_dir(config)?;
    let corpus = load_corpus(&config.corpus)?;
    let categories: std::collections::BTreeSet<&str> = corpus
        .records
        .iter()
        .map(|r| r.category.as_str())
        .collect();
    let k = config.clusters.unwrap_or(categories.len().max(1));

    let mut cells = Vec::new();
    for kind in APP_METHODS {
        let set = load_app_embeddings(config, kind)?;
        let mut features: Vec<Vec<f64>> = (0..set.matrix.rows())
            .map(|i| set.matrix.row(i).to_vec())
            .collect();
        if config.normalize {
            categorize::l2_normalize(&mut features);
        }
        for algorithm in [
            ClusterAlgorithm::KMeans { k },
            ClusterAlgorithm::Dbscan {
                eps: config.eps,
                min_pts: config.min_pts,
            },
        ] {
            let name = match algorithm {
                ClusterAlgorithm::KMeans { .. } => "kmeans",
                ClusterAlgorithm::Dbscan { .. } => "dbscan",
            };
            cells.push(cluster_cell(&features, algorithm, name, kind, config.seed));
        }
    }
    write_clu_tsv(&cells, &config.artifact(CLU_RESULTS_FILE))?;
    Ok(cells)
}

fn cluster_cell(
    features: &[Vec<f64>],
    algorithm: ClusterAlgorithm,
    name: &str,
    kind: EmbeddingKind,
    seed: u64,
) -> ClusterCell {
    let mut cell = ClusterCell {
        embedding: kind.as_str().to_string(),
        algorithm: name.to_string(),
        result: None,
        silhouette: None,
        davies_bouldin: None,
    };
    let result = match algorithm {
        ClusterAlgorithm::KMeans { k } => categorize::kmeans(features, k, seed, 100, 1e-9),
        ClusterAlgorithm::Dbscan { eps, min_pts } => {
            let eps = match eps {
                Some(e) => Ok(e),
                None => categorize::estimate_eps(features, min_pts, seed),
            };
            eps.and_then(|e| categorize::dbscan(features, e, min_pts))
        }
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            log::warn!("{name} on {} failed: {e}", kind.as_str());
            return cell;
        }
    };
    match categorize::silhouette(features, &result.labels) {
        Ok(s) => cell.silhouette = Some(s),
        Err(e) => log::warn!("silhouette undefined for {name} on {}: {e}", kind.as_str()),
    }
    match categorize::davies_bouldin(features, &result.labels) {
        Ok(d) => cell.davies_bouldin = Some(d),
        Err(e) => log::warn!(
            "davies-bouldin undefined for {name} on {}: {e}",
            kind.as_str()
        ),
    }
    cell.result = Some(result);
    cell
}

fn write_clu_tsv(cells: &[ClusterCell], path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(w, "embedding\talgorithm\tsilhouette\tdavies_bouldin")?;
        for cell in cells {
            let sil = cell
                .silhouette
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "NA".to_string());
            let db = cell
                .davies_bouldin
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "NA".to_string());
            writeln!(w, "{}\t{}\t{}\t{}", cell.embedding, cell.algorithm, sil, db)?;
        }
        Ok(())
    })
}

/// Everything a full run produced, ready to print or serialize.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    /// Empty when no judgments file was configured.
    pub query_expansion: Vec<QueryExpansionEval>,
    pub classification: Vec<ClassifyCell>,
    pub clustering: Vec<ClusterCell>,
}

/// Runs every stage in dependency order: ingest, index, representations,
/// both trainings, both factorizations, both app aggregations, then the three
/// evaluations. Each stage persists its artifact before the next begins.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    stage_ingest(config)?;
    stage_index(config)?;
    stage_reprs(config)?;
    stage_train_encoder(config)?;
    stage_train_autoencoder(config)?;
    stage_reduce_svd(config)?;
    stage_reduce_pca(config)?;
    stage_embed_apps(config, EmbeddingKind::RelEmb)?;
    stage_embed_apps(config, EmbeddingKind::RelEmbAe)?;
    let query_expansion = if config.judgments.is_some() {
        stage_eval_qe(config)?
    } else {
        log::info!("no judgments configured, skipping the query-expansion evaluation");
        Vec::new()
    };
    let classification = stage_classify(config)?;
    let clustering = stage_cluster(config)?;
    Ok(PipelineReport {
        query_expansion,
        classification,
        clustering,
    })
}
