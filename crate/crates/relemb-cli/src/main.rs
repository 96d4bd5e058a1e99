//! Command-line front end for the relemb pipeline.
//!
//! Every subcommand wraps one library stage: it reads declared inputs, writes
//! declared artifacts atomically, and exits nonzero with a diagnostic on any
//! failure. `pipeline` chains all stages and emits the three result tables.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use relemb::categorize::Averaging;
use relemb::corpus::{load_corpus, tokenize};
use relemb::embedding::EmbeddingKind;
use relemb::index::Bm25Params;
use relemb::pipeline::{
    self, PipelineConfig, CLS_RESULTS_FILE, CLU_RESULTS_FILE, QE_RESULTS_FILE,
};
use relemb::storage::{ensure_fingerprint, load_index, load_vocabulary};
use relemb::synth::{generate_synthetic, write_corpus_jsonl, write_judgments_tsv, SyntheticSpec};
use relemb::tasks::{expand_query, nearest_apps, query_vector, Gain};

#[derive(Parser)]
#[command(
    name = "relemb",
    version,
    about = "Relevance-based word and app embeddings: index, train, evaluate"
)]
struct Cli {
    /// More logging per repeat (-v info, -vv debug); warnings always print.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ArtifactsArg {
    /// Directory all pipeline artifacts live in.
    #[arg(long, default_value = "artifacts")]
    artifacts: PathBuf,
}

#[derive(Args)]
struct CorpusArg {
    /// JSON-lines corpus of app records.
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Args)]
struct Bm25Args {
    /// BM25 term-frequency saturation.
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    /// BM25 length normalization in [0, 1].
    #[arg(long, default_value_t = 0.75)]
    b: f64,
}

impl Bm25Args {
    fn params(&self) -> Bm25Params {
        Bm25Params {
            k1: self.k1,
            b: self.b,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Hidden-layer width (the embedding dimension).
    #[arg(long, default_value_t = 300)]
    hidden: usize,
    /// Training epochs.
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Mini-batch size.
    #[arg(long, default_value_t = 64)]
    batch: usize,
    /// Seed for weight init and batch shuffling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReduceArgs {
    /// Components to keep.
    #[arg(long, default_value_t = 300)]
    dim: usize,
    /// Extra sketch columns beyond `dim`.
    #[arg(long, default_value_t = 8)]
    oversampling: usize,
    /// Subspace power iterations.
    #[arg(long, default_value_t = 4)]
    power_iterations: usize,
    /// Seed for the random sketch.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExpansionArgs {
    /// Expansion terms added per query.
    #[arg(long, default_value_t = 5)]
    k_expansion: usize,
    /// Weight of expansion-term scores.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
}

#[derive(Copy, Clone, ValueEnum)]
enum GainArg {
    Linear,
    Exponential,
}

impl From<GainArg> for Gain {
    fn from(value: GainArg) -> Gain {
        match value {
            GainArg::Linear => Gain::Linear,
            GainArg::Exponential => Gain::Exponential,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum AveragingArg {
    Micro,
    Macro,
    Weighted,
}

impl From<AveragingArg> for Averaging {
    fn from(value: AveragingArg) -> Averaging {
        match value {
            AveragingArg::Micro => Averaging::Micro,
            AveragingArg::Macro => Averaging::Macro,
            AveragingArg::Weighted => Averaging::Weighted,
        }
    }
}

fn parse_kind(s: &str) -> Result<EmbeddingKind, String> {
    s.parse().map_err(|e: relemb::Error| e.to_string())
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)] // parsed once at startup; boxing buys nothing
enum Command {
    /// Build the vocabulary from a corpus.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        artifacts: ArtifactsArg,
    },
    /// Build the inverted index from the corpus and saved vocabulary.
    BuildIndex {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        artifacts: ArtifactsArg,
    },
    /// Rank documents for a query with BM25.
    Search {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        artifacts: ArtifactsArg,
        #[command(flatten)]
        bm25: Bm25Args,
        /// Query text, tokenized like descriptions.
        #[arg(long)]
        query: String,
        /// Results to print.
        #[arg(long, default_value_t = 10)]
        topk: usize,
    },
    /// Build sparse relevance representations for every vocabulary term.
    BuildReprs {
        #[command(flatten)]
        artifacts: ArtifactsArg,
        #[command(flatten)]
        bm25: Bm25Args,
        /// Feedback documents per term.
        #[arg(long, default_value_t = 10)]
        topdocs: usize,
    },
    /// Train the relevance encoder and save its word embedding.
    TrainEncoder {
        #[command(flatten)]
        artifacts: ArtifactsArg,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Train the autoencoder and save its word embedding.
    TrainAutoencoder {
        #[command(flatten)]
        artifacts: ArtifactsArg,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Factorize the representations with truncated SVD.
    ReduceSvd {
        #[command(flatten)]
        artifacts: ArtifactsArg,
        #[command(flatten)]
        reduce: ReduceArgs,
    },
    /// Factorize the representations with PCA.
    ReducePca {
        #[command(flatten)]
        artifacts: ArtifactsArg,
        #[command(flatten)]
        reduce: ReduceArgs,
    },
    /// Aggregate a word embedding into one vector per app.
    EmbedApps {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        artifacts: ArtifactsArg,
        /// App-level embedding to build: relemb or relembae.
        #[arg(long, default_value = "relemb", value_parser = parse_kind)]
        kind: EmbeddingKind,
    },
    /// Print the expansion terms an embedding proposes for a query.
    Expand {
        #[command(flatten)]
        artifacts: ArtifactsArg,
        /// Query text.
        #[arg(long)]
        query: String,
        /// Word embedding to expand with.
        #[arg(long, default_value = "wordemb", value_parser = parse_kind)]
        kind: EmbeddingKind,
        #[command(flatten)]
        expansion: ExpansionArgs,
    },
    /// Score retrieval with and without expansion against judgments.
    EvalQe {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        artifacts: ArtifactsArg,
        /// TSV relevance judgments (query_id, query_text, app_id, relevance).
        #[arg(long)]
        judgments: Option<PathBuf>,
        #[command(flatten)]
        bm25: Bm25Args,
        #[command(flatten)]
        expansion: ExpansionArgs,
        /// NDCG gain function.
        #[arg(long, value_enum, default_value_t = GainArg::Linear)]
        gain: GainArg,
        /// Print the results as JSON instead of the TSV table.
        #[arg(long)]
        json: bool,
    },
    /// Print the nearest apps to one app by embedding similarity.
    Knn {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        artifacts: ArtifactsArg,
        /// The app to look around.
        #[arg(long)]
        app_id: String,
        /// Neighbors to print.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// App-level embedding to use: relemb or relembae.
        #[arg(long, default_value = "relemb", value_parser = parse_kind)]
        kind: EmbeddingKind,
    },
    /// Cross-validate both classifiers on the app embeddings.
    Classify {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        artifacts: ArtifactsArg,
        /// Cross-validation folds.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// F1 averaging mode.
        #[arg(long, value_enum, default_value_t = AveragingArg::Weighted)]
        averaging: AveragingArg,
        #[arg(long)]
        seed: Option<u64>,
        /// Print the results as JSON instead of the TSV table.
        #[arg(long)]
        json: bool,
    },
    /// Cluster the app embeddings and score cluster validity.
    Cluster {
        #[command(flatten)]
        corpus: CorpusArg,
        #[command(flatten)]
        artifacts: ArtifactsArg,
        /// k for k-means; defaults to the number of distinct categories.
        #[arg(long)]
        clusters: Option<usize>,
        /// DBSCAN radius; estimated from the data when absent.
        #[arg(long)]
        eps: Option<f64>,
        /// DBSCAN neighborhood size.
        #[arg(long, default_value_t = 4)]
        min_pts: usize,
        /// L2-normalize app embeddings first.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Print the results as JSON instead of the TSV table.
        #[arg(long)]
        json: bool,
    },
    /// Generate a topic-structured synthetic corpus with judgments.
    Synth {
        /// Topic count (each topic becomes a category).
        #[arg(long, default_value_t = 3)]
        topics: usize,
        /// Documents per topic.
        #[arg(long = "docs", default_value_t = 60)]
        docs_per_topic: usize,
        /// Private vocabulary words per topic.
        #[arg(long = "vocab", default_value_t = 40)]
        vocab_per_topic: usize,
        /// Fraction of the topic vocabulary shared with adjacent topics.
        #[arg(long, default_value_t = 0.1)]
        overlap: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write the corpus.
        #[arg(long, default_value = "corpus.jsonl")]
        corpus_out: PathBuf,
        /// Where to write the judgments.
        #[arg(long, default_value = "judgments.tsv")]
        judgments_out: PathBuf,
    },
    /// Run every stage end to end and print the three result tables.
    Pipeline {
        /// JSON config describing the whole run; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        judgments: Option<PathBuf>,
        #[arg(long)]
        artifacts: Option<PathBuf>,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        /// Feedback documents per term.
        #[arg(long)]
        topdocs: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        oversampling: Option<usize>,
        #[arg(long)]
        power_iterations: Option<usize>,
        #[arg(long)]
        k_expansion: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long, value_enum)]
        averaging: Option<AveragingArg>,
        #[arg(long, value_enum)]
        gain: Option<GainArg>,
        /// L2-normalize app embeddings before clustering.
        #[arg(long)]
        normalize: bool,
        /// Master seed for training, reduction, and evaluation.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the fully resolved config here before running.
        #[arg(long)]
        save_config: Option<PathBuf>,
        /// Print the full report as JSON instead of the TSV tables.
        #[arg(long)]
        json: bool,
    },
}

/// Seed precedence for single-stage commands: flag, then RELEMB_SEED, then 42.
fn resolve_seed(flag: Option<u64>) -> anyhow::Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("RELEMB_SEED") {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| anyhow!("RELEMB_SEED is not an unsigned integer: {raw:?}")),
        Err(_) => Ok(42),
    }
}

/// A config for single-stage commands that never touch the corpus file.
fn artifacts_only_config(artifacts: PathBuf) -> PipelineConfig {
    PipelineConfig::new(PathBuf::new(), None, artifacts)
}

fn print_file(path: &std::path::Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading back {}", path.display()))?;
    print!("{text}");
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    run(cli.command)
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Ingest { corpus, artifacts } => {
            let config = PipelineConfig::new(corpus.corpus, None, artifacts.artifacts);
            let vocab = pipeline::stage_ingest(&config)?;
            println!(
                "wrote {} ({} terms)",
                config.artifact(pipeline::VOCAB_FILE).display(),
                vocab.len()
            );
        }
        Command::BuildIndex { corpus, artifacts } => {
            let config = PipelineConfig::new(corpus.corpus, None, artifacts.artifacts);
            let index = pipeline::stage_index(&config)?;
            println!(
                "wrote {} ({} documents)",
                config.artifact(pipeline::INDEX_FILE).display(),
                index.total_docs()
            );
        }
        Command::Search {
            corpus,
            artifacts,
            bm25,
            query,
            topk,
        } => {
            let config = PipelineConfig::new(corpus.corpus, None, artifacts.artifacts);
            let records = load_corpus(&config.corpus)?;
            let vocab = load_vocabulary(&config.artifact(pipeline::VOCAB_FILE))?;
            let index = load_index(&config.artifact(pipeline::INDEX_FILE))?;
            ensure_fingerprint(vocab.fingerprint(), index.fingerprint(), "index")?;
            let ids = query_term_ids(&query, &vocab)?;
            println!("rank\tapp_id\tscore\ttitle");
            for (rank, hit) in index.search(bm25.params(), &ids, topk).iter().enumerate() {
                let record = &records.records[hit.doc as usize];
                println!(
                    "{}\t{}\t{:.6}\t{}",
                    rank + 1,
                    record.app_id,
                    hit.score,
                    record.title
                );
            }
        }
        Command::BuildReprs {
            artifacts,
            bm25,
            topdocs,
        } => {
            let mut config = artifacts_only_config(artifacts.artifacts);
            config.bm25 = bm25.params();
            config.repr.len_topdocs = topdocs;
            let reprs = pipeline::stage_reprs(&config)?;
            println!(
                "wrote {} ({} representations)",
                config.artifact(pipeline::REPRS_FILE).display(),
                reprs.n_rows()
            );
        }
        Command::TrainEncoder { artifacts, train } => {
            let config = train_config(artifacts.artifacts, &train)?;
            let embedding = pipeline::stage_train_encoder(&config)?;
            println!(
                "wrote {} ({}x{})",
                config
                    .artifact(&pipeline::embedding_file(EmbeddingKind::WordEmb))
                    .display(),
                embedding.rows(),
                embedding.cols()
            );
        }
        Command::TrainAutoencoder { artifacts, train } => {
            let config = train_config(artifacts.artifacts, &train)?;
            let embedding = pipeline::stage_train_autoencoder(&config)?;
            println!(
                "wrote {} ({}x{})",
                config
                    .artifact(&pipeline::embedding_file(EmbeddingKind::WordEmbAe))
                    .display(),
                embedding.rows(),
                embedding.cols()
            );
        }
        Command::ReduceSvd { artifacts, reduce } => {
            let config = reduce_config(artifacts.artifacts, &reduce)?;
            let embedding = pipeline::stage_reduce_svd(&config)?;
            println!(
                "wrote {} ({}x{})",
                config
                    .artifact(&pipeline::embedding_file(EmbeddingKind::Svd))
                    .display(),
                embedding.rows(),
                embedding.cols()
            );
        }
        Command::ReducePca { artifacts, reduce } => {
            let config = reduce_config(artifacts.artifacts, &reduce)?;
            let embedding = pipeline::stage_reduce_pca(&config)?;
            println!(
                "wrote {} ({}x{})",
                config
                    .artifact(&pipeline::embedding_file(EmbeddingKind::Pca))
                    .display(),
                embedding.rows(),
                embedding.cols()
            );
        }
        Command::EmbedApps {
            corpus,
            artifacts,
            kind,
        } => {
            let config = PipelineConfig::new(corpus.corpus, None, artifacts.artifacts);
            let set = pipeline::stage_embed_apps(&config, kind)?;
            println!(
                "wrote {} ({} apps)",
                config.artifact(&pipeline::embedding_file(kind)).display(),
                set.app_ids.len()
            );
        }
        Command::Expand {
            artifacts,
            query,
            kind,
            expansion,
        } => {
            let config = artifacts_only_config(artifacts.artifacts);
            let vocab = load_vocabulary(&config.artifact(pipeline::VOCAB_FILE))?;
            let matrix = pipeline::load_word_embedding(&config, kind)?;
            let tokens = tokenize(&query);
            let qv = query_vector(&tokens, &vocab, &matrix)?;
            let expansion_config = relemb::tasks::ExpansionConfig {
                k: expansion.k_expansion,
                gamma: expansion.gamma,
                ..Default::default()
            };
            println!("term\tsimilarity");
            for (term_id, similarity) in expand_query(&qv, &matrix, &expansion_config) {
                println!("{}\t{:.6}", vocab.term(term_id), similarity);
            }
        }
        Command::EvalQe {
            corpus,
            artifacts,
            judgments,
            bm25,
            expansion,
            gain,
            json,
        } => {
            let judgments = judgments
                .ok_or_else(|| anyhow!("eval-qe needs --judgments <FILE> to score against"))?;
            let mut config =
                PipelineConfig::new(corpus.corpus, Some(judgments), artifacts.artifacts);
            config.bm25 = bm25.params();
            config.expansion.k = expansion.k_expansion;
            config.expansion.gamma = expansion.gamma;
            config.gain = gain.into();
            let evals = pipeline::stage_eval_qe(&config)?;
            if json {
                print_json(&evals)?;
            } else {
                print_file(&config.artifact(QE_RESULTS_FILE))?;
            }
        }
        Command::Knn {
            corpus,
            artifacts,
            app_id,
            k,
            kind,
        } => {
            let config = PipelineConfig::new(corpus.corpus, None, artifacts.artifacts);
            let records = load_corpus(&config.corpus)?;
            let set = pipeline::load_app_embeddings(&config, kind)?;
            let by_id: BTreeMap<&str, (&str, &str)> = records
                .records
                .iter()
                .map(|r| (r.app_id.as_str(), (r.title.as_str(), r.category.as_str())))
                .collect();
            println!("rank\tapp_id\ttitle\tcategory\tsimilarity");
            for (rank, (neighbor, similarity)) in
                nearest_apps(&app_id, &set, k)?.iter().enumerate()
            {
                let (title, category) = by_id[neighbor.as_str()];
                println!(
                    "{}\t{}\t{}\t{}\t{:.6}",
                    rank + 1,
                    neighbor,
                    title,
                    category,
                    similarity
                );
            }
        }
        Command::Classify {
            corpus,
            artifacts,
            folds,
            averaging,
            seed,
            json,
        } => {
            let mut config = PipelineConfig::new(corpus.corpus, None, artifacts.artifacts);
            config.folds = folds;
            config.averaging = averaging.into();
            config.seed = resolve_seed(seed)?;
            let cells = pipeline::stage_classify(&config)?;
            if json {
                print_json(&cells)?;
            } else {
                print_file(&config.artifact(CLS_RESULTS_FILE))?;
            }
        }
        Command::Cluster {
            corpus,
            artifacts,
            clusters,
            eps,
            min_pts,
            normalize,
            seed,
            json,
        } => {
            let mut config = PipelineConfig::new(corpus.corpus, None, artifacts.artifacts);
            config.clusters = clusters;
            config.eps = eps;
            config.min_pts = min_pts;
            config.normalize = normalize;
            config.seed = resolve_seed(seed)?;
            let cells = pipeline::stage_cluster(&config)?;
            if json {
                print_json(&cells)?;
            } else {
                print_file(&config.artifact(CLU_RESULTS_FILE))?;
            }
        }
        Command::Synth {
            topics,
            docs_per_topic,
            vocab_per_topic,
            overlap,
            seed,
            corpus_out,
            judgments_out,
        } => {
            let spec = SyntheticSpec {
                topics,
                docs_per_topic,
                vocab_per_topic,
                overlap,
                seed: resolve_seed(seed)?,
            };
            let data = generate_synthetic(&spec)?;
            write_corpus_jsonl(&data.corpus, &corpus_out)?;
            write_judgments_tsv(&data.judgments, &judgments_out)?;
            println!(
                "wrote {} ({} records) and {} ({} judgment rows)",
                corpus_out.display(),
                data.corpus.total_docs(),
                judgments_out.display(),
                data.judgments.len()
            );
        }
        Command::Pipeline {
            config,
            corpus,
            judgments,
            artifacts,
            k1,
            b,
            topdocs,
            hidden,
            epochs,
            lr,
            batch,
            dim,
            oversampling,
            power_iterations,
            k_expansion,
            gamma,
            folds,
            eps,
            min_pts,
            clusters,
            averaging,
            gain,
            normalize,
            seed,
            save_config,
            json,
        } => {
            let (mut resolved, file_sets_seed) = match &config {
                Some(path) => {
                    let raw = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let value: serde_json::Value = serde_json::from_str(&raw)
                        .with_context(|| format!("parsing {}", path.display()))?;
                    let mentions_seed = value.get("seed").is_some()
                        || value.pointer("/train/seed").is_some()
                        || value.pointer("/reduce/seed").is_some();
                    (pipeline::load_config(path)?, mentions_seed)
                }
                None => {
                    let corpus = corpus.clone().ok_or_else(|| {
                        anyhow!("pipeline needs --corpus <FILE> (or --config with a corpus path)")
                    })?;
                    (PipelineConfig::new(corpus, None, PathBuf::from("artifacts")), false)
                }
            };
            if let Some(v) = corpus {
                resolved.corpus = v;
            }
            if let Some(v) = judgments {
                resolved.judgments = Some(v);
            }
            if let Some(v) = artifacts {
                resolved.artifacts = v;
            }
            if let Some(v) = k1 {
                resolved.bm25.k1 = v;
            }
            if let Some(v) = b {
                resolved.bm25.b = v;
            }
            if let Some(v) = topdocs {
                resolved.repr.len_topdocs = v;
            }
            if let Some(v) = hidden {
                resolved.train.hidden_dim = v;
            }
            if let Some(v) = epochs {
                resolved.train.epochs = v;
            }
            if let Some(v) = lr {
                resolved.train.learning_rate = v;
            }
            if let Some(v) = batch {
                resolved.train.batch_size = v;
            }
            if let Some(v) = dim {
                resolved.reduce.dim = v;
            }
            if let Some(v) = oversampling {
                resolved.reduce.oversampling = v;
            }
            if let Some(v) = power_iterations {
                resolved.reduce.power_iterations = v;
            }
            if let Some(v) = k_expansion {
                resolved.expansion.k = v;
            }
            if let Some(v) = gamma {
                resolved.expansion.gamma = v;
            }
            if let Some(v) = folds {
                resolved.folds = v;
            }
            if let Some(v) = eps {
                resolved.eps = Some(v);
            }
            if let Some(v) = min_pts {
                resolved.min_pts = v;
            }
            if let Some(v) = clusters {
                resolved.clusters = Some(v);
            }
            if let Some(v) = averaging {
                resolved.averaging = v.into();
            }
            if let Some(v) = gain {
                resolved.gain = v.into();
            }
            if normalize {
                resolved.normalize = true;
            }
            // Seed precedence: flag, then config file, then RELEMB_SEED, then
            // the default. The flag and the environment act as a master seed
            // for every randomized stage.
            if let Some(s) = seed {
                apply_master_seed(&mut resolved, s);
            } else if !file_sets_seed {
                let fallback = resolve_seed(None)?;
                apply_master_seed(&mut resolved, fallback);
            }
            if resolved.corpus.as_os_str().is_empty() {
                bail!("pipeline needs --corpus <FILE> (or --config with a corpus path)");
            }
            if let Some(path) = save_config {
                pipeline::save_config(&resolved, &path)?;
            }
            let report = pipeline::run_pipeline(&resolved)?;
            if json {
                print_json(&report)?;
            } else {
                if !report.query_expansion.is_empty() {
                    print_file(&resolved.artifact(QE_RESULTS_FILE))?;
                    println!();
                }
                print_file(&resolved.artifact(CLS_RESULTS_FILE))?;
                println!();
                print_file(&resolved.artifact(CLU_RESULTS_FILE))?;
            }
        }
    }
    Ok(())
}

fn apply_master_seed(config: &mut PipelineConfig, seed: u64) {
    config.seed = seed;
    config.train.seed = seed;
    config.reduce.seed = seed;
}

fn train_config(artifacts: PathBuf, train: &TrainArgs) -> anyhow::Result<PipelineConfig> {
    let mut config = artifacts_only_config(artifacts);
    config.train.hidden_dim = train.hidden;
    config.train.epochs = train.epochs;
    config.train.learning_rate = train.lr;
    config.train.batch_size = train.batch;
    config.train.seed = resolve_seed(train.seed)?;
    Ok(config)
}

fn reduce_config(artifacts: PathBuf, reduce: &ReduceArgs) -> anyhow::Result<PipelineConfig> {
    let mut config = artifacts_only_config(artifacts);
    config.reduce.dim = reduce.dim;
    config.reduce.oversampling = reduce.oversampling;
    config.reduce.power_iterations = reduce.power_iterations;
    config.reduce.seed = resolve_seed(reduce.seed)?;
    Ok(config)
}

/// Maps query tokens to term ids, warning about unknown ones; errors only
/// when nothing is left.
fn query_term_ids(
    query: &str,
    vocab: &relemb::corpus::Vocabulary,
) -> anyhow::Result<Vec<u32>> {
    let tokens = tokenize(query);
    let mut ids = Vec::new();
    let mut unknown = Vec::new();
    for token in &tokens {
        match vocab.id(token) {
            Some(id) => ids.push(id),
            None => unknown.push(token.clone()),
        }
    }
    if !unknown.is_empty() {
        log::warn!("ignoring out-of-vocabulary terms: {}", unknown.join(", "));
    }
    if ids.is_empty() {
        bail!(relemb::Error::AllTermsOov(tokens));
    }
    Ok(ids)
}
