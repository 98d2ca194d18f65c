//! File-based pipeline stages behind the command line tool.
//!
//! Stages communicate only through files in an output directory, so an
//! externally produced similarity matrix can replace the `build` stage.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{self, SimilarityMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::io;
use crate::query::{format_table, Index, Metric};
use crate::solver::{self, EmbeddingMatrix, TrainConfig, TrainOutcome};

pub const VOCAB_FILE: &str = "vocab.tsv";
pub const PRUNED_FILE: &str = "pruned.tsv";
pub const SIMILARITY_FILE: &str = "similarity.txt";
pub const MODEL_FILE: &str = "model.txt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const BUILD_CONFIG_FILE: &str = "build_config.json";
pub const TRAIN_CONFIG_FILE: &str = "train_config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub corpus: PathBuf,
    pub max_vocab: usize,
    /// Tokens on each side counted as context.
    pub window: usize,
    pub lowercase: bool,
    pub threads: usize,
    pub out_dir: PathBuf,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            corpus: PathBuf::new(),
            max_vocab: 20_000,
            window: 8,
            lowercase: true,
            threads: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub tokens: usize,
    /// Words kept for training.
    pub n: usize,
    /// Distinct unordered pairs in the similarity matrix.
    pub nnz: usize,
    /// Vocabulary words without any co-occurrence, dropped before training.
    pub pruned: Vec<String>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("config serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Corpus → vocabulary, pruned-word list and similarity matrix.
pub fn cmd_build(cfg: &BuildConfig) -> Result<BuildReport> {
    if cfg.max_vocab == 0 || cfg.window == 0 || cfg.threads == 0 {
        return Err(Error::Config(
            "max_vocab, window and threads must be at least 1".into(),
        ));
    }
    let bytes = fs::read(&cfg.corpus).map_err(|e| Error::io(&cfg.corpus, e))?;
    ensure_dir(&cfg.out_dir)?;
    let tokens = corpus::tokenize_bytes(&bytes, cfg.lowercase).map_err(|e| match e {
        Error::Encoding { offset } => Error::input(format!(
            "{}: invalid UTF-8 at byte offset {offset}",
            cfg.corpus.display()
        )),
        other => other,
    })?;
    let report = build_from_tokens(&tokens, cfg)?;
    write_json(&cfg.out_dir.join(BUILD_CONFIG_FILE), cfg)?;
    Ok(report)
}

/// Training inputs derived from a token stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    /// Words that kept at least one co-occurrence, in similarity-matrix id order.
    pub vocab: Vocabulary,
    pub pruned: Vocabulary,
    pub similarity: SimilarityMatrix,
}

/// Vocabulary, co-occurrence counting, scaling and pruning, in memory.
pub fn prepare<S: AsRef<str>>(
    tokens: &[S],
    max_vocab: usize,
    window: usize,
    threads: usize,
) -> Result<Prepared> {
    let vocab = corpus::build_vocab(tokens, max_vocab)?;
    let counts = corpus::count_cooccurrences_sharded(tokens, &vocab, window, threads)?;
    let full = corpus::build_similarity(&counts, vocab.len())?;
    let pruned_ids = full.empty_rows();
    let (similarity, kept) = full.compact();
    Ok(Prepared {
        vocab: vocab.retain_ids(&kept),
        pruned: vocab.retain_ids(&pruned_ids),
        similarity,
    })
}

fn build_from_tokens(tokens: &[String], cfg: &BuildConfig) -> Result<BuildReport> {
    let p = prepare(tokens, cfg.max_vocab, cfg.window, cfg.threads)?;
    let dir = &cfg.out_dir;
    io::write_vocab(io::create(&dir.join(VOCAB_FILE))?, &p.vocab)?;
    io::write_vocab(io::create(&dir.join(PRUNED_FILE))?, &p.pruned)?;
    io::write_similarity(io::create(&dir.join(SIMILARITY_FILE))?, &p.similarity)?;
    Ok(BuildReport {
        tokens: tokens.len(),
        n: p.similarity.n(),
        nnz: p.similarity.upper_nnz(),
        pruned: p.pruned.words().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    /// Defaults to `<out_dir>/similarity.txt`.
    pub similarity: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub solver: TrainConfig,
}

impl TrainRun {
    pub fn similarity_path(&self) -> PathBuf {
        self.similarity
            .clone()
            .unwrap_or_else(|| self.out_dir.join(SIMILARITY_FILE))
    }
}

/// Similarity matrix → model file and training log.
pub fn cmd_train(run: &TrainRun) -> Result<TrainOutcome> {
    run.solver.validate()?;
    let path = run.similarity_path();
    let s = io::read_similarity(io::open(&path)?)?;
    if run.solver.rank > s.n() {
        return Err(Error::Config(format!(
            "rank {} exceeds vocabulary size {}",
            run.solver.rank,
            s.n()
        )));
    }
    ensure_dir(&run.out_dir)?;
    let resolved = TrainRun {
        similarity: Some(path),
        ..run.clone()
    };
    write_json(&run.out_dir.join(TRAIN_CONFIG_FILE), &resolved)?;
    let outcome = solver::train(&s, &run.solver)?;
    io::write_model(io::create(&run.out_dir.join(MODEL_FILE))?, &outcome.embedding)?;
    io::write_trace(io::create(&run.out_dir.join(TRAIN_LOG_FILE))?, &outcome.trace)?;
    Ok(outcome)
}

/// Paths of a trained model and its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPaths {
    pub model: PathBuf,
    pub vocab: PathBuf,
    pub pruned: Option<PathBuf>,
}

impl ModelPaths {
    pub fn in_dir(dir: &Path) -> Self {
        let pruned = dir.join(PRUNED_FILE);
        ModelPaths {
            model: dir.join(MODEL_FILE),
            vocab: dir.join(VOCAB_FILE),
            pruned: pruned.exists().then_some(pruned),
        }
    }

    pub fn load(&self) -> Result<(EmbeddingMatrix, Vocabulary, Vec<String>)> {
        let w = io::read_model(io::open(&self.model)?)?;
        let vocab = io::read_vocab(io::open(&self.vocab)?)?;
        if w.n() != vocab.len() {
            return Err(Error::input(format!(
                "dimension mismatch: model {} has {} rows, vocabulary {} has {} words",
                self.model.display(),
                w.n(),
                self.vocab.display(),
                vocab.len()
            )));
        }
        let pruned = match &self.pruned {
            Some(p) => io::read_vocab(io::open(p)?)?.words().to_vec(),
            None => Vec::new(),
        };
        Ok((w, vocab, pruned))
    }
}

#[derive(Debug)]
pub struct QueryOutput {
    pub table: String,
    pub errors: Vec<Error>,
}

/// Neighbor table for `words`; unresolvable words are returned as errors
/// alongside the table of the rest.
pub fn cmd_query(
    paths: &ModelPaths,
    words: &[String],
    k: usize,
    with_scores: bool,
    metric: Metric,
) -> Result<QueryOutput> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let (w, vocab, pruned) = paths.load()?;
    let index = Index::new(&w, &vocab)?.with_pruned(pruned);
    let (rows, errors) = index.neighbor_table(words, k, metric);
    Ok(QueryOutput {
        table: format_table(&rows, with_scores),
        errors,
    })
}

/// Model + vocabulary → `n r` header and `word v1 ... vr` lines.
pub fn cmd_export(paths: &ModelPaths, output: &Path) -> Result<()> {
    let (w, vocab, _) = paths.load()?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    io::write_embeddings(io::create(output)?, &vocab, &w)
}
