use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dsembed::pipeline::{self, BuildConfig, ModelPaths, TrainRun};
use dsembed::query::Metric;
use dsembed::solver::TrainConfig;
use dsembed::Error;

#[derive(Parser)]
#[command(name = "dsembed", version, about = "Doubly stochastic word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build vocabulary and similarity matrix from a UTF-8 corpus
    Build(BuildArgs),
    /// Fit the embedding to a similarity matrix
    Train(TrainArgs),
    /// Print nearest-neighbor tables for query words
    Query(QueryArgs),
    /// Write embeddings in word-vector text format
    Export(ExportArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    max_vocab: usize,
    /// Context tokens on each side
    #[arg(long, default_value_t = 8)]
    window: usize,
    /// Case-fold tokens (default)
    #[arg(long, overrides_with = "keep_case")]
    lowercase: bool,
    /// Preserve token case
    #[arg(long, overrides_with = "lowercase")]
    keep_case: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Similarity matrix to train on; defaults to <out-dir>/similarity.txt
    #[arg(long)]
    similarity: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Convergence threshold on the max-norm change of W
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    simplex_tol: f64,
    /// Log the objective every N iterations
    #[arg(long, default_value_t = 1)]
    log_every: usize,
    /// Worker threads; 1 gives bit-reproducible results
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Model file; defaults to <out-dir>/model.txt
    #[arg(long)]
    model: Option<PathBuf>,
    /// Vocabulary TSV; defaults to <out-dir>/vocab.tsv
    #[arg(long)]
    vocab: Option<PathBuf>,
}

impl ModelArgs {
    fn paths(&self) -> ModelPaths {
        let mut paths = ModelPaths::in_dir(&self.out_dir);
        if let Some(m) = &self.model {
            paths.model = m.clone();
        }
        if let Some(v) = &self.vocab {
            paths.vocab = v.clone();
        }
        paths
    }
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 7)]
    k: usize,
    /// Append each neighbor's similarity
    #[arg(long)]
    with_scores: bool,
    /// Rank by cosine over W instead of the learned similarity
    #[arg(long)]
    cosine: bool,
    #[arg(required = true)]
    words: Vec<String>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Output file; defaults to <out-dir>/embeddings.txt
    #[arg(long)]
    output: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Build(a) => {
            let cfg = BuildConfig {
                corpus: a.corpus,
                max_vocab: a.max_vocab,
                window: a.window,
                lowercase: !a.keep_case,
                threads: a.threads,
                out_dir: a.out_dir,
            };
            let report = pipeline::cmd_build(&cfg)?;
            println!("tokens\t{}", report.tokens);
            println!("n\t{}", report.n);
            println!("nnz\t{}", report.nnz);
            println!("pruned\t{}", report.pruned.len());
            if !report.pruned.is_empty() {
                eprintln!(
                    "pruned words without co-occurrences: {}",
                    report.pruned.join(", ")
                );
            }
        }
        Command::Train(a) => {
            let run = TrainRun {
                similarity: a.similarity,
                out_dir: a.out_dir,
                solver: TrainConfig {
                    rank: a.rank,
                    max_iters: a.max_iters,
                    conv_tol: a.tol,
                    simplex_tol: a.simplex_tol,
                    seed: a.seed,
                    objective_every: a.log_every,
                    threads: a.threads,
                },
            };
            let out = pipeline::cmd_train(&run)?;
            let last = out.trace.last().map_or(f64::NAN, |t| t.objective);
            println!("iterations\t{}", out.iterations);
            println!("converged\t{}", out.converged);
            println!("objective\t{last}");
            println!("row_sum_residual\t{:e}", out.residual);
        }
        Command::Query(a) => {
            let metric = if a.cosine { Metric::Cosine } else { Metric::Learned };
            let out = pipeline::cmd_query(&a.model.paths(), &a.words, a.k, a.with_scores, metric)?;
            print!("{}", out.table);
            for e in &out.errors {
                eprintln!("error: {e}");
            }
            if let Some(e) = out.errors.into_iter().next() {
                return Err(e);
            }
        }
        Command::Export(a) => {
            let paths = a.model.paths();
            let output = a
                .output
                .unwrap_or_else(|| a.model.out_dir.join(pipeline::EMBEDDINGS_FILE));
            pipeline::cmd_export(&paths, &output)?;
            println!("wrote {}", output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // query errors were already printed next to the table
            if !matches!(e, Error::UnknownWord { .. } | Error::NoEmbedding(_)) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
