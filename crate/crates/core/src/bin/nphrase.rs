use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nphrase::em::InitMode;
use nphrase::error::{Error, Result};
use nphrase::extract::IndexSetKind;
use nphrase::pipeline::{self, timed, PipelineConfig};

#[derive(Parser)]
#[command(name = "nphrase", version, about = "Noun-phrase parsing and phrase-based retrieval")]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Pipeline configuration file (TOML) supplying defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ChunkerArgs {
    /// Stopword list, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Part-of-speech lexicon, `word<TAB>tag` per line.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract noun phrases from JSON-lines documents into a corpus file.
    ExtractNps {
        #[arg(long)]
        documents: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[command(flatten)]
        chunker: ChunkerArgs,
    },
    /// Train pair probabilities on a noun-phrase corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        chunk_size: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        drop_fraction: Option<f64>,
        /// `random` or `uniform`.
        #[arg(long, value_parser = parse_init)]
        init: Option<InitMode>,
        /// Also write per-chunk likelihood traces as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Bracket every phrase of a corpus file.
    Parse {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Build an index set and its inverted index.
    Index {
        #[arg(long)]
        documents: PathBuf,
        #[arg(long)]
        params: PathBuf,
        /// WD, WD-HM, WD-NP or WD-HM-NP.
        #[arg(long, default_value = "WD")]
        kind: IndexSetKind,
        /// Output directory.
        #[arg(long, short)]
        output: PathBuf,
        #[command(flatten)]
        chunker: ChunkerArgs,
    },
    /// Run topics against an index and write a TREC run file.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        topics: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long)]
        no_feedback: bool,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        fb_docs: Option<usize>,
        #[arg(long)]
        fb_terms: Option<usize>,
        #[command(flatten)]
        chunker: ChunkerArgs,
    },
    /// Evaluate run files; the first run is the comparison baseline.
    Eval {
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
        /// Row labels, one per run (defaults to the file stems).
        #[arg(long = "label")]
        labels: Vec<String>,
        #[arg(long)]
        cutoff: Option<usize>,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run every stage from a configuration file.
    RunAll {
        /// Override the configured work directory.
        #[arg(long)]
        work_dir: Option<PathBuf>,
    },
    /// Print the default configuration.
    DefaultConfig,
}

fn parse_init(s: &str) -> std::result::Result<InitMode, String> {
    match s {
        "random" => Ok(InitMode::Random),
        "uniform" => Ok(InitMode::Uniform),
        _ => Err(format!("expected random or uniform, got {s:?}")),
    }
}

fn chunker_for(config: &PipelineConfig, args: ChunkerArgs) -> Result<nphrase::extract::StopwordChunker> {
    let mut c = config.chunker.clone();
    c.stopwords = args.stopwords.or(c.stopwords);
    c.lexicon = args.lexicon.or(c.lexicon);
    c.build()
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::ExtractNps {
            documents,
            output,
            chunker,
        } => {
            let chunker = chunker_for(&config, chunker)?;
            let stats = timed("extract-nps", || pipeline::extract_nps(&documents, &output, &chunker))?;
            println!(
                "{} documents, {} noun phrases, {} unique",
                stats.documents, stats.phrases, stats.unique
            );
        }
        Command::Train {
            corpus,
            output,
            seed,
            chunk_size,
            threshold,
            max_iterations,
            drop_fraction,
            init,
            trace,
        } => {
            let t = &mut config.train;
            t.seed = seed.unwrap_or(t.seed);
            t.chunk_size_bytes = chunk_size.unwrap_or(t.chunk_size_bytes);
            t.likelihood_threshold = threshold.unwrap_or(t.likelihood_threshold);
            t.max_iterations = max_iterations.unwrap_or(t.max_iterations);
            t.drop_fraction = drop_fraction.unwrap_or(t.drop_fraction);
            t.init = init.unwrap_or(t.init);
            let report = timed("train", || pipeline::train(&corpus, &config.train))?;
            pipeline::write_params(&report.params, &output)?;
            for c in &report.chunks {
                println!(
                    "chunk {}: {} phrases, {} iterations, converged={}, L {:.3} -> {:.3}",
                    c.index,
                    c.phrases,
                    c.trace.len() - 1,
                    c.converged,
                    c.trace[0],
                    c.trace[c.trace.len() - 1]
                );
            }
            if let Some(path) = trace {
                let text = serde_json::to_string_pretty(&report.chunks)?;
                std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path, source: e })?;
            }
        }
        Command::Parse {
            corpus,
            params,
            output,
        } => {
            let params = pipeline::load_params(&params)?;
            let n = timed("parse", || pipeline::parse_file(&corpus, &params, &output))?;
            println!("{n} phrases parsed");
        }
        Command::Index {
            documents,
            params,
            kind,
            output,
            chunker,
        } => {
            let chunker = chunker_for(&config, chunker)?;
            let params = pipeline::load_params(&params)?;
            let stats = timed("index", || {
                pipeline::index(&documents, &params, kind, &chunker, &config.weighting, &output)
            })?;
            println!(
                "{}: {} documents, {} term occurrences, {} distinct terms",
                kind.label(),
                stats.documents,
                stats.terms,
                stats.vocabulary
            );
        }
        Command::Search {
            index,
            params,
            topics,
            output,
            no_feedback,
            depth,
            fb_docs,
            fb_terms,
            chunker,
        } => {
            let chunker = chunker_for(&config, chunker)?;
            let params = pipeline::load_params(&params)?;
            let s = &mut config.search;
            s.depth = depth.unwrap_or(s.depth);
            s.feedback.fb_docs = fb_docs.unwrap_or(s.feedback.fb_docs);
            s.feedback.fb_terms = fb_terms.unwrap_or(s.feedback.fb_terms);
            s.feedback.enabled &= !no_feedback;
            let runs = timed("search", || {
                pipeline::search(&index, &params, &topics, &chunker, &config.search, &output)
            })?;
            println!("{} queries searched", runs.len());
        }
        Command::Eval {
            qrels,
            runs,
            labels,
            cutoff,
            json,
        } => {
            let labelled: Vec<(String, PathBuf)> = runs
                .iter()
                .enumerate()
                .map(|(i, p)| (labels.get(i).cloned().unwrap_or_else(|| stem(p)), p.clone()))
                .collect();
            let qrels = pipeline::load_qrels(&qrels)?;
            let rows = timed("eval", || {
                pipeline::evaluate_runs(&labelled, &qrels, cutoff.unwrap_or(config.cutoff))
            })?;
            print!("{}", nphrase::eval::render_table(&rows));
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&rows)?;
                std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path, source: e })?;
            }
        }
        Command::RunAll { work_dir } => {
            if let Some(dir) = work_dir {
                config.paths.work_dir = dir;
            }
            let summary = timed("run-all", || pipeline::run_all(&config))?;
            match summary.table {
                Some(table) => print!("{table}"),
                None => println!("runs written to {}", summary.layout.root.join("runs").display()),
            }
        }
        Command::DefaultConfig => print!("{}", PipelineConfig::default().to_toml()),
    }
    Ok(())
}

fn usage_problem(cli: &Cli) -> Option<&'static str> {
    match &cli.command {
        Command::RunAll { .. } if cli.config.is_none() => Some("run-all needs --config"),
        Command::Eval { runs, labels, .. } if !labels.is_empty() && labels.len() != runs.len() => {
            Some("give one --label per --run")
        }
        _ => None,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(msg) = usage_problem(&cli) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp_millis()
        .init();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::error!("cannot start {n} workers: {e}");
            return ExitCode::from(3);
        }
    }
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            log::error!("{e}");
            if e.is_data_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
        Err(_) => ExitCode::from(3),
    }
}
