//! File-to-file pipeline stages and their configuration.
//!
//! Each stage reads and writes plain files so any stage can be rerun from
//! the previous stage's output. [`run_all`] chains every stage for each
//! index-set kind and writes a comparison report.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::fs::{self, File};
use std::hash::{Hash, Hasher};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{merge, smooth, split_corpus, ParamTable, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{self, render_table, EvalReport, Qrels, TableRow};
use crate::extract::{
    build_index_set, default_stopwords, read_documents, text_terms, write_index_set, Chunker,
    Document, IndexSetKind, PosLexicon, StopwordChunker,
};
use crate::ir::{read_index, read_run, write_index, write_run, FeedbackConfig, InvertedIndex, Query, RankedList, Weighting};
use crate::np::{join_tokens, parse_corpus_line, NounPhrase};
use crate::parser::{parse_all, write_parsed};

/// Documents processed per parallel batch when streaming.
const DOC_BATCH: usize = 1024;
/// Phrases parsed per batch when streaming.
const PARSE_BATCH: usize = 100_000;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// JSON-lines documents to extract phrases from and to index.
    pub documents: Option<PathBuf>,
    /// JSON-lines topics used as queries.
    pub topics: Option<PathBuf>,
    /// TREC relevance judgments; evaluation is skipped without them.
    pub qrels: Option<PathBuf>,
    /// Phrase corpus to train on instead of one extracted from `documents`.
    pub corpus: Option<PathBuf>,
    /// Directory receiving every intermediate and final artifact.
    pub work_dir: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkerConfig {
    /// One stopword per line; the built-in list when absent.
    pub stopwords: Option<PathBuf>,
    /// `word<TAB>tag` lexicon gating phrase words.
    pub lexicon: Option<PathBuf>,
}

impl ChunkerConfig {
    pub fn build(&self) -> Result<StopwordChunker> {
        let stopwords = match &self.stopwords {
            Some(path) => read_lines(path)?
                .into_iter()
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty() && !w.starts_with('#'))
                .collect(),
            None => default_stopwords(),
        };
        let lexicon = match &self.lexicon {
            Some(path) => Some(PosLexicon::read(open(path)?, &path.display().to_string())?),
            None => None,
        };
        Ok(StopwordChunker::new(stopwords, lexicon))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Documents kept per query.
    pub depth: usize,
    pub feedback: FeedbackConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            depth: eval::DEFAULT_CUTOFF,
            feedback: FeedbackConfig::default(),
        }
    }
}

/// Full pipeline configuration, stored as TOML. The only random seed is
/// `train.seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    /// Index-set kinds run by `run_all`, the first being the baseline.
    pub kinds: Vec<IndexSetKind>,
    pub train: TrainConfig,
    pub chunker: ChunkerConfig,
    pub weighting: Weighting,
    pub search: SearchConfig,
    pub cutoff: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: Paths::default(),
            kinds: IndexSetKind::ALL.to_vec(),
            train: TrainConfig::default(),
            chunker: ChunkerConfig::default(),
            weighting: Weighting::default(),
            search: SearchConfig::default(),
            cutoff: eval::DEFAULT_CUTOFF,
        }
    }
}

impl PipelineConfig {
    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Checks settings and that every input file exists.
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.kinds.is_empty() {
            return Err(Error::Config("at least one index-set kind is required".into()));
        }
        if self.search.depth == 0 || self.cutoff == 0 {
            return Err(Error::Config("search depth and cutoff must be positive".into()));
        }
        let p = &self.paths;
        if p.documents.is_none() {
            return Err(Error::Config("paths.documents is required".into()));
        }
        if p.topics.is_none() {
            return Err(Error::Config("paths.topics is required".into()));
        }
        let inputs = [&p.documents, &p.topics, &p.qrels, &p.corpus, &self.chunker.stopwords, &self.chunker.lexicon];
        for path in inputs.into_iter().flatten() {
            if !path.is_file() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                ));
            }
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(mut out: BufWriter<File>, path: &Path) -> Result<()> {
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    open(path)?
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))
}

fn source(path: &Path) -> String {
    path.display().to_string()
}

/// Runs a stage and logs its wall-clock time.
pub fn timed<T>(stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    log::info!("{stage}: started");
    let out = f();
    let elapsed = start.elapsed();
    match &out {
        Ok(_) => log::info!("{stage}: finished in {elapsed:.2?}"),
        Err(e) => log::error!("{stage}: failed after {elapsed:.2?}: {e}"),
    }
    out
}

/// Streams JSON-lines documents in batches.
fn for_each_document_batch(
    path: &Path,
    mut f: impl FnMut(&[Document]) -> Result<()>,
) -> Result<usize> {
    let src = source(path);
    let mut batch = Vec::with_capacity(DOC_BATCH);
    let mut total = 0;
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|e| Error::format(&src, i + 1, e.to_string()))?;
        batch.push(doc);
        if batch.len() == DOC_BATCH {
            total += batch.len();
            f(&batch)?;
            batch.clear();
        }
    }
    if !batch.is_empty() {
        total += batch.len();
        f(&batch)?;
    }
    Ok(total)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExtractStats {
    pub documents: usize,
    pub phrases: usize,
    pub unique: usize,
}

/// Chunks every document and writes one phrase per line, in document order.
pub fn extract_nps(documents: &Path, output: &Path, chunker: &dyn Chunker) -> Result<ExtractStats> {
    let mut out = create(output)?;
    let mut stats = ExtractStats::default();
    let mut seen: HashSet<u64> = HashSet::new();
    stats.documents = for_each_document_batch(documents, |batch| {
        let chunked: Vec<Vec<String>> = batch
            .par_iter()
            .map(|doc| match chunker.chunk(&doc.text) {
                Ok(c) => c.phrase_tokens().map(join_tokens).collect(),
                Err(e) => {
                    log::warn!("document {}: chunking failed ({e}); no phrases", doc.id);
                    Vec::new()
                }
            })
            .collect();
        for phrase in chunked.iter().flatten() {
            let mut h = DefaultHasher::new();
            phrase.hash(&mut h);
            seen.insert(h.finish());
            stats.phrases += 1;
            writeln!(out, "{phrase}").map_err(|e| Error::io(output, e))?;
        }
        Ok(())
    })?;
    finish(out, output)?;
    stats.unique = seen.len();
    if stats.phrases == 0 {
        log::warn!("no noun phrases extracted from {}", documents.display());
    }
    log::info!(
        "extracted {} phrases ({} unique) from {} documents",
        stats.phrases,
        stats.unique,
        stats.documents
    );
    Ok(stats)
}

/// Training summary of one corpus chunk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChunkReport {
    pub index: usize,
    pub first_line: usize,
    pub phrases: usize,
    pub skipped_lines: usize,
    pub converged: bool,
    /// Log-likelihood before the first update and after each update.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub params: ParamTable,
    pub chunks: Vec<ChunkReport>,
}

/// Splits the corpus into chunks, trains and smooths each chunk, and merges
/// the chunk parameters. Chunks are trained in parallel, a pool-sized wave at
/// a time, and merged in file order.
pub fn train(corpus: &Path, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let src = source(corpus);
    let mut chunks = split_corpus(open(corpus)?, &src, config.chunk_size_bytes).peekable();
    let wave = rayon::current_num_threads().max(1);
    let mut tables = Vec::new();
    let mut reports = Vec::new();
    while chunks.peek().is_some() {
        let mut batch = Vec::with_capacity(wave);
        while batch.len() < wave {
            match chunks.next() {
                Some(chunk) => batch.push((reports.len() + batch.len(), chunk?)),
                None => break,
            }
        }
        let trained: Vec<(ParamTable, ChunkReport)> = batch
            .par_iter()
            .map(|(index, chunk)| {
                let wrap = |e: Error| Error::Chunk {
                    index: *index,
                    first_line: chunk.first_line,
                    source: Box::new(e),
                };
                for issue in chunk.issues.iter().take(5) {
                    log::warn!("{src}:{}: skipped: {}", issue.line, issue.message);
                }
                let outcome = crate::em::train_chunk(&chunk.corpus, config).map_err(wrap)?;
                let smoothed = smooth(&outcome.params, chunk.corpus.vocabulary(), config.drop_fraction)
                    .map_err(wrap)?;
                Ok((
                    smoothed,
                    ChunkReport {
                        index: *index,
                        first_line: chunk.first_line,
                        phrases: chunk.corpus.len(),
                        skipped_lines: chunk.issues.len(),
                        converged: outcome.converged,
                        trace: outcome.trace,
                    },
                ))
            })
            .collect::<Result<_>>()?;
        for (table, report) in trained {
            log::info!(
                "chunk {} (line {}): {} phrases, {} iterations, L = {}",
                report.index,
                report.first_line,
                report.phrases,
                report.trace.len() - 1,
                report
                    .trace
                    .iter()
                    .map(|l| format!("{l:.3}"))
                    .collect::<Vec<_>>()
                    .join(" -> ")
            );
            tables.push(table);
            reports.push(report);
        }
    }
    if tables.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let params = merge(&tables)?;
    Ok(TrainReport {
        params,
        chunks: reports,
    })
}

pub fn write_params(params: &ParamTable, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    params.write(&mut out).map_err(|e| Error::io(path, e))?;
    finish(out, path)
}

pub fn load_params(path: &Path) -> Result<ParamTable> {
    ParamTable::read(open(path)?, &source(path))
}

/// Parses every valid corpus line and writes one bracketed line per input
/// phrase, in input order. Returns the number of phrases written.
pub fn parse_file(corpus: &Path, params: &ParamTable, output: &Path) -> Result<usize> {
    let src = source(corpus);
    let mut out = create(output)?;
    let mut batch: Vec<NounPhrase> = Vec::with_capacity(PARSE_BATCH);
    let mut written = 0;
    let mut flush = |batch: &mut Vec<NounPhrase>, out: &mut BufWriter<File>| -> Result<()> {
        let parsed = parse_all(batch, params)?;
        write_parsed(&mut *out, &parsed).map_err(|e| Error::io(output, e))?;
        written += parsed.len();
        batch.clear();
        Ok(())
    };
    for (i, line) in open(corpus)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(corpus, e))?;
        match parse_corpus_line(&line) {
            Ok(Some(np)) => batch.push(np),
            Ok(None) => {}
            Err(message) => log::warn!("{src}:{}: skipped: {message}", i + 1),
        }
        if batch.len() == PARSE_BATCH {
            flush(&mut batch, &mut out)?;
        }
    }
    flush(&mut batch, &mut out)?;
    finish(out, output)?;
    Ok(written)
}

pub const TERMSETS_FILE: &str = "termsets.tsv";
pub const INDEX_FILE: &str = "index.txt";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndexStats {
    pub documents: usize,
    pub terms: usize,
    pub vocabulary: usize,
}

/// Builds the index set of `kind` and writes its term sets and inverted index
/// into `out_dir`.
pub fn index(
    documents: &Path,
    params: &ParamTable,
    kind: IndexSetKind,
    chunker: &dyn Chunker,
    weighting: &Weighting,
    out_dir: &Path,
) -> Result<IndexStats> {
    let docs = read_documents(open(documents)?, &source(documents))?;
    let sets = build_index_set(&docs, params, kind, chunker);
    let terms_path = out_dir.join(TERMSETS_FILE);
    let mut out = create(&terms_path)?;
    write_index_set(&mut out, &sets).map_err(|e| Error::io(&terms_path, e))?;
    finish(out, &terms_path)?;

    let terms = sets.iter().map(|d| d.terms.len()).sum();
    let idx = InvertedIndex::build(sets.into_iter().map(|d| (d.id, d.terms)), weighting.clone())?;
    let index_path = out_dir.join(INDEX_FILE);
    let mut out = create(&index_path)?;
    write_index(&mut out, &idx, kind)?;
    finish(out, &index_path)?;
    let stats = IndexStats {
        documents: idx.doc_count(),
        terms,
        vocabulary: idx.terms().len(),
    };
    log::info!(
        "{}: {} documents, {} term occurrences, {} distinct terms",
        kind.label(),
        stats.documents,
        stats.terms,
        stats.vocabulary
    );
    Ok(stats)
}

pub fn load_index(index_dir: &Path) -> Result<(InvertedIndex, IndexSetKind)> {
    let path = index_dir.join(INDEX_FILE);
    read_index(open(&path)?, &source(&path))
}

/// Turns topics into queries with the index's term kinds. Topics without any
/// term are dropped with a warning.
pub fn build_queries(
    topics: &[Document],
    params: &ParamTable,
    kind: IndexSetKind,
    chunker: &dyn Chunker,
) -> Vec<Query> {
    topics
        .iter()
        .filter_map(|t| {
            let q = Query::from_terms(t.id.clone(), text_terms(&t.text, params, kind, chunker));
            if q.is_empty() {
                log::warn!("topic {} yields no terms; skipped", t.id);
                None
            } else {
                Some(q)
            }
        })
        .collect()
}

/// Runs every query against the index, with or without feedback.
pub fn search_all(index: &InvertedIndex, queries: &[Query], config: &SearchConfig) -> Result<Vec<RankedList>> {
    queries
        .par_iter()
        .map(|q| {
            if config.feedback.enabled {
                let out = index.feedback_search(q, config.depth, &config.feedback)?;
                if out.no_initial_results {
                    log::warn!("query {}: no initial results, feedback skipped", q.id);
                }
                Ok(out.ranking)
            } else {
                index.search(q, config.depth)
            }
        })
        .collect()
}

/// Searches the index in `index_dir` with the topics and writes a run file
/// tagged with the index-set label.
pub fn search(
    index_dir: &Path,
    params: &ParamTable,
    topics: &Path,
    chunker: &dyn Chunker,
    config: &SearchConfig,
    output: &Path,
) -> Result<Vec<RankedList>> {
    let (idx, kind) = load_index(index_dir)?;
    let topics = read_documents(open(topics)?, &source(topics))?;
    let queries = build_queries(&topics, params, kind, chunker);
    let runs = search_all(&idx, &queries, config)?;
    let mut out = create(output)?;
    write_run(&mut out, &runs, &kind.label()).map_err(|e| Error::io(output, e))?;
    finish(out, output)?;
    Ok(runs)
}

pub fn load_run(path: &Path) -> Result<Vec<RankedList>> {
    read_run(open(path)?, &source(path))
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    Qrels::read(open(path)?, &source(path))
}

/// Evaluates labelled run files; the first is the table's baseline.
pub fn evaluate_runs(runs: &[(String, PathBuf)], qrels: &Qrels, cutoff: usize) -> Result<Vec<TableRow>> {
    runs.iter()
        .map(|(label, path)| {
            Ok(TableRow {
                label: label.clone(),
                report: eval::evaluate(&load_run(path)?, qrels, cutoff)?,
            })
        })
        .collect()
}

/// Writes the text table and its JSON twin.
pub fn write_report(rows: &[TableRow], text_path: &Path, json_path: &Path) -> Result<String> {
    let table = render_table(rows);
    fs::write(text_path, &table).map_err(|e| Error::io(text_path, e))?;
    let mut out = create(json_path)?;
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n").map_err(|e| Error::io(json_path, e))?;
    finish(out, json_path)?;
    Ok(table)
}

/// Artifact locations produced by [`run_all`] under the work directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn phrases(&self) -> PathBuf {
        self.root.join("phrases.txt")
    }
    pub fn params(&self) -> PathBuf {
        self.root.join("params.txt")
    }
    pub fn parsed(&self) -> PathBuf {
        self.root.join("parsed.txt")
    }
    pub fn index_dir(&self, kind: IndexSetKind) -> PathBuf {
        self.root.join(format!("index-{}", kind.as_str()))
    }
    pub fn run(&self, kind: IndexSetKind) -> PathBuf {
        self.root.join("runs").join(format!("{}.run", kind.label()))
    }
    pub fn report_text(&self) -> PathBuf {
        self.root.join("report.txt")
    }
    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub layout: Layout,
    pub rows: Option<Vec<TableRow>>,
    pub table: Option<String>,
}

impl RunSummary {
    pub fn report(&self, kind: IndexSetKind) -> Option<&EvalReport> {
        self.rows
            .as_ref()?
            .iter()
            .find(|r| r.label == kind.label())
            .map(|r| &r.report)
    }
}

/// Runs every stage: extract phrases (unless a corpus is given), train,
/// parse, then index, search and evaluate once per configured kind.
pub fn run_all(config: &PipelineConfig) -> Result<RunSummary> {
    config.validate()?;
    let layout = Layout {
        root: config.paths.work_dir.clone(),
    };
    fs::create_dir_all(&layout.root).map_err(|e| Error::io(&layout.root, e))?;
    let documents = config.paths.documents.as_deref().expect("validated");
    let topics = config.paths.topics.as_deref().expect("validated");
    let chunker = config.chunker.build()?;

    let corpus = match &config.paths.corpus {
        Some(c) => c.clone(),
        None => {
            let out = layout.phrases();
            timed("extract-nps", || extract_nps(documents, &out, &chunker))?;
            out
        }
    };
    let report = timed("train", || train(&corpus, &config.train))?;
    write_params(&report.params, &layout.params())?;
    let params = report.params;
    timed("parse", || parse_file(&corpus, &params, &layout.parsed()))?;

    for &kind in &config.kinds {
        let dir = layout.index_dir(kind);
        timed(&format!("index {}", kind.label()), || {
            index(documents, &params, kind, &chunker, &config.weighting, &dir)
        })?;
        timed(&format!("search {}", kind.label()), || {
            search(&dir, &params, topics, &chunker, &config.search, &layout.run(kind))
        })?;
    }

    let Some(qrels_path) = &config.paths.qrels else {
        log::warn!("no qrels configured; skipping evaluation");
        return Ok(RunSummary {
            layout,
            rows: None,
            table: None,
        });
    };
    let (rows, table) = timed("eval", || {
        let qrels = load_qrels(qrels_path)?;
        let runs: Vec<(String, PathBuf)> = config
            .kinds
            .iter()
            .map(|&k| (k.label(), layout.run(k)))
            .collect();
        let rows = evaluate_runs(&runs, &qrels, config.cutoff)?;
        let table = write_report(&rows, &layout.report_text(), &layout.report_json())?;
        Ok((rows, table))
    })?;
    Ok(RunSummary {
        layout,
        rows: Some(rows),
        table: Some(table),
    })
}
