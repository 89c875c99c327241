//! Compares single-word and phrase indexing on the sample bank collection:
//! only the head/modifier pair tells "terminology bank" from "bank
//! terminology".
//!
//! ```bash
//! cargo run --example phrase_retrieval
//! ```

use std::fs::File;
use std::io::BufReader;

use nphrase::extract::{build_index_set, read_documents, text_terms, IndexSetKind, StopwordChunker};
use nphrase::ir::{InvertedIndex, Query, Weighting};
use nphrase::pipeline::{extract_nps, train};
use nphrase::TrainConfig;

const DOCS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/bank/documents.jsonl");

fn main() -> nphrase::Result<()> {
    let dir = tempfile::tempdir()?;
    let chunker = StopwordChunker::default();
    let phrases = dir.path().join("phrases.txt");
    extract_nps(DOCS.as_ref(), &phrases, &chunker)?;
    let params = train(&phrases, &TrainConfig::default())?.params;

    let docs = read_documents(BufReader::new(File::open(DOCS)?), DOCS)?;
    for kind in [IndexSetKind::Wd, IndexSetKind::WdHm] {
        let sets = build_index_set(&docs, &params, kind, &chunker);
        let index = InvertedIndex::build(sets.into_iter().map(|d| (d.id, d.terms)), Weighting::default())?;
        let query = Query::from_terms("101", text_terms("terminology bank", &params, kind, &chunker));
        let ranking = index.search(&query, 5)?;
        println!("{}", kind.label());
        for (doc, score) in &ranking.entries {
            let text = &docs.iter().find(|d| &d.id == doc).expect("indexed").text;
            println!("  {score:.6}  {doc}  {text}");
        }
    }
    Ok(())
}
