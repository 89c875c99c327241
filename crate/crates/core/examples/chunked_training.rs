//! Splits a corpus file into chunks, trains and smooths each chunk, and
//! merges the chunk parameters.
//!
//! ```bash
//! cargo run --example chunked_training
//! ```

use nphrase::em::{merge, smooth, split_corpus, train_chunk, TrainConfig};
use nphrase::synth::SyntheticCorpus;

fn main() -> nphrase::Result<()> {
    let text = SyntheticCorpus::with_vocab(5, 500).corpus_text(600_000);
    let config = TrainConfig {
        chunk_size_bytes: 200_000,
        ..TrainConfig::default()
    };

    let mut tables = Vec::new();
    for (i, chunk) in split_corpus(text.as_bytes(), "synthetic", config.chunk_size_bytes).enumerate() {
        let chunk = chunk?;
        let outcome = train_chunk(&chunk.corpus, &config)?;
        println!(
            "chunk {i}: lines from {}, {} phrases, {} iterations, L {:.1} -> {:.1}",
            chunk.first_line,
            chunk.corpus.len(),
            outcome.iterations(),
            outcome.trace[0],
            outcome.trace[outcome.trace.len() - 1]
        );
        tables.push(smooth(&outcome.params, chunk.corpus.vocabulary(), config.drop_fraction)?);
    }

    let merged = merge(&tables)?;
    println!(
        "merged: {} pairs over {} words, floor {:.3e}, pair mass {:.9}",
        merged.num_pairs(),
        merged.vocab_size(),
        merged.floor(),
        merged.total_pair_mass()
    );
    Ok(())
}
