//! Trains pair probabilities on a synthetic phrase corpus and prints the
//! likelihood trace and the strongest pairs.
//!
//! ```bash
//! cargo run --example train_em
//! ```

use nphrase::em::{smooth, train_chunk, TrainConfig};
use nphrase::synth::SyntheticCorpus;

fn main() -> nphrase::Result<()> {
    let corpus = SyntheticCorpus::with_vocab(11, 300).phrases(5_000);
    println!(
        "{} distinct phrases, {} words",
        corpus.len(),
        corpus.vocabulary().len()
    );

    let config = TrainConfig::default();
    let outcome = train_chunk(&corpus, &config)?;
    for (i, ll) in outcome.trace.iter().enumerate() {
        println!("iteration {i:>3}: log-likelihood {ll:.3}");
    }
    println!("converged: {}", outcome.converged);

    let params = smooth(&outcome.params, corpus.vocabulary(), config.drop_fraction)?;
    println!(
        "kept {} of {} pairs, floor {:.3e}",
        params.num_pairs(),
        outcome.params.num_pairs(),
        params.floor()
    );
    let mut pairs: Vec<_> = params.pairs().collect();
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2));
    for (m, h, p) in pairs.into_iter().take(10) {
        println!("  P({m}, {h}) = {p:.5}");
    }
    Ok(())
}
