//! Pseudo-relevance feedback: the strongest terms of the top documents are
//! added to the query before a second search.
//!
//! ```bash
//! cargo run --example feedback_search
//! ```

use nphrase::extract::{build_index_set, text_terms, IndexSetKind, StopwordChunker};
use nphrase::ir::{FeedbackConfig, InvertedIndex, Query, Weighting};
use nphrase::np::Corpus;
use nphrase::synth::RetrievalFixture;
use nphrase::{em, extract};

fn main() -> nphrase::Result<()> {
    let fixture = RetrievalFixture::generate(21, 4, 6, 60);
    let chunker = StopwordChunker::default();

    // train on the phrases of the collection itself
    let mut corpus = Corpus::new();
    for doc in &fixture.documents {
        use extract::Chunker;
        for tokens in chunker.chunk(&doc.text)?.phrase_tokens() {
            corpus.add(nphrase::NounPhrase::new(tokens.to_vec(), 1)?);
        }
    }
    let trained = em::train_chunk(&corpus, &em::TrainConfig::default())?;
    let params = em::smooth(&trained.params, corpus.vocabulary(), 0.5)?;

    let kind = IndexSetKind::WdHm;
    let sets = build_index_set(&fixture.documents, &params, kind, &chunker);
    let index = InvertedIndex::build(sets.into_iter().map(|d| (d.id, d.terms)), Weighting::default())?;

    let config = FeedbackConfig {
        fb_terms: 5,
        ..FeedbackConfig::default()
    };
    for topic in &fixture.topics {
        let query = Query::from_terms(topic.id.clone(), text_terms(&topic.text, &params, kind, &chunker));
        let plain = index.search(&query, 10)?;
        let fb = index.feedback_search(&query, 10, &config)?;
        println!("{} \"{}\"", topic.id, topic.text);
        println!("  plain:    {}", plain.doc_ids().take(6).collect::<Vec<_>>().join(" "));
        println!("  feedback: {}", fb.ranking.doc_ids().take(6).collect::<Vec<_>>().join(" "));
        let added: Vec<String> = fb.expansion.iter().map(|(t, w)| format!("{t} ({w:.2})")).collect();
        println!("  added:    {}", added.join(", "));
    }
    Ok(())
}
