//! Runs every stage on a generated collection: phrase extraction, training,
//! parsing, the four index sets, searching with feedback, and evaluation.
//!
//! ```bash
//! cargo run --example full_pipeline
//! ```

use std::fs;

use nphrase::extract::write_documents;
use nphrase::pipeline::{run_all, PipelineConfig};
use nphrase::synth::RetrievalFixture;

fn main() -> nphrase::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let dir = tempfile::tempdir()?;
    let fixture = RetrievalFixture::generate(3, 8, 5, 150);

    let docs = dir.path().join("documents.jsonl");
    write_documents(fs::File::create(&docs)?, &fixture.documents)?;
    let topics = dir.path().join("topics.jsonl");
    write_documents(fs::File::create(&topics)?, &fixture.topics)?;
    let qrels = dir.path().join("qrels.txt");
    let mut lines = String::new();
    for topic in &fixture.topics {
        for doc in &fixture.documents {
            if fixture.qrels.is_relevant(&topic.id, &doc.id) {
                lines.push_str(&format!("{} 0 {} 1\n", topic.id, doc.id));
            }
        }
    }
    fs::write(&qrels, lines)?;

    let mut config = PipelineConfig::default();
    config.paths.documents = Some(docs);
    config.paths.topics = Some(topics);
    config.paths.qrels = Some(qrels);
    config.paths.work_dir = dir.path().join("work");
    config.train.seed = 1;
    fs::write(dir.path().join("pipeline.toml"), config.to_toml())?;

    let summary = run_all(&config)?;
    print!("\n{}", summary.table.expect("qrels configured"));
    Ok(())
}
