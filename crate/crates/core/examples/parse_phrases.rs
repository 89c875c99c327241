//! Learns from unbracketed phrases which words modify which, then brackets
//! new phrases and shows the posterior over their structures.
//!
//! ```bash
//! cargo run --example parse_phrases
//! ```

use nphrase::em::{posterior, smooth, train_chunk, TrainConfig};
use nphrase::np::{structures, Corpus, NounPhrase};
use nphrase::parser::parse;

const CORPUS: &str = "\
12\tinformation retrieval
4\tinformation retrieval system
3\tretrieval technique
5\tsearch technique
2\tparsing technique
6\theavy construction
3\tconstruction industry
4\tindustry group
2\tsteel industry group
3\theavy construction industry
";

fn main() -> nphrase::Result<()> {
    let (corpus, issues) = Corpus::read(CORPUS.as_bytes(), "inline")?;
    assert!(issues.is_empty());
    let config = TrainConfig {
        seed: 3,
        ..TrainConfig::default()
    };
    let trained = train_chunk(&corpus, &config)?;
    let params = smooth(&trained.params, corpus.vocabulary(), 0.2)?;

    for text in [
        "information retrieval technique",
        "heavy construction industry group",
        "information retrieval system",
    ] {
        let np = NounPhrase::parse(text, 1)?;
        let parsed = parse(&np, &params)?;
        println!("{text}\n  best: {}", parsed.bracketed());
        let post = posterior(&np, &params)?;
        for (s, p) in structures(np.len())?.iter().zip(post) {
            println!("    {p:.4}  {}", s.render(np.tokens()));
        }
    }
    Ok(())
}
