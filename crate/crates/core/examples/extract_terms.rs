//! Turns a bracketed phrase into indexing terms for each index set, and
//! builds term sets for whole documents.
//!
//! ```bash
//! cargo run --example extract_terms
//! ```

use nphrase::em::{ParamTable, StructProbs};
use nphrase::extract::{extract_terms, text_terms, IndexSetKind, StopwordChunker};
use nphrase::np::{Bracketing, Token};
use nphrase::parser::parse_tokens;

fn main() -> nphrase::Result<()> {
    let tokens: Vec<Token> = "heavy construction industry group"
        .split(' ')
        .map(Token::new)
        .collect::<Result<_, _>>()?;
    // pair probabilities favouring the left-branching reading
    let pairs = [
        ("heavy", "construction", 0.3),
        ("construction", "industry", 0.3),
        ("industry", "group", 0.3),
    ];
    let params = ParamTable::from_pairs(
        [],
        pairs
            .iter()
            .map(|&(m, h, p)| Ok(((Token::new(m)?, Token::new(h)?), p)))
            .collect::<nphrase::Result<Vec<_>>>()?,
        StructProbs::uniform(),
        0.1 / 13.0,
        Some(4),
    );
    let parsed = parse_tokens(&tokens, 1, &params)?;
    assert_eq!(parsed.structure.bracketing(), &Bracketing::parse("[[[0 1] 2] 3]")?);
    println!("{}", parsed.bracketed());
    for kind in IndexSetKind::ALL {
        let terms: Vec<String> = extract_terms(&parsed, kind)
            .iter()
            .map(ToString::to_string)
            .collect();
        println!("{:<13} {}", kind.label(), terms.join("  "));
    }

    let chunker = StopwordChunker::default();
    let text = "The report on the heavy construction industry group was late.";
    println!("\n{text}");
    for term in text_terms(text, &params, IndexSetKind::WdHmNp, &chunker) {
        println!("  {term}");
    }
    Ok(())
}
