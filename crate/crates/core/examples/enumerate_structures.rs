//! Lists every binary bracketing of short noun phrases and the
//! modifier/head pairs each one implies.
//!
//! ```bash
//! cargo run --example enumerate_structures
//! ```

use nphrase::np::{structures, Token};

fn main() -> nphrase::Result<()> {
    for len in 2..=6 {
        println!("length {len}: {} structures", structures(len)?.len());
    }

    let words: Vec<Token> = ["heavy", "construction", "industry", "group"]
        .iter()
        .map(|w| Token::new(w))
        .collect::<Result<_, _>>()?;
    println!();
    for s in structures(words.len())? {
        let pairs: Vec<String> = s
            .pairs()
            .iter()
            .map(|&(m, h)| format!("{}->{}", words[m], words[h]))
            .collect();
        println!("{:<44} {}", s.render(&words), pairs.join(", "));
    }
    Ok(())
}
