//! Noun phrases, corpora of noun phrases, and their modification structures.

mod structure;

pub use structure::{
    derive_pairs, enumerate_structures, structures, Bracketing, PositionPair, Structure,
};

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};

pub const MIN_PHRASE_LEN: usize = 2;
pub const MAX_PHRASE_LEN: usize = 6;

/// A normalized (lowercased) word.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(String);

impl Token {
    pub fn new(text: &str) -> Result<Self> {
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(Error::InvalidToken(text.to_string()));
        }
        Ok(Token(text.to_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Token {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Splits on whitespace and normalizes each word.
pub fn tokenize_phrase(text: &str) -> Result<Vec<Token>> {
    text.split_whitespace().map(Token::new).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NounPhrase {
    tokens: Vec<Token>,
    count: u64,
}

impl NounPhrase {
    pub fn new(tokens: Vec<Token>, count: u64) -> Result<Self> {
        if !(MIN_PHRASE_LEN..=MAX_PHRASE_LEN).contains(&tokens.len()) {
            return Err(Error::PhraseLength(tokens.len()));
        }
        Ok(NounPhrase { tokens, count })
    }

    /// Builds a phrase from whitespace-separated text.
    pub fn parse(text: &str, count: u64) -> Result<Self> {
        NounPhrase::new(tokenize_phrase(text)?, count)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn text(&self) -> String {
        join_tokens(&self.tokens)
    }
}

impl fmt::Display for NounPhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

pub(crate) fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_str());
    }
    out
}

/// A line of a corpus file that was rejected or skipped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

/// Parses one corpus line: `token token ...` or `<count>\t<token token ...>`.
/// Blank lines yield `Ok(None)`.
pub fn parse_corpus_line(line: &str) -> std::result::Result<Option<NounPhrase>, String> {
    let line = line.trim_end_matches(['\n', '\r']);
    if line.trim().is_empty() {
        return Ok(None);
    }
    let (count, text) = match line.split_once('\t') {
        Some((c, rest)) => {
            let count: u64 = c
                .trim()
                .parse()
                .map_err(|_| format!("bad count {c:?}"))?;
            if count == 0 {
                return Err("count must be at least 1".into());
            }
            (count, rest)
        }
        None => (1, line),
    };
    let tokens = tokenize_phrase(text).map_err(|e| e.to_string())?;
    match tokens.len() {
        0 => Err("no tokens".into()),
        1 => Err("single words are not corpus entries".into()),
        n if n > MAX_PHRASE_LEN => Err(format!(
            "phrase of {n} words exceeds the {MAX_PHRASE_LEN}-word limit; dropped from training"
        )),
        _ => NounPhrase::new(tokens, count)
            .map(Some)
            .map_err(|e| e.to_string()),
    }
}

/// Unique noun phrases with aggregated counts, in first-occurrence order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    entries: Vec<NounPhrase>,
    lookup: HashMap<Vec<Token>, usize>,
    vocabulary: BTreeSet<Token>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_phrases<I: IntoIterator<Item = NounPhrase>>(phrases: I) -> Self {
        let mut corpus = Corpus::new();
        for np in phrases {
            corpus.add(np);
        }
        corpus
    }

    /// Adds a phrase, merging its count into an existing identical entry.
    pub fn add(&mut self, np: NounPhrase) {
        if let Some(&i) = self.lookup.get(np.tokens()) {
            self.entries[i].count += np.count;
            return;
        }
        for t in np.tokens() {
            if !self.vocabulary.contains(t) {
                self.vocabulary.insert(t.clone());
            }
        }
        self.lookup.insert(np.tokens.clone(), self.entries.len());
        self.entries.push(np);
    }

    pub fn entries(&self) -> &[NounPhrase] {
        &self.entries
    }

    pub fn vocabulary(&self) -> &BTreeSet<Token> {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all entry counts.
    pub fn total_count(&self) -> u64 {
        self.entries.iter().map(NounPhrase::count).sum()
    }

    /// Reads a whole corpus file. Invalid lines are logged and returned as
    /// issues; they never abort the read.
    pub fn read<R: BufRead>(reader: R, source: &str) -> Result<(Corpus, Vec<LineIssue>)> {
        let mut corpus = Corpus::new();
        let mut issues = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::format(source, i + 1, e.to_string()))?;
            match parse_corpus_line(&line) {
                Ok(Some(np)) => corpus.add(np),
                Ok(None) => {}
                Err(message) => {
                    log::warn!("{source}:{}: {message}", i + 1);
                    issues.push(LineIssue {
                        line: i + 1,
                        message,
                    });
                }
            }
        }
        Ok((corpus, issues))
    }

    /// Writes the corpus as `<count>\t<tokens>` lines.
    pub fn write<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for np in &self.entries {
            writeln!(out, "{}\t{}", np.count, np.text())?;
        }
        Ok(())
    }
}
