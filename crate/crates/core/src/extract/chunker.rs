//! A transparent heuristic noun-phrase chunker.
//!
//! Candidate phrases are maximal runs of content words, where a run is broken
//! by stopwords, punctuation and (when a lexicon is supplied) words the
//! lexicon marks as neither noun nor adjective. Runs of 2 to 6 words become
//! phrases; shorter or longer runs contribute single words only.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::np::{Token, MAX_PHRASE_LEN, MIN_PHRASE_LEN};

const STOPWORDS: &str = "a about above after again against all also am an and any are as at be \
because been before being below between both but by can could did do does doing down during \
each either else ever every few for from further had has have having he her here hers herself \
him himself his how however i if in into is it its itself just may me might more most must my \
myself neither no nor not of off on once only or other ought our ours ourselves out over own \
per same shall she should since so some such than that the their theirs them themselves then \
there these they this those through thus to too under until up upon us very via was we were \
what when where whether which while who whom whose why will with within without would yet you \
your yours yourself yourselves said says say";

pub fn default_stopwords() -> HashSet<String> {
    STOPWORDS.split_whitespace().map(str::to_string).collect()
}

/// A word or a phrase boundary in running text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TextToken {
    Word(String),
    Break,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '\''
}

/// Splits text into lowercased words and boundary markers. Any character
/// that is neither part of a word nor whitespace is a boundary.
pub fn tokenize_text(text: &str) -> Vec<TextToken> {
    let mut out = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut Vec<TextToken>| {
        let trimmed = word.trim_matches(|c| c == '-' || c == '\'');
        if trimmed.chars().any(char::is_alphanumeric) {
            out.push(TextToken::Word(trimmed.to_lowercase()));
        }
        word.clear();
    };
    for c in text.chars() {
        if is_word_char(c) {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            if !c.is_whitespace() && out.last() != Some(&TextToken::Break) {
                out.push(TextToken::Break);
            }
        }
    }
    flush(&mut word, &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PosClass {
    Noun,
    Adjective,
    Other,
}

/// Optional word-class lexicon gating which words may appear in phrases.
#[derive(Clone, Debug, Default)]
pub struct PosLexicon {
    classes: HashMap<String, PosClass>,
}

impl PosLexicon {
    pub fn insert(&mut self, word: &str, class: PosClass) {
        self.classes.insert(word.to_lowercase(), class);
    }

    pub fn class(&self, word: &str) -> Option<PosClass> {
        self.classes.get(word).copied()
    }

    /// Reads `word<TAB>tag` lines; tags starting with `N` are nouns, `J` or
    /// `A` adjectives, anything else other.
    pub fn read<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut lex = PosLexicon::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::format(source, i + 1, e.to_string()))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((word, tag)) = line.split_once('\t') else {
                return Err(Error::format(source, i + 1, "expected word<TAB>tag"));
            };
            let class = match tag.trim().chars().next() {
                Some('N' | 'n') => PosClass::Noun,
                Some('J' | 'j' | 'A' | 'a') => PosClass::Adjective,
                _ => PosClass::Other,
            };
            lex.insert(word.trim(), class);
        }
        Ok(lex)
    }
}

/// Content words of a text and the noun-phrase spans over them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chunked {
    pub words: Vec<Token>,
    /// Sorted, non-overlapping spans into `words`.
    pub phrases: Vec<Range<usize>>,
}

impl Chunked {
    pub fn phrase_tokens(&self) -> impl Iterator<Item = &[Token]> + '_ {
        self.phrases.iter().map(|r| &self.words[r.clone()])
    }
}

pub trait Chunker: Send + Sync {
    fn chunk(&self, text: &str) -> Result<Chunked>;
}

#[derive(Clone, Debug)]
pub struct StopwordChunker {
    stopwords: HashSet<String>,
    lexicon: Option<PosLexicon>,
}

impl Default for StopwordChunker {
    fn default() -> Self {
        StopwordChunker {
            stopwords: default_stopwords(),
            lexicon: None,
        }
    }
}

impl StopwordChunker {
    pub fn new(stopwords: HashSet<String>, lexicon: Option<PosLexicon>) -> Self {
        StopwordChunker { stopwords, lexicon }
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    fn close_run(&self, words: &[Token], run: Range<usize>, phrases: &mut Vec<Range<usize>>) {
        let mut run = run;
        if let Some(lex) = &self.lexicon {
            // a phrase ends on its head, which cannot be a known adjective
            while run.len() > 1
                && lex.class(words[run.end - 1].as_str()) == Some(PosClass::Adjective)
            {
                run.end -= 1;
            }
        }
        if (MIN_PHRASE_LEN..=MAX_PHRASE_LEN).contains(&run.len()) {
            phrases.push(run);
        }
    }
}

impl Chunker for StopwordChunker {
    fn chunk(&self, text: &str) -> Result<Chunked> {
        let mut out = Chunked::default();
        let mut start = 0;
        for tok in tokenize_text(text) {
            match tok {
                TextToken::Word(w) if !self.stopwords.contains(&w) => {
                    let blocked = self
                        .lexicon
                        .as_ref()
                        .is_some_and(|lex| lex.class(&w) == Some(PosClass::Other));
                    if blocked {
                        self.close_run(&out.words, start..out.words.len(), &mut out.phrases);
                        out.words.push(Token::new(&w)?);
                        start = out.words.len();
                    } else {
                        out.words.push(Token::new(&w)?);
                    }
                }
                _ => {
                    self.close_run(&out.words, start..out.words.len(), &mut out.phrases);
                    start = out.words.len();
                }
            }
        }
        self.close_run(&out.words, start..out.words.len(), &mut out.phrases);
        Ok(out)
    }
}

/// Content words under the default stopword list, for indexing a text whose
/// chunking failed.
pub(crate) fn fallback_words(text: &str) -> Vec<Token> {
    let stop = default_stopwords();
    tokenize_text(text)
        .into_iter()
        .filter_map(|t| match t {
            TextToken::Word(w) if !stop.contains(&w) => Token::new(&w).ok(),
            _ => None,
        })
        .collect()
}
