//! Indexing terms from parsed noun phrases, and per-document term sets.

mod chunker;

pub use chunker::{
    default_stopwords, tokenize_text, Chunked, Chunker, PosClass, PosLexicon, StopwordChunker,
    TextToken,
};

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::ParamTable;
use crate::error::{Error, Result};
use crate::np::{join_tokens, Token};
use crate::parser::{parse_tokens, ParsedNp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TermKind {
    Word,
    HeadMod,
    FullNp,
}

impl TermKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TermKind::Word => "WORD",
            TermKind::HeadMod => "HEAD_MOD",
            TermKind::FullNp => "FULL_NP",
        }
    }
}

impl FromStr for TermKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "WORD" => Ok(TermKind::Word),
            "HEAD_MOD" => Ok(TermKind::HeadMod),
            "FULL_NP" => Ok(TermKind::FullNp),
            _ => Err(format!("unknown term kind {s:?}")),
        }
    }
}

/// An indexing unit. `text` is the word, `"modifier head"`, or the phrase
/// tokens joined by single spaces.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Term {
    pub kind: TermKind,
    pub text: String,
}

impl Term {
    pub fn word(w: &Token) -> Self {
        Term {
            kind: TermKind::Word,
            text: w.to_string(),
        }
    }

    pub fn head_mod(modifier: &Token, head: &Token) -> Self {
        Term {
            kind: TermKind::HeadMod,
            text: format!("{modifier} {head}"),
        }
    }

    pub fn full_np(tokens: &[Token]) -> Self {
        Term {
            kind: TermKind::FullNp,
            text: join_tokens(tokens),
        }
    }

    /// Tokens of the term in surface order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.text.split(' ')
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.text)
    }
}

/// Which term kinds an index set contains besides single words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndexSetKind {
    #[default]
    #[serde(rename = "WD")]
    Wd,
    #[serde(rename = "WD-HM")]
    WdHm,
    #[serde(rename = "WD-NP")]
    WdNp,
    #[serde(rename = "WD-HM-NP")]
    WdHmNp,
}

impl IndexSetKind {
    pub const ALL: [IndexSetKind; 4] = [
        IndexSetKind::Wd,
        IndexSetKind::WdHm,
        IndexSetKind::WdNp,
        IndexSetKind::WdHmNp,
    ];

    pub fn includes_head_mod(self) -> bool {
        matches!(self, IndexSetKind::WdHm | IndexSetKind::WdHmNp)
    }

    pub fn includes_full_np(self) -> bool {
        matches!(self, IndexSetKind::WdNp | IndexSetKind::WdHmNp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IndexSetKind::Wd => "WD",
            IndexSetKind::WdHm => "WD-HM",
            IndexSetKind::WdNp => "WD-NP",
            IndexSetKind::WdHmNp => "WD-HM-NP",
        }
    }

    /// Row label used in evaluation reports, e.g. `WD-HM-SET`.
    pub fn label(self) -> String {
        format!("{}-SET", self.as_str())
    }
}

impl fmt::Display for IndexSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexSetKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let norm = s.to_ascii_uppercase().replace('_', "-");
        let norm = norm.strip_suffix("-SET").unwrap_or(&norm);
        IndexSetKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| format!("unknown index set {s:?} (expected WD, WD-HM, WD-NP or WD-HM-NP)"))
    }
}

/// Terms generated from one parsed phrase for the given index set.
pub fn extract_terms(parsed: &ParsedNp, kind: IndexSetKind) -> Vec<Term> {
    let mut terms: Vec<Term> = parsed.tokens.iter().map(Term::word).collect();
    if parsed.tokens.len() < 2 {
        return terms;
    }
    if kind.includes_head_mod() {
        terms.extend(parsed.word_pairs().map(|(m, h)| Term::head_mod(m, h)));
    }
    if kind.includes_full_np() {
        terms.push(Term::full_np(&parsed.tokens));
    }
    terms
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// Reads JSON-lines `{"id": ..., "text": ...}` records; blank lines skipped.
pub fn read_documents<R: BufRead>(reader: R, source: &str) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::format(source, i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|e| Error::format(source, i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_documents<W: Write>(mut out: W, docs: &[Document]) -> Result<()> {
    for d in docs {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// All terms of one document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocTerms {
    pub id: String,
    pub terms: Vec<Term>,
}

impl DocTerms {
    /// Term frequencies.
    pub fn counts(&self) -> BTreeMap<&Term, u32> {
        let mut tf = BTreeMap::new();
        for t in &self.terms {
            *tf.entry(t).or_insert(0) += 1;
        }
        tf
    }
}

/// Terms of a text: every content word, plus phrase terms for each chunked
/// noun phrase according to `kind`.
pub fn text_terms(
    text: &str,
    params: &ParamTable,
    kind: IndexSetKind,
    chunker: &dyn Chunker,
) -> Vec<Term> {
    let chunked = match chunker.chunk(text) {
        Ok(c) => c,
        Err(e) => {
            log::warn!("chunking failed ({e}); indexing words only");
            return chunker::fallback_words(text).iter().map(Term::word).collect();
        }
    };
    let mut terms = Vec::with_capacity(chunked.words.len() * 2);
    let mut pos = 0;
    for span in &chunked.phrases {
        terms.extend(chunked.words[pos..span.start].iter().map(Term::word));
        let tokens = &chunked.words[span.clone()];
        match parse_tokens(tokens, 1, params) {
            Ok(parsed) => terms.extend(extract_terms(&parsed, kind)),
            Err(e) => {
                log::warn!("cannot parse {:?} ({e}); indexing its words only", join_tokens(tokens));
                terms.extend(tokens.iter().map(Term::word));
            }
        }
        pos = span.end;
    }
    terms.extend(chunked.words[pos..].iter().map(Term::word));
    terms
}

/// Builds the term set of every document (document-parallel, input order).
pub fn build_index_set(
    documents: &[Document],
    params: &ParamTable,
    kind: IndexSetKind,
    chunker: &dyn Chunker,
) -> Vec<DocTerms> {
    documents
        .par_iter()
        .map(|d| DocTerms {
            id: d.id.clone(),
            terms: text_terms(&d.text, params, kind, chunker),
        })
        .collect()
}

/// Writes aggregated `docId\tkind\tterm\ttf` lines.
pub fn write_index_set<W: Write>(mut out: W, sets: &[DocTerms]) -> std::io::Result<()> {
    for doc in sets {
        for (term, tf) in doc.counts() {
            writeln!(out, "{}\t{}\t{}\t{tf}", doc.id, term.kind.as_str(), term.text)?;
        }
    }
    Ok(())
}

/// Reads an index-set file. Consecutive lines with the same document id form
/// one document; documents keep file order.
pub fn read_index_set<R: BufRead>(reader: R, source: &str) -> Result<Vec<DocTerms>> {
    let mut out: Vec<DocTerms> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::format(source, lineno, e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, kind, text, tf] = fields[..] else {
            return Err(Error::format(source, lineno, "expected docId<TAB>kind<TAB>term<TAB>tf"));
        };
        let kind: TermKind = kind.parse().map_err(|e: String| Error::format(source, lineno, e))?;
        let tf: usize = tf
            .parse()
            .map_err(|_| Error::format(source, lineno, "bad term frequency"))?;
        if out.last().is_none_or(|d| d.id != id) {
            out.push(DocTerms {
                id: id.to_string(),
                terms: Vec::new(),
            });
        }
        let doc = out.last_mut().expect("pushed above");
        let term = Term {
            kind,
            text: text.to_string(),
        };
        doc.terms.extend(std::iter::repeat_n(term, tf));
    }
    Ok(out)
}
