//! Statistical noun-phrase parsing trained with EM on unbracketed phrases,
//! and phrase-based document indexing and retrieval.
//!
//! The pipeline runs in stages, each reading and writing plain files:
//! extract noun phrases from documents, train pair probabilities, parse
//! phrases, build index sets, search, and evaluate.

pub mod em;
pub mod error;
pub mod eval;
pub mod extract;
pub mod ir;
pub mod np;
pub mod parser;
pub mod pipeline;
pub mod synth;

pub use em::{ParamTable, TrainConfig};
pub use error::{Error, Result};
pub use extract::{IndexSetKind, Term, TermKind};
pub use ir::{InvertedIndex, Query, RankedList};
pub use np::{Corpus, NounPhrase, Token};
pub use parser::ParsedNp;
