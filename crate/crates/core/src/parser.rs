//! Maximum-posterior structure assignment.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::em::ParamTable;
use crate::error::{Error, Result};
use crate::np::{structures, Corpus, NounPhrase, Structure, Token, MAX_PHRASE_LEN};

/// A phrase with its chosen structure.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedNp {
    pub tokens: Vec<Token>,
    pub count: u64,
    pub structure: &'static Structure,
    /// `log P(s) + Σ log P(u,v)` of the chosen structure.
    pub score: f64,
}

impl ParsedNp {
    /// Bracketed form, e.g. `[[heavy=construction]=industry]`.
    pub fn bracketed(&self) -> String {
        self.structure.render(&self.tokens)
    }

    /// Modifier/head word pairs of the chosen structure.
    pub fn word_pairs(&self) -> impl Iterator<Item = (&Token, &Token)> + '_ {
        self.structure
            .pairs()
            .iter()
            .map(|&(m, h)| (&self.tokens[m], &self.tokens[h]))
    }
}

/// Scores every structure of the phrase's length and keeps the best; ties go
/// to the earliest structure in canonical (left-branching-first) order.
pub fn parse_tokens(tokens: &[Token], count: u64, params: &ParamTable) -> Result<ParsedNp> {
    let n = tokens.len();
    if !(1..=MAX_PHRASE_LEN).contains(&n) {
        return Err(Error::StructureLength(n));
    }
    let candidates = structures(n)?;
    if n == 1 {
        return Ok(ParsedNp {
            tokens: tokens.to_vec(),
            count,
            structure: &candidates[0],
            score: 0.0,
        });
    }

    let ids: Vec<Option<u32>> = tokens.iter().map(|t| params.word_id(t.as_str())).collect();
    let mut log_pair = [[f64::NEG_INFINITY; MAX_PHRASE_LEN]; MAX_PHRASE_LEN];
    for j in 1..n {
        for i in 0..j {
            log_pair[i][j] = params.pair_prob_ids(ids[i], ids[j]).ln();
        }
    }
    let prior = params.struct_probs().for_len(n);

    let mut best: Option<(usize, f64)> = None;
    for (s, structure) in candidates.iter().enumerate() {
        // summed in sorted order so equal pair multisets tie exactly
        let mut logs = [0.0f64; MAX_PHRASE_LEN - 1];
        for (slot, &(i, j)) in logs.iter_mut().zip(structure.pairs()) {
            *slot = log_pair[i][j];
        }
        let logs = &mut logs[..n - 1];
        logs.sort_by(f64::total_cmp);
        let score = prior[s].ln() + logs.iter().sum::<f64>();
        if score == f64::NEG_INFINITY {
            continue;
        }
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((s, score));
        }
    }

    let Some((s, score)) = best else {
        let (i, j) = (0..n)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .find(|&(i, j)| log_pair[i][j] == f64::NEG_INFINITY)
            .unwrap_or((0, 1));
        return Err(Error::UnseenPair {
            modifier: tokens[i].to_string(),
            head: tokens[j].to_string(),
        });
    };
    Ok(ParsedNp {
        tokens: tokens.to_vec(),
        count,
        structure: &candidates[s],
        score,
    })
}

pub fn parse(np: &NounPhrase, params: &ParamTable) -> Result<ParsedNp> {
    parse_tokens(np.tokens(), np.count(), params)
}

/// Parses a list of phrases, parsing each distinct token sequence once.
/// Output order matches input order.
pub fn parse_all(phrases: &[NounPhrase], params: &ParamTable) -> Result<Vec<ParsedNp>> {
    let mut unique: Vec<&NounPhrase> = Vec::new();
    let mut slot: HashMap<&[Token], usize> = HashMap::new();
    let index: Vec<usize> = phrases
        .iter()
        .map(|np| {
            *slot.entry(np.tokens()).or_insert_with(|| {
                unique.push(np);
                unique.len() - 1
            })
        })
        .collect();
    let parsed: Vec<ParsedNp> = unique
        .par_iter()
        .map(|np| parse(np, params))
        .collect::<Result<_>>()?;
    Ok(phrases
        .iter()
        .zip(index)
        .map(|(np, i)| ParsedNp {
            count: np.count(),
            ..parsed[i].clone()
        })
        .collect())
}

pub fn parse_corpus(corpus: &Corpus, params: &ParamTable) -> Result<Vec<ParsedNp>> {
    parse_all(corpus.entries(), params)
}

/// Writes one `<count>\t<bracketed form>` line per phrase.
pub fn write_parsed<W: Write>(mut out: W, parsed: &[ParsedNp]) -> std::io::Result<()> {
    for p in parsed {
        writeln!(out, "{}\t{}", p.count, p.bracketed())?;
    }
    Ok(())
}
