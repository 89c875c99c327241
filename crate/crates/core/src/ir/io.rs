//! Index persistence and TREC run files.
//!
//! Index file layout (UTF-8 text, tab separated):
//!
//! ```text
//! nphrase-index<TAB>1
//! kind<TAB>WD-HM
//! weighting<TAB>{"idf":"log-plus-one",...}
//! doc<TAB><docId>
//! <TERM_KIND><TAB><term text><TAB><tf>
//! ...
//! ```
//!
//! Every document starts with a `doc` line, so documents without terms are
//! kept. Norms and postings are rebuilt on load.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::extract::{IndexSetKind, Term, TermKind};

use super::{InvertedIndex, RankedList, Weighting};

const MAGIC: &str = "nphrase-index";
const VERSION: u32 = 1;

pub fn write_index<W: Write>(mut out: W, index: &InvertedIndex, kind: IndexSetKind) -> Result<()> {
    writeln!(out, "{MAGIC}\t{VERSION}")?;
    writeln!(out, "kind\t{}", kind.as_str())?;
    writeln!(out, "weighting\t{}", serde_json::to_string(index.weighting())?)?;
    for (d, id) in index.doc_ids.iter().enumerate() {
        writeln!(out, "doc\t{id}")?;
        for &(t, tf) in &index.forward[d] {
            let term = &index.terms[t as usize];
            writeln!(out, "{}\t{}\t{tf}", term.kind.as_str(), term.text)?;
        }
    }
    Ok(())
}

pub fn read_index<R: BufRead>(reader: R, source: &str) -> Result<(InvertedIndex, IndexSetKind)> {
    let mut lines = reader.lines().enumerate();
    let mut header = |expected: &str| -> Result<String> {
        let (i, line) = lines
            .next()
            .ok_or_else(|| Error::format(source, 0, format!("missing {expected} header")))?;
        let line = line.map_err(|e| Error::format(source, i + 1, e.to_string()))?;
        match line.split_once('\t') {
            Some((key, value)) if key == expected => Ok(value.to_string()),
            _ => Err(Error::format(source, i + 1, format!("expected {expected} header"))),
        }
    };
    let version = header(MAGIC)?;
    if version != VERSION.to_string() {
        return Err(Error::format(source, 1, format!("unsupported index version {version}")));
    }
    let kind: IndexSetKind = header("kind")?
        .parse()
        .map_err(|e: String| Error::format(source, 2, e))?;
    let weighting: Weighting = serde_json::from_str(&header("weighting")?)
        .map_err(|e| Error::format(source, 3, e.to_string()))?;

    let mut docs: Vec<(String, Vec<Term>)> = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::format(source, lineno, e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[..] {
            ["doc", id] => docs.push((id.to_string(), Vec::new())),
            [kind, text, tf] => {
                let Some((_, terms)) = docs.last_mut() else {
                    return Err(Error::format(source, lineno, "term before any doc line"));
                };
                let kind: TermKind =
                    kind.parse().map_err(|e: String| Error::format(source, lineno, e))?;
                let tf: usize = tf
                    .parse()
                    .map_err(|_| Error::format(source, lineno, "bad term frequency"))?;
                let term = Term {
                    kind,
                    text: text.to_string(),
                };
                terms.extend(std::iter::repeat_n(term, tf));
            }
            _ => return Err(Error::format(source, lineno, "expected a doc or term line")),
        }
    }
    // stored terms are already stemmed
    let stored = Weighting {
        stemming: super::Stemming::None,
        ..weighting.clone()
    };
    let mut index = InvertedIndex::build(docs, stored)?;
    index.weighting = weighting;
    Ok((index, kind))
}

/// Writes `qid Q0 docid rank score tag` lines, ranks starting at 1.
pub fn write_run<W: Write>(mut out: W, runs: &[RankedList], tag: &str) -> std::io::Result<()> {
    for run in runs {
        for (rank, (doc, score)) in run.entries.iter().enumerate() {
            writeln!(out, "{} Q0 {doc} {} {score:.6} {tag}", run.query_id, rank + 1)?;
        }
    }
    Ok(())
}

/// Reads a TREC run file. Queries keep first-appearance order; entries are
/// ordered by rank.
pub fn read_run<R: BufRead>(reader: R, source: &str) -> Result<Vec<RankedList>> {
    let mut runs: Vec<(RankedList, Vec<usize>)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::format(source, lineno, e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, doc, rank, score, _] = fields[..] else {
            return Err(Error::format(source, lineno, "expected qid Q0 docid rank score tag"));
        };
        let rank: usize = rank
            .parse()
            .map_err(|_| Error::format(source, lineno, "bad rank"))?;
        let score: f64 = score
            .parse()
            .map_err(|_| Error::format(source, lineno, "bad score"))?;
        let pos = match runs.iter().position(|(r, _)| r.query_id == qid) {
            Some(p) => p,
            None => {
                runs.push((
                    RankedList {
                        query_id: qid.to_string(),
                        entries: Vec::new(),
                    },
                    Vec::new(),
                ));
                runs.len() - 1
            }
        };
        let (run, ranks) = &mut runs[pos];
        if run.entries.iter().any(|(d, _)| d == doc) {
            return Err(Error::format(source, lineno, format!("duplicate docid {doc} for query {qid}")));
        }
        run.entries.push((doc.to_string(), score));
        ranks.push(rank);
    }
    Ok(runs
        .into_iter()
        .map(|(run, ranks)| {
            let mut order: Vec<usize> = (0..ranks.len()).collect();
            order.sort_by_key(|&i| ranks[i]);
            RankedList {
                query_id: run.query_id,
                entries: order.into_iter().map(|i| run.entries[i].clone()).collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Query, Stemming};
    use crate::np::Token;

    fn words(s: &str) -> Vec<Term> {
        s.split_whitespace()
            .map(|w| Term::word(&Token::new(w).unwrap()))
            .collect()
    }

    #[test]
    fn index_round_trip() {
        let weighting = Weighting {
            stemming: Stemming::S,
            head_mod_weight: 1.5,
            ..Weighting::default()
        };
        let idx = InvertedIndex::build(
            [("b", words("banks rates rates")), ("a", words("bank")), ("empty", vec![])],
            weighting,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_index(&mut buf, &idx, IndexSetKind::WdHm).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("nphrase-index\t1\nkind\tWD-HM\n"));
        let (back, kind) = read_index(buf.as_slice(), "idx").unwrap();
        assert_eq!(kind, IndexSetKind::WdHm);
        assert_eq!(back.weighting(), idx.weighting());
        assert_eq!(back.doc_ids(), idx.doc_ids());
        assert_eq!(back.terms(), idx.terms());
        let q = Query::from_terms("q", words("banks rates"));
        assert_eq!(back.search(&q, 10).unwrap(), idx.search(&q, 10).unwrap());
    }

    #[test]
    fn index_header_checked() {
        assert!(read_index("nphrase-index\t9\n".as_bytes(), "idx").is_err());
        assert!(read_index("garbage\n".as_bytes(), "idx").is_err());
        let orphan = "nphrase-index\t1\nkind\tWD\nweighting\t{}\nWORD\tx\t1\n";
        assert!(read_index(orphan.as_bytes(), "idx").is_err());
    }

    #[test]
    fn run_round_trip_orders_by_rank() {
        let text = "q1 Q0 d2 2 0.5 t\nq1 Q0 d1 1 0.9 t\nq2 Q0 d3 1 0.1 t\n";
        let runs = read_run(text.as_bytes(), "run").unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].doc_ids().collect::<Vec<_>>(), vec!["d1", "d2"]);
        let mut buf = Vec::new();
        write_run(&mut buf, &runs, "t").unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "q1 Q0 d1 1 0.900000 t\nq1 Q0 d2 2 0.500000 t\nq2 Q0 d3 1 0.100000 t\n"
        );
        assert!(read_run("q1 Q0 d1 1\n".as_bytes(), "run").is_err());
        assert!(read_run("q Q0 d 1 1 t\nq Q0 d 2 1 t\n".as_bytes(), "run").is_err());
    }
}
