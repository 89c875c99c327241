//! Recall, initial precision and average precision against relevance
//! judgments, with a comparison table across index-set runs.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::RankedList;

pub const DEFAULT_CUTOFF: usize = 1000;

/// Binary relevance judgments by query.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, bool>>,
}

impl Qrels {
    pub fn new() -> Self {
        Qrels::default()
    }

    /// Records a judgment; a later judgment for the same pair replaces it.
    pub fn insert(&mut self, query: &str, doc: &str, relevant: bool) {
        self.judgments
            .entry(query.to_string())
            .or_default()
            .insert(doc.to_string(), relevant);
    }

    /// Reads TREC `qid iter docid rel` lines; any positive `rel` is relevant.
    pub fn read<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut qrels = Qrels::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::format(source, lineno, e.to_string()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [qid, _, doc, rel] = fields[..] else {
                return Err(Error::format(source, lineno, "expected qid 0 docid rel"));
            };
            let rel: i64 = rel
                .parse()
                .map_err(|_| Error::format(source, lineno, "bad relevance value"))?;
            qrels.insert(qid, doc, rel > 0);
        }
        Ok(qrels)
    }

    pub fn contains(&self, query: &str) -> bool {
        self.judgments.contains_key(query)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn is_relevant(&self, query: &str, doc: &str) -> bool {
        self.judgments
            .get(query)
            .and_then(|j| j.get(doc))
            .copied()
            .unwrap_or(false)
    }

    pub fn total_relevant(&self, query: &str) -> usize {
        self.judgments
            .get(query)
            .map_or(0, |j| j.values().filter(|&&r| r).count())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: String,
    pub retrieved: usize,
    pub total_relevant: usize,
    pub retrieved_relevant: usize,
    pub recall: f64,
    pub init_prec: f64,
    pub avg_prec: f64,
}

/// Metrics of one ranked list within the top `cutoff` entries. Returns
/// `None` when the query has no relevant documents. Repeated docIds after
/// their first occurrence are ignored.
pub fn evaluate_query(run: &RankedList, qrels: &Qrels, cutoff: usize) -> Result<Option<QueryMetrics>> {
    if !qrels.contains(&run.query_id) {
        return Err(Error::MissingQrels(run.query_id.clone()));
    }
    let total = qrels.total_relevant(&run.query_id);
    if total == 0 {
        return Ok(None);
    }
    let mut seen = HashSet::new();
    let mut rank = 0;
    let mut found = 0;
    let mut prec_sum = 0.0;
    let mut init_prec: f64 = 0.0;
    for doc in run.doc_ids() {
        if rank == cutoff {
            break;
        }
        if !seen.insert(doc) {
            continue;
        }
        rank += 1;
        if qrels.is_relevant(&run.query_id, doc) {
            found += 1;
            let p = found as f64 / rank as f64;
            prec_sum += p;
            init_prec = init_prec.max(p);
        }
    }
    Ok(Some(QueryMetrics {
        query_id: run.query_id.clone(),
        retrieved: rank,
        total_relevant: total,
        retrieved_relevant: found,
        recall: found as f64 / total as f64,
        init_prec,
        avg_prec: prec_sum / total as f64,
    }))
}

/// Macro-averaged metrics over the evaluated queries, plus pooled counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cutoff: usize,
    pub per_query: Vec<QueryMetrics>,
    /// Queries skipped because they have no relevant documents.
    pub excluded: Vec<String>,
    pub recall: f64,
    pub init_prec: f64,
    pub avg_prec: f64,
    pub retrieved_relevant: usize,
    pub total_relevant: usize,
    /// `retrieved_relevant / total_relevant` over all evaluated queries.
    pub pooled_recall: f64,
}

pub fn evaluate(runs: &[RankedList], qrels: &Qrels, cutoff: usize) -> Result<EvalReport> {
    let results: Vec<Option<QueryMetrics>> = runs
        .par_iter()
        .map(|run| evaluate_query(run, qrels, cutoff))
        .collect::<Result<_>>()?;
    let mut per_query = Vec::new();
    let mut excluded = Vec::new();
    for (run, m) in runs.iter().zip(results) {
        match m {
            Some(m) => per_query.push(m),
            None => {
                log::warn!(
                    "query {} has no relevant documents; excluded from averages",
                    run.query_id
                );
                excluded.push(run.query_id.clone());
            }
        }
    }
    let n = per_query.len();
    let mean = |f: fn(&QueryMetrics) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_query.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let retrieved_relevant = per_query.iter().map(|m| m.retrieved_relevant).sum();
    let total_relevant: usize = per_query.iter().map(|m| m.total_relevant).sum();
    Ok(EvalReport {
        cutoff,
        recall: mean(|m| m.recall),
        init_prec: mean(|m| m.init_prec),
        avg_prec: mean(|m| m.avg_prec),
        retrieved_relevant,
        total_relevant,
        pooled_recall: if total_relevant == 0 {
            0.0
        } else {
            retrieved_relevant as f64 / total_relevant as f64
        },
        excluded,
        per_query,
    })
}

/// Relative change of `value` over `base` in whole percent, computed from the
/// values as displayed (integers at display precision) and rounded half up.
pub fn percent_increase(value: i64, base: i64) -> Option<i64> {
    if base <= 0 {
        return None;
    }
    let diff = value - base;
    let magnitude = (diff.abs() * 200 + base) / (2 * base);
    Some(diff.signum() * magnitude)
}

fn display_units(x: f64, scale: f64) -> i64 {
    (x * scale).round() as i64
}

/// One labelled run of a comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub report: EvalReport,
}

/// Text table with one row per run; every run after the first gets an
/// `inc over <first>` line.
pub fn render_table(rows: &[TableRow]) -> String {
    let mut lines: Vec<[String; 4]> = vec![[
        "Experiments".into(),
        "Recall (Ret-Rel)".into(),
        "Init Prec".into(),
        "Avg Prec".into(),
    ]];
    let units = |r: &EvalReport| {
        [
            display_units(r.pooled_recall, 100.0),
            display_units(r.init_prec, 10_000.0),
            display_units(r.avg_prec, 10_000.0),
        ]
    };
    let base = rows.first();
    for (i, row) in rows.iter().enumerate() {
        let r = &row.report;
        lines.push([
            row.label.clone(),
            format!("{:.2}({})", r.pooled_recall, r.retrieved_relevant),
            format!("{:.4}", r.init_prec),
            format!("{:.4}", r.avg_prec),
        ]);
        if let (Some(base), true) = (base, i > 0) {
            let (b, v) = (units(&base.report), units(r));
            let cell = |k: usize| {
                percent_increase(v[k], b[k]).map_or_else(|| "n/a".to_string(), |p| format!("{p}%"))
            };
            lines.push([
                format!("inc over {}", base.label),
                cell(0),
                cell(1),
                cell(2),
            ]);
        }
    }
    let mut widths = [0; 4];
    for line in &lines {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for line in &lines {
        let mut text = String::new();
        for (k, cell) in line.iter().enumerate() {
            let _ = write!(text, "{cell:<w$}  ", w = widths[k]);
        }
        out.push_str(text.trim_end());
        out.push('\n');
    }
    if let Some(base) = base {
        let _ = writeln!(out, "Total relevant documents: {}", base.report.total_relevant);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(q: &str, docs: &[&str]) -> RankedList {
        RankedList {
            query_id: q.into(),
            entries: docs
                .iter()
                .enumerate()
                .map(|(i, d)| (d.to_string(), 1.0 / (i + 1) as f64))
                .collect(),
        }
    }

    fn qrels(q: &str, relevant: &[&str], nonrel: &[&str]) -> Qrels {
        let mut qr = Qrels::new();
        for d in relevant {
            qr.insert(q, d, true);
        }
        for d in nonrel {
            qr.insert(q, d, false);
        }
        qr
    }

    #[test]
    fn alternating_ranking() {
        let qr = qrels("q", &["r1", "r2", "r3", "r4"], &["n1"]);
        let m = evaluate_query(&run("q", &["r1", "n1", "r2", "n2"]), &qr, 1000)
            .unwrap()
            .unwrap();
        assert_eq!(m.recall, 0.5);
        assert!((m.avg_prec - (1.0 + 2.0 / 3.0) / 4.0).abs() < 1e-12);
        assert_eq!(m.init_prec, 1.0);
        assert_eq!(m.retrieved_relevant, 2);
    }

    #[test]
    fn perfect_ranking() {
        let qr = qrels("q", &["a", "b"], &[]);
        let m = evaluate_query(&run("q", &["b", "a"]), &qr, 1000).unwrap().unwrap();
        assert_eq!((m.recall, m.init_prec, m.avg_prec), (1.0, 1.0, 1.0));
    }

    #[test]
    fn cutoff_truncates() {
        let qr = qrels("q", &["a", "b"], &[]);
        let m = evaluate_query(&run("q", &["a", "x", "b"]), &qr, 2).unwrap().unwrap();
        assert_eq!(m.retrieved, 2);
        assert_eq!(m.recall, 0.5);
    }

    #[test]
    fn missing_and_empty_judgments() {
        let qr = qrels("q", &[], &["a"]);
        assert!(matches!(
            evaluate_query(&run("other", &["a"]), &qr, 10),
            Err(Error::MissingQrels(q)) if q == "other"
        ));
        assert_eq!(evaluate_query(&run("q", &["a"]), &qr, 10).unwrap(), None);
        let report = evaluate(&[run("q", &["a"])], &qr, 10).unwrap();
        assert_eq!(report.excluded, vec!["q".to_string()]);
        assert!(report.per_query.is_empty());
        assert_eq!(report.avg_prec, 0.0);
    }

    #[test]
    fn macro_average_and_pooled_recall() {
        let mut qr = qrels("q1", &["a"], &[]);
        qr.insert("q2", "b", true);
        qr.insert("q2", "c", true);
        qr.insert("q2", "d", true);
        let report = evaluate(&[run("q1", &["a"]), run("q2", &["x", "b"])], &qr, 1000).unwrap();
        assert!((report.recall - (1.0 + 1.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!((report.retrieved_relevant, report.total_relevant), (2, 4));
        assert_eq!(report.pooled_recall, 0.5);
    }

    #[test]
    fn qrels_file() {
        let qr = Qrels::read("1 0 d1 1\n1 0 d2 0\n\n2 0 d3 2\n".as_bytes(), "qrels").unwrap();
        assert_eq!(qr.total_relevant("1"), 1);
        assert!(qr.is_relevant("2", "d3"));
        assert!(!qr.is_relevant("1", "d2"));
        assert_eq!(qr.queries().collect::<Vec<_>>(), vec!["1", "2"]);
        assert!(Qrels::read("1 0 d1\n".as_bytes(), "qrels").is_err());
    }

    fn report(ret_rel: usize, total: usize, init: f64, avg: f64) -> EvalReport {
        EvalReport {
            cutoff: 1000,
            per_query: Vec::new(),
            excluded: Vec::new(),
            recall: ret_rel as f64 / total as f64,
            init_prec: init,
            avg_prec: avg,
            retrieved_relevant: ret_rel,
            total_relevant: total,
            pooled_recall: ret_rel as f64 / total as f64,
        }
    }

    #[test]
    fn percentages_round_half_up() {
        assert_eq!(percent_increase(60, 56), Some(7));
        assert_eq!(percent_increase(63, 56), Some(13));
        assert_eq!(percent_increase(50, 56), Some(-11));
        assert_eq!(percent_increase(5, 0), None);
    }

    #[test]
    fn table_layout() {
        let rows = vec![
            TableRow {
                label: "WD-SET".into(),
                report: report(597, 1064, 0.4546, 0.2208),
            },
            TableRow {
                label: "WD-HM-SET".into(),
                report: report(638, 1064, 0.5162, 0.2402),
            },
            TableRow {
                label: "WD-NP-SET".into(),
                report: report(613, 1064, 0.5373, 0.2564),
            },
            TableRow {
                label: "WD-HM-NP-SET".into(),
                report: report(666, 1064, 0.4747, 0.2285),
            },
        ];
        let text = render_table(&rows);
        let lines: Vec<Vec<&str>> = text.lines().map(|l| l.split_whitespace().collect()).collect();
        assert_eq!(lines[1], vec!["WD-SET", "0.56(597)", "0.4546", "0.2208"]);
        assert_eq!(lines[2], vec!["WD-HM-SET", "0.60(638)", "0.5162", "0.2402"]);
        assert_eq!(lines[3], vec!["inc", "over", "WD-SET", "7%", "14%", "9%"]);
        assert_eq!(lines[5], vec!["inc", "over", "WD-SET", "4%", "18%", "16%"]);
        assert_eq!(lines[7], vec!["inc", "over", "WD-SET", "13%", "4%", "3%"]);
        assert_eq!(text.lines().last(), Some("Total relevant documents: 1064"));
    }
}
