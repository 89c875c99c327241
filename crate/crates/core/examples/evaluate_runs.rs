//! Scores ranked lists against relevance judgments and prints a comparison
//! table with relative improvements over the first run.
//!
//! ```bash
//! cargo run --example evaluate_runs
//! ```

use nphrase::eval::{evaluate, evaluate_query, render_table, Qrels, TableRow};
use nphrase::ir::RankedList;

fn ranking(query: &str, docs: &[&str]) -> RankedList {
    RankedList {
        query_id: query.into(),
        entries: docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.to_string(), 1.0 - i as f64 / 100.0))
            .collect(),
    }
}

fn main() -> nphrase::Result<()> {
    let qrels = Qrels::read(
        "1 0 r1 1\n1 0 r2 1\n1 0 r3 1\n1 0 r4 1\n2 0 s1 1\n2 0 s2 1\n".as_bytes(),
        "inline",
    )?;

    let m = evaluate_query(&ranking("1", &["r1", "n1", "r2", "n2"]), &qrels, 1000)?.expect("judged");
    println!(
        "query 1: recall {:.2}, init prec {:.4}, avg prec {:.4}",
        m.recall, m.init_prec, m.avg_prec
    );

    let baseline = vec![
        ranking("1", &["n1", "r1", "n2", "r2", "r3"]),
        ranking("2", &["n3", "n4", "s1"]),
    ];
    let phrases = vec![
        ranking("1", &["r1", "r2", "n1", "r3", "n2"]),
        ranking("2", &["s1", "n3", "s2"]),
    ];
    let rows = vec![
        TableRow {
            label: "WD-SET".into(),
            report: evaluate(&baseline, &qrels, 1000)?,
        },
        TableRow {
            label: "WD-HM-SET".into(),
            report: evaluate(&phrases, &qrels, 1000)?,
        },
    ];
    print!("\n{}", render_table(&rows));
    Ok(())
}
