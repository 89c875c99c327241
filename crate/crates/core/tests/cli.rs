mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nphrase::synth::{RetrievalFixture, SyntheticCorpus};

const BIN: &str = env!("CARGO_BIN_EXE_nphrase");
const BANK: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/bank");

fn nphrase(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn bank(file: &str) -> String {
    format!("{BANK}/{file}")
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&nphrase(&[])), 1);
    assert_eq!(code(&nphrase(&["frobnicate"])), 1);
    assert_eq!(code(&nphrase(&["train", "--corpus", "x"])), 1);
    assert_eq!(code(&nphrase(&["index", "--documents", "d", "--params", "p", "--kind", "XY", "-o", "o"])), 1);
    assert_eq!(code(&nphrase(&["run-all"])), 1);
    assert_eq!(code(&nphrase(&["eval", "--qrels", "q", "--run", "a", "--run", "b", "--label", "A"])), 1);
}

#[test]
fn help_and_version_succeed() {
    let out = nphrase(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("extract-nps"));
    assert_eq!(code(&nphrase(&["--version"])), 0);
}

#[test]
fn missing_or_malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.txt");
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(code(&nphrase(&["extract-nps", "--documents", path(&missing), "-o", path(&out)])), 2);

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json\n").unwrap();
    assert_eq!(code(&nphrase(&["extract-nps", "--documents", path(&bad), "-o", path(&out)])), 2);

    let params = dir.path().join("params.txt");
    std::fs::write(&params, "garbage\n").unwrap();
    let corpus = dir.path().join("corpus.txt");
    std::fs::write(&corpus, "a b\n").unwrap();
    let args = ["parse", "--corpus", path(&corpus), "--params", path(&params), "-o", path(&out)];
    assert_eq!(code(&nphrase(&args)), 2);
}

#[test]
fn empty_document_file_gives_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let docs = dir.path().join("docs.jsonl");
    std::fs::write(&docs, "").unwrap();
    let out = dir.path().join("phrases.txt");
    let res = nphrase(&["extract-nps", "--documents", path(&docs), "-o", path(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn stages_chain_on_the_bank_collection() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| -> PathBuf { dir.path().join(name) };
    let ok = |args: &[&str]| {
        let out = nphrase(args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };

    let docs = bank("documents.jsonl");
    ok(&["extract-nps", "--documents", &docs, "-o", path(&p("phrases.txt"))]);
    let phrases = std::fs::read_to_string(p("phrases.txt")).unwrap();
    assert!(phrases.lines().any(|l| l == "terminology bank"));

    let trace = p("trace.json");
    ok(&["train", "--corpus", path(&p("phrases.txt")), "-o", path(&p("params.txt")), "--seed", "7", "--trace", path(&trace)]);
    let trace: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(trace).unwrap()).unwrap();
    assert_eq!(trace.as_array().unwrap().len(), 1);

    ok(&["parse", "--corpus", path(&p("phrases.txt")), "--params", path(&p("params.txt")), "-o", path(&p("parsed.txt"))]);
    let parsed = std::fs::read_to_string(p("parsed.txt")).unwrap();
    assert_eq!(parsed.lines().count(), phrases.lines().count());

    let mut runs = Vec::new();
    for kind in ["WD", "WD-HM"] {
        let index = p(&format!("index-{kind}"));
        ok(&["index", "--documents", &docs, "--params", path(&p("params.txt")), "--kind", kind, "-o", path(&index)]);
        let run = p(&format!("{kind}.run"));
        ok(&[
            "search", "--index", path(&index), "--params", path(&p("params.txt")), "--topics", &bank("topics.jsonl"),
            "-o", path(&run), "--no-feedback",
        ]);
        let text = std::fs::read_to_string(&run).unwrap();
        assert!(text.lines().all(|l| l.split_whitespace().count() == 6));
        runs.push(run);
    }
    let json = p("report.json");
    let table = ok(&[
        "eval", "--qrels", &bank("qrels.txt"), "--run", path(&runs[0]), "--run", path(&runs[1]), "--label", "WD",
        "--label", "WD-HM", "--json", path(&json),
    ]);
    assert!(table.contains("inc over WD"), "{table}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 2);
}

#[test]
fn run_all_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = RetrievalFixture::generate(11, 4, 3, 40);
    let config = common::write_fixture(dir.path(), &fixture);
    let config_path = dir.path().join("pipeline.toml");
    std::fs::write(&config_path, config.to_toml()).unwrap();

    let mut outputs = Vec::new();
    for (workers, name) in [("1", "a"), ("4", "b")] {
        let work = dir.path().join(name);
        let out = nphrase(&["--config", path(&config_path), "--workers", workers, "run-all", "--work-dir", path(&work)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((out.stdout, work));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    for file in ["params.txt", "parsed.txt", "report.txt", "report.json", "runs/WD-SET.run", "runs/WD-HM-NP-SET.run"] {
        let a = std::fs::read(outputs[0].1.join(file)).unwrap();
        let b = std::fs::read(outputs[1].1.join(file)).unwrap();
        assert!(a == b, "{file} differs between runs");
    }
}

#[test]
fn default_config_round_trips() {
    let out = nphrase(&["default-config"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed = nphrase::pipeline::PipelineConfig::from_toml(&text).unwrap();
    assert_eq!(parsed.to_toml(), text);
}

/// Streams a 250 MB corpus through chunked training.
#[test]
#[ignore = "writes and trains on 250 MB"]
fn trains_on_large_corpus() {
    use std::io::Write;
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&corpus).unwrap());
    let mut synth = SyntheticCorpus::new(5);
    let mut written = 0;
    while written < 250_000_000 {
        let chunk = synth.corpus_text(8_000_000);
        file.write_all(chunk.as_bytes()).unwrap();
        written += chunk.len();
    }
    file.flush().unwrap();
    drop(file);
    let params = dir.path().join("params.txt");
    let out = nphrase(&["train", "--corpus", path(&corpus), "-o", path(&params)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).lines().count() >= 60);
}
