//! Independent reference implementations used as test oracles, and shared
//! fixture generators.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nphrase::em::{ParamTable, StructProbs};
use nphrase::eval::Qrels;
use nphrase::ir::RankedList;
use nphrase::np::{Corpus, NounPhrase, Token};
use nphrase::Term;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tok(s: &str) -> Token {
    Token::new(s).unwrap()
}

// ---------------------------------------------------------------- trees

/// A binary tree as its set of constituent spans `(start, end)` inclusive.
pub type Spans = BTreeSet<(usize, usize)>;

/// All binary trees over `n` leaves, generated as shift/reduce sequences.
pub fn brute_force_trees(n: usize) -> Vec<Spans> {
    fn go(n: usize, next: usize, stack: &mut Vec<(usize, usize)>, spans: &mut Spans, out: &mut Vec<Spans>) {
        if next == n && stack.len() == 1 {
            out.push(spans.clone());
            return;
        }
        if next < n {
            stack.push((next, next));
            spans.insert((next, next));
            go(n, next + 1, stack, spans, out);
            spans.remove(&(next, next));
            stack.pop();
        }
        if stack.len() >= 2 {
            let right = stack.pop().unwrap();
            let left = stack.pop().unwrap();
            let merged = (left.0, right.1);
            stack.push(merged);
            let fresh = spans.insert(merged);
            go(n, next, stack, spans, out);
            if fresh {
                spans.remove(&merged);
            }
            stack.pop();
            stack.push(left);
            stack.push(right);
        }
    }
    let mut out = Vec::new();
    go(n, 0, &mut Vec::new(), &mut BTreeSet::new(), &mut out);
    out
}

/// Spans of a rendered bracketing such as `[[0 1] 2]`.
pub fn spans_of(text: &str) -> Spans {
    let mut spans = BTreeSet::new();
    let mut open: Vec<usize> = Vec::new();
    let mut leaf = 0;
    let mut num = String::new();
    let flush = |num: &mut String, leaf: &mut usize, spans: &mut Spans| {
        if !num.is_empty() {
            spans.insert((*leaf, *leaf));
            *leaf += 1;
            num.clear();
        }
    };
    for c in text.chars() {
        match c {
            '[' => open.push(leaf),
            ']' => {
                flush(&mut num, &mut leaf, &mut spans);
                let start = open.pop().unwrap();
                spans.insert((start, leaf - 1));
            }
            ' ' => flush(&mut num, &mut leaf, &mut spans),
            d => num.push(d),
        }
    }
    flush(&mut num, &mut leaf, &mut spans);
    spans
}

/// Modifier/head pairs of a tree with rightmost heads: word `i` heads the
/// largest span ending at `i`; that span is a left child, and `i` modifies
/// the last word of its parent.
pub fn oracle_pairs(spans: &Spans, n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let start = spans
            .iter()
            .filter(|&&(_, e)| e == i)
            .map(|&(s, _)| s)
            .min()
            .unwrap();
        let parent_end = spans
            .iter()
            .filter(|&&(s, e)| s == start && e > i)
            .map(|&(_, e)| e)
            .min()
            .unwrap();
        pairs.push((i, parent_end));
    }
    pairs.sort();
    pairs
}

// ---------------------------------------------------------------- model

/// Pair probability as seen by the model: stored value or the floor.
pub fn prob(params: &ParamTable, u: &Token, v: &Token) -> f64 {
    params.pair_prob(u.as_str(), v.as_str())
}

/// `P(s) Π P(u,v)` for every structure, computed by plain products over the
/// oracle's own tree enumeration and pair derivation, in canonical order.
pub fn joint_probs(tokens: &[Token], params: &ParamTable) -> Vec<f64> {
    let n = tokens.len();
    let canon = nphrase::np::structures(n).unwrap();
    let prior = params.struct_probs().for_len(n);
    canon
        .iter()
        .enumerate()
        .map(|(s, st)| {
            let spans = spans_of(&st.bracketing().to_string());
            oracle_pairs(&spans, n)
                .into_iter()
                .map(|(i, j)| prob(params, &tokens[i], &tokens[j]))
                .product::<f64>()
                * prior[s]
        })
        .collect()
}

pub fn oracle_posterior(tokens: &[Token], params: &ParamTable) -> Vec<f64> {
    let joint = joint_probs(tokens, params);
    let z: f64 = joint.iter().sum();
    joint.into_iter().map(|p| p / z).collect()
}

/// Index of the most probable structure; scores within a relative 1e-12 of
/// the maximum count as tied and the earliest wins.
pub fn oracle_argmax(tokens: &[Token], params: &ParamTable) -> usize {
    let joint = joint_probs(tokens, params);
    let max = joint.iter().cloned().fold(f64::MIN, f64::max);
    joint
        .iter()
        .position(|&p| p >= max * (1.0 - 1e-12))
        .unwrap()
}

pub fn oracle_log_likelihood(corpus: &Corpus, params: &ParamTable) -> f64 {
    corpus
        .entries()
        .iter()
        .map(|np| np.count() as f64 * joint_probs(np.tokens(), params).iter().sum::<f64>().ln())
        .sum()
}

/// Expected pair counts by enumeration.
pub fn oracle_expected_counts(corpus: &Corpus, params: &ParamTable) -> BTreeMap<(Token, Token), f64> {
    let mut counts = BTreeMap::new();
    for np in corpus.entries() {
        let t = np.tokens();
        let post = oracle_posterior(t, params);
        for (st, p) in nphrase::np::structures(t.len()).unwrap().iter().zip(post) {
            let spans = spans_of(&st.bracketing().to_string());
            for (i, j) in oracle_pairs(&spans, t.len()) {
                *counts.entry((t[i].clone(), t[j].clone())).or_insert(0.0) += np.count() as f64 * p;
            }
        }
    }
    counts
}

/// One EM update by enumeration (uniform structures kept).
pub fn oracle_em_step(corpus: &Corpus, params: &ParamTable) -> BTreeMap<(Token, Token), f64> {
    let counts = oracle_expected_counts(corpus, params);
    let total: f64 = counts.values().sum();
    counts.into_iter().map(|(k, c)| (k, c / total)).collect()
}

pub fn table_from(pairs: &BTreeMap<(Token, Token), f64>) -> ParamTable {
    ParamTable::from_pairs([], pairs.clone(), StructProbs::uniform(), 0.0, None)
}

// ---------------------------------------------------------------- fixtures

/// Seeded corpus of up to `max_phrases` phrases over a `vocab`-word
/// vocabulary with lengths 2..=6.
pub fn random_corpus(seed: u64, max_phrases: usize, vocab: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_phrases);
    let mut corpus = Corpus::new();
    for _ in 0..n {
        let len = rng.gen_range(2..=6);
        let tokens = (0..len).map(|_| tok(&format!("v{}", rng.gen_range(0..vocab)))).collect();
        corpus.add(NounPhrase::new(tokens, rng.gen_range(1..=3)).unwrap());
    }
    corpus
}

/// A random phrase and a random smoothed-looking parameter table covering
/// some of its pairs, with random structure priors.
pub fn random_parse_fixture(seed: u64) -> (NounPhrase, ParamTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = rng.gen_range(2..8);
    let len = rng.gen_range(2..=6);
    let tokens: Vec<Token> = (0..len).map(|_| tok(&format!("x{}", rng.gen_range(0..vocab)))).collect();
    let words: Vec<Token> = (0..vocab).map(|i| tok(&format!("x{i}"))).collect();
    let mut raw = BTreeMap::new();
    for u in &words {
        for v in &words {
            if rng.gen_bool(0.6) {
                raw.insert((u.clone(), v.clone()), rng.gen_range(0.01..1.0));
            }
        }
    }
    let unstored = (vocab * vocab - raw.len()) as f64;
    let floor_mass = if unstored > 0.0 { rng.gen_range(0.0..0.3) } else { 0.0 };
    let stored_total: f64 = raw.values().sum();
    let scale = if raw.is_empty() { 0.0 } else { (1.0 - floor_mass) / stored_total };
    let pairs: BTreeMap<_, _> = raw.into_iter().map(|(k, p)| (k, p * scale)).collect();
    let floor = if unstored > 0.0 {
        if pairs.is_empty() { 1.0 / unstored } else { floor_mass / unstored }
    } else {
        0.0
    };
    let mut sp = StructProbs::uniform();
    if rng.gen_bool(0.5) {
        for n in 2..=6 {
            let k = nphrase::np::structures(n).unwrap().len();
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
            let z: f64 = w.iter().sum();
            sp = sp.with_len(n, w.into_iter().map(|x| x / z).collect()).unwrap();
        }
    }
    let table = ParamTable::from_pairs(words, pairs, sp, floor, Some(vocab));
    (NounPhrase::new(tokens, 1).unwrap(), table)
}

// ---------------------------------------------------------------- retrieval

/// Cosine scores of every document against the query computed with dense
/// vectors: `(1 + ln tf) · (ln(N/df) + 1)` on both sides.
pub fn dense_cosine(docs: &[(String, Vec<Term>)], query: &[Term]) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let mut df: HashMap<&Term, f64> = HashMap::new();
    for (_, terms) in docs {
        for t in terms.iter().collect::<BTreeSet<_>>() {
            *df.entry(t).or_insert(0.0) += 1.0;
        }
    }
    let vector = |terms: &[Term]| -> HashMap<Term, f64> {
        let mut tf: HashMap<Term, f64> = HashMap::new();
        for t in terms {
            *tf.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        tf.into_iter()
            .filter_map(|(t, f)| {
                let d = *df.get(&t)?;
                Some((t, (1.0 + f.ln()) * ((n / d).ln() + 1.0)))
            })
            .collect()
    };
    let q = vector(query);
    let qn = q.values().map(|w| w * w).sum::<f64>().sqrt();
    docs.iter()
        .filter_map(|(id, terms)| {
            let d = vector(terms);
            let dn = d.values().map(|w| w * w).sum::<f64>().sqrt();
            let overlap = q.keys().any(|t| d.contains_key(t));
            if !overlap {
                return None;
            }
            let dot: f64 = q.iter().map(|(t, w)| w * d.get(t).copied().unwrap_or(0.0)).sum();
            Some((id.clone(), dot / (qn * dn)))
        })
        .collect()
}

// ---------------------------------------------------------------- evaluation

#[derive(Debug, PartialEq)]
pub struct RefMetrics {
    pub recall: f64,
    pub init_prec: f64,
    pub avg_prec: f64,
    pub ret_rel: usize,
}

/// Reference metrics: precision at every rank, interpolated precision at
/// recall zero, and mean precision at relevant ranks.
pub fn reference_metrics(docs: &[String], relevant: &BTreeSet<String>, cutoff: usize) -> Option<RefMetrics> {
    if relevant.is_empty() {
        return None;
    }
    let ranked: Vec<bool> = docs.iter().take(cutoff).map(|d| relevant.contains(d)).collect();
    let mut hits = 0usize;
    let mut precision_at = Vec::new();
    let mut relevant_ranks = Vec::new();
    for (i, &rel) in ranked.iter().enumerate() {
        if rel {
            hits += 1;
            relevant_ranks.push(i + 1);
        }
        precision_at.push(hits as f64 / (i + 1) as f64);
    }
    let total = relevant.len() as f64;
    let mut sum = 0.0;
    for (k, &r) in relevant_ranks.iter().enumerate() {
        sum += (k + 1) as f64 / r as f64;
    }
    let init_prec = precision_at.iter().cloned().fold(0.0, f64::max);
    Some(RefMetrics {
        recall: hits as f64 / total,
        init_prec,
        avg_prec: sum / total,
        ret_rel: hits,
    })
}

/// A random ranking with unique docIds and matching judgments.
pub fn random_eval_fixture(seed: u64) -> (RankedList, Qrels, BTreeSet<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = rng.gen_range(1..60);
    let mut ids: Vec<String> = (0..pool).map(|i| format!("d{i}")).collect();
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.gen_range(0..=i));
    }
    let retrieved = rng.gen_range(0..=pool);
    let mut relevant = BTreeSet::new();
    let mut qrels = Qrels::new();
    let p = rng.gen_range(0.05..0.8);
    for id in &ids {
        let rel = rng.gen_bool(p);
        qrels.insert("q", id, rel);
        if rel {
            relevant.insert(id.clone());
        }
    }
    // judged-relevant documents that were never retrieved
    for k in 0..rng.gen_range(0..5) {
        let id = format!("unretrieved{k}");
        qrels.insert("q", &id, true);
        relevant.insert(id);
    }
    let run = RankedList {
        query_id: "q".into(),
        entries: ids[..retrieved]
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), 1.0 - i as f64 / 1000.0))
            .collect(),
    };
    (run, qrels, relevant)
}

// ---------------------------------------------------------------- pipeline

/// Writes a generated collection to `dir` and returns a pipeline config
/// pointing at it, with artifacts under `dir/work`.
pub fn write_fixture(
    dir: &std::path::Path,
    fixture: &nphrase::synth::RetrievalFixture,
) -> nphrase::pipeline::PipelineConfig {
    use std::fmt::Write as _;
    let docs = dir.join("documents.jsonl");
    nphrase::extract::write_documents(std::fs::File::create(&docs).unwrap(), &fixture.documents).unwrap();
    let topics = dir.join("topics.jsonl");
    nphrase::extract::write_documents(std::fs::File::create(&topics).unwrap(), &fixture.topics).unwrap();
    let mut lines = String::new();
    for topic in &fixture.topics {
        for doc in &fixture.documents {
            let rel = fixture.qrels.is_relevant(&topic.id, &doc.id) as u8;
            writeln!(lines, "{} 0 {} {rel}", topic.id, doc.id).unwrap();
        }
    }
    let qrels = dir.join("qrels.txt");
    std::fs::write(&qrels, lines).unwrap();
    let mut config = nphrase::pipeline::PipelineConfig::default();
    config.paths.documents = Some(docs);
    config.paths.topics = Some(topics);
    config.paths.qrels = Some(qrels);
    config.paths.work_dir = dir.join("work");
    config
}
