use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::params::{ParamTable, StructProbs};
use super::{InitMode, TrainConfig};
use crate::error::{Error, Result};
use crate::np::{structures, Corpus, NounPhrase, Token, MAX_PHRASE_LEN};

/// Entries per parallel work unit. Fixed so that the summation order, and
/// therefore every floating-point result, is independent of thread count.
const BLOCK: usize = 512;

/// Number of position pairs `(i, j)` with `i < j` in a phrase of maximal length.
const MAX_POSITION_PAIRS: usize = MAX_PHRASE_LEN * (MAX_PHRASE_LEN - 1) / 2;

/// Index of the position pair `(i, j)`, `i < j`, within a phrase.
#[inline]
fn position_slot(i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < MAX_PHRASE_LEN);
    // pairs ordered by head position: (0,1) (0,2) (1,2) (0,3) ...
    j * (j - 1) / 2 + i
}

fn structure_slots() -> &'static [Vec<Vec<u8>>] {
    use std::sync::OnceLock;
    static SLOTS: OnceLock<Vec<Vec<Vec<u8>>>> = OnceLock::new();
    SLOTS.get_or_init(|| {
        (0..=MAX_PHRASE_LEN)
            .map(|n| {
                if n < 2 {
                    return Vec::new();
                }
                structures(n)
                    .expect("length in range")
                    .iter()
                    .map(|s| {
                        s.pairs()
                            .iter()
                            .map(|&(i, j)| position_slot(i, j) as u8)
                            .collect()
                    })
                    .collect()
            })
            .collect()
    })
}

/// A corpus with words mapped to ids of a sorted word list and every
/// co-occurring word pair mapped to a dense parameter slot.
struct Encoded {
    words: Vec<Token>,
    keys: Vec<(u32, u32)>,
    entries: Vec<Entry>,
}

struct Entry {
    len: usize,
    count: f64,
    slots: [u32; MAX_POSITION_PAIRS],
}

impl Encoded {
    fn new(corpus: &Corpus, extra_words: &[Token]) -> Self {
        let mut all: BTreeSet<&Token> = corpus.vocabulary().iter().collect();
        all.extend(extra_words.iter());
        let words: Vec<Token> = all.into_iter().cloned().collect();
        let id = |t: &Token| words.binary_search(t).expect("vocabulary word") as u32;

        let mut keys = BTreeSet::new();
        let ids: Vec<Vec<u32>> = corpus
            .entries()
            .iter()
            .map(|np| np.tokens().iter().map(id).collect())
            .collect();
        for toks in &ids {
            for j in 1..toks.len() {
                for i in 0..j {
                    keys.insert((toks[i], toks[j]));
                }
            }
        }
        let keys: Vec<(u32, u32)> = keys.into_iter().collect();
        let slot_of = |k: (u32, u32)| keys.binary_search(&k).expect("co-occurring pair") as u32;

        let entries = corpus
            .entries()
            .iter()
            .zip(&ids)
            .map(|(np, toks)| {
                let mut slots = [0u32; MAX_POSITION_PAIRS];
                for j in 1..toks.len() {
                    for i in 0..j {
                        slots[position_slot(i, j)] = slot_of((toks[i], toks[j]));
                    }
                }
                Entry {
                    len: np.len(),
                    count: np.count() as f64,
                    slots,
                }
            })
            .collect();
        Encoded {
            words,
            keys,
            entries,
        }
    }

    /// Current probability of every slot under `params`.
    fn slot_probs(&self, params: &ParamTable) -> Vec<f64> {
        let remap: Vec<Option<u32>> = self.words.iter().map(|w| params.word_id(w.as_str())).collect();
        self.keys
            .iter()
            .map(|&(u, v)| params.pair_prob_ids(remap[u as usize], remap[v as usize]))
            .collect()
    }

    fn phrase_text(&self, entry: usize, corpus: &Corpus) -> String {
        corpus.entries()[entry].text()
    }
}

/// Result of one E-step.
struct Expectation {
    log_likelihood: f64,
    /// Expected count of each slot, unnormalized.
    pair_counts: Vec<f64>,
    /// Expected count of each structure, per length.
    struct_counts: Vec<Vec<f64>>,
    /// Total phrase count per length.
    len_counts: Vec<f64>,
}

#[inline]
fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Posterior weights of one entry; `None` when every structure has zero
/// probability.
fn entry_posterior(
    entry: &Entry,
    log_probs: &[f64],
    struct_prob: &StructProbs,
    scores: &mut Vec<f64>,
) -> Option<f64> {
    let slots = &structure_slots()[entry.len];
    let prior = struct_prob.for_len(entry.len);
    let mut lp = [0.0f64; MAX_POSITION_PAIRS];
    let n_pos = entry.len * (entry.len - 1) / 2;
    for (k, l) in lp.iter_mut().enumerate().take(n_pos) {
        *l = log_probs[entry.slots[k] as usize];
    }
    scores.clear();
    for (s, pairs) in slots.iter().enumerate() {
        let mut score = prior[s].ln();
        for &k in pairs {
            score += lp[k as usize];
        }
        scores.push(score);
    }
    let total = log_sum_exp(scores);
    if total == f64::NEG_INFINITY {
        return None;
    }
    for s in scores.iter_mut() {
        *s = (*s - total).exp();
    }
    Some(total)
}

fn expectation(enc: &Encoded, probs: &[f64], struct_prob: &StructProbs) -> std::result::Result<Expectation, usize> {
    let log_probs: Vec<f64> = probs.iter().map(|p| p.ln()).collect();

    struct Partial {
        ll: f64,
        pair: Vec<(u32, f64)>,
        structs: Vec<(usize, usize, f64)>,
    }

    let partials: Vec<std::result::Result<Partial, usize>> = enc
        .entries
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(b, block)| {
            let mut out = Partial {
                ll: 0.0,
                pair: Vec::with_capacity(block.len() * MAX_POSITION_PAIRS),
                structs: Vec::with_capacity(block.len() * 5),
            };
            let mut post = Vec::with_capacity(42);
            for (e, entry) in block.iter().enumerate() {
                let Some(total) = entry_posterior(entry, &log_probs, struct_prob, &mut post) else {
                    return Err(b * BLOCK + e);
                };
                out.ll += entry.count * total;
                let mut weight = [0.0f64; MAX_POSITION_PAIRS];
                for (s, pairs) in structure_slots()[entry.len].iter().enumerate() {
                    for &k in pairs {
                        weight[k as usize] += post[s];
                    }
                    out.structs.push((entry.len, s, entry.count * post[s]));
                }
                let n_pos = entry.len * (entry.len - 1) / 2;
                for (k, w) in weight.iter().enumerate().take(n_pos) {
                    if *w > 0.0 {
                        out.pair.push((entry.slots[k], entry.count * w));
                    }
                }
            }
            Ok(out)
        })
        .collect();

    let mut exp = Expectation {
        log_likelihood: 0.0,
        pair_counts: vec![0.0; enc.keys.len()],
        struct_counts: (0..=MAX_PHRASE_LEN)
            .map(|n| vec![0.0; if n == 0 { 0 } else { structures(n).map_or(0, <[_]>::len) }])
            .collect(),
        len_counts: vec![0.0; MAX_PHRASE_LEN + 1],
    };
    for partial in partials {
        let partial = partial?;
        exp.log_likelihood += partial.ll;
        for (slot, c) in partial.pair {
            exp.pair_counts[slot as usize] += c;
        }
        for (len, s, c) in partial.structs {
            exp.struct_counts[len][s] += c;
        }
    }
    for entry in &enc.entries {
        exp.len_counts[entry.len] += entry.count;
    }
    Ok(exp)
}

/// Runs one E-step on `probs` and returns `(L(probs), updated probs, updated
/// structure probabilities)`.
fn step(
    enc: &Encoded,
    corpus: &Corpus,
    probs: &[f64],
    struct_prob: &StructProbs,
    update_structs: bool,
) -> Result<(f64, Vec<f64>, StructProbs)> {
    let exp = expectation(enc, probs, struct_prob).map_err(|i| Error::ZeroProbability {
        phrase: enc.phrase_text(i, corpus),
    })?;
    let total: f64 = exp.pair_counts.iter().sum();
    let next: Vec<f64> = exp.pair_counts.iter().map(|c| c / total).collect();
    let mut next_structs = struct_prob.clone();
    if update_structs {
        for (n, counts) in exp.struct_counts.into_iter().enumerate() {
            if exp.len_counts[n] > 0.0 {
                let norm = exp.len_counts[n];
                next_structs.set_len(n, counts.into_iter().map(|c| c / norm).collect());
            }
        }
    }
    Ok((exp.log_likelihood, next, next_structs))
}

fn table_from_slots(enc: &Encoded, probs: &[f64], struct_prob: StructProbs) -> ParamTable {
    let pairs: BTreeMap<(u32, u32), f64> = enc
        .keys
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&k, &p)| (k, p))
        .collect();
    let vocab = enc.words.len();
    ParamTable::from_sorted_ids(enc.words.clone(), pairs, struct_prob, 0.0, vocab)
}

/// `L = Σ c(np) · log Σ_s P(s) Π P(u,v)`, computed in log space.
pub fn log_likelihood(corpus: &Corpus, params: &ParamTable) -> Result<f64> {
    let mut total = 0.0;
    let mut scores = Vec::with_capacity(42);
    for np in corpus.entries() {
        let ll = phrase_log_prob(np.tokens(), params, &mut scores);
        if ll == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability { phrase: np.text() });
        }
        total += np.count() as f64 * ll;
    }
    Ok(total)
}

/// Fills `scores` with `log P(s) + Σ log P(u,v)` for each structure and
/// returns their log-sum-exp.
fn phrase_log_prob(tokens: &[Token], params: &ParamTable, scores: &mut Vec<f64>) -> f64 {
    let n = tokens.len();
    let ids: Vec<Option<u32>> = tokens.iter().map(|t| params.word_id(t.as_str())).collect();
    let prior = params.struct_probs().for_len(n);
    scores.clear();
    for (s, structure) in structures(n).expect("validated length").iter().enumerate() {
        let mut score = prior[s].ln();
        for &(i, j) in structure.pairs() {
            score += params.pair_prob_ids(ids[i], ids[j]).ln();
        }
        scores.push(score);
    }
    log_sum_exp(scores)
}

/// `P(s | np)` for each structure of the phrase's length, in canonical order.
pub fn posterior(np: &NounPhrase, params: &ParamTable) -> Result<Vec<f64>> {
    let mut scores = Vec::with_capacity(42);
    let total = phrase_log_prob(np.tokens(), params, &mut scores);
    if total == f64::NEG_INFINITY {
        return Err(Error::ZeroProbability { phrase: np.text() });
    }
    Ok(scores.into_iter().map(|s| (s - total).exp()).collect())
}

/// Unnormalized expected counts from one E-step.
#[derive(Clone, Debug)]
pub struct ExpectedCounts {
    pub pairs: BTreeMap<(Token, Token), f64>,
    pub log_likelihood: f64,
}

impl ExpectedCounts {
    pub fn total(&self) -> f64 {
        self.pairs.values().sum()
    }
}

/// The E-step on its own: expected pair counts under `params`.
pub fn expected_counts(corpus: &Corpus, params: &ParamTable) -> Result<ExpectedCounts> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let enc = Encoded::new(corpus, params.words());
    let probs = enc.slot_probs(params);
    let exp = expectation(&enc, &probs, params.struct_probs()).map_err(|i| {
        Error::ZeroProbability {
            phrase: enc.phrase_text(i, corpus),
        }
    })?;
    let pairs = enc
        .keys
        .iter()
        .zip(exp.pair_counts)
        .map(|(&(u, v), c)| ((enc.words[u as usize].clone(), enc.words[v as usize].clone()), c))
        .collect();
    Ok(ExpectedCounts {
        pairs,
        log_likelihood: exp.log_likelihood,
    })
}

/// One EM iteration. The result is unsmoothed: its support is the set of
/// word pairs co-occurring (in order) in some corpus phrase.
pub fn em_step(corpus: &Corpus, params: &ParamTable, config: &TrainConfig) -> Result<ParamTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let enc = Encoded::new(corpus, params.words());
    let probs = enc.slot_probs(params);
    let (_, next, structs) = step(
        &enc,
        corpus,
        &probs,
        params.struct_probs(),
        !config.uniform_structures,
    )?;
    Ok(table_from_slots(&enc, &next, structs))
}

fn init_slots(enc: &Encoded, mode: InitMode, seed: u64) -> Vec<f64> {
    let raw: Vec<f64> = match mode {
        InitMode::Uniform => vec![1.0; enc.keys.len()],
        InitMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..enc.keys.len()).map(|_| rng.gen_range(0.5..1.5)).collect()
        }
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Initial parameters: mass only on co-occurring pairs, structures uniform.
pub fn initial_params(corpus: &Corpus, mode: InitMode, seed: u64) -> Result<ParamTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let enc = Encoded::new(corpus, &[]);
    let probs = init_slots(&enc, mode, seed);
    Ok(table_from_slots(&enc, &probs, StructProbs::uniform()))
}

/// Output of training on one chunk.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Unsmoothed parameters; their log-likelihood is the last trace entry.
    pub params: ParamTable,
    /// Log-likelihood of the initial parameters and after every update.
    pub trace: Vec<f64>,
    /// Whether the likelihood gain fell below the threshold before the cap.
    pub converged: bool,
}

impl TrainOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub fn final_delta(&self) -> Option<f64> {
        match self.trace.as_slice() {
            [.., a, b] => Some(b - a),
            _ => None,
        }
    }
}

/// Trains on a corpus from `config.init`, iterating until the log-likelihood
/// gain drops below `config.likelihood_threshold` or `max_iterations` updates
/// have been applied.
pub fn train_chunk(corpus: &Corpus, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let enc = Encoded::new(corpus, &[]);
    let probs = init_slots(&enc, config.init, config.seed);
    run_em(&enc, corpus, probs, StructProbs::uniform(), config)
}

/// Like [`train_chunk`] but starting from the given parameters.
pub fn train_from(corpus: &Corpus, init: &ParamTable, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let enc = Encoded::new(corpus, init.words());
    let probs = enc.slot_probs(init);
    run_em(&enc, corpus, probs, init.struct_probs().clone(), config)
}

fn run_em(
    enc: &Encoded,
    corpus: &Corpus,
    mut probs: Vec<f64>,
    mut structs: StructProbs,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let update = !config.uniform_structures;
    let (mut ll, mut next, mut next_structs) = step(enc, corpus, &probs, &structs, update)?;
    let mut trace = vec![ll];
    let mut converged = false;
    for _ in 0..config.max_iterations {
        probs = next;
        structs = next_structs;
        let (ll_new, n, ns) = step(enc, corpus, &probs, &structs, update)?;
        trace.push(ll_new);
        next = n;
        next_structs = ns;
        let gain = ll_new - ll;
        ll = ll_new;
        log::debug!("em iteration {}: L = {ll_new:.6} (gain {gain:.6})", trace.len() - 1);
        if gain < config.likelihood_threshold {
            converged = true;
            break;
        }
    }
    Ok(TrainOutcome {
        params: table_from_slots(enc, &probs, structs),
        trace,
        converged,
    })
}
