//! Seeded synthetic noun-phrase corpora and documents for demos, scale tests
//! and throughput measurements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::Qrels;
use crate::extract::Document;
use crate::np::{Corpus, NounPhrase, Token};

const LENGTH_WEIGHTS: [(usize, f64); 5] = [(2, 0.55), (3, 0.27), (4, 0.11), (5, 0.05), (6, 0.02)];
const FILLERS: [&str; 8] = ["the", "of", "in", "and", "was", "for", "to", "a"];

/// Draws phrases over a Zipf-distributed vocabulary `w0, w1, ...`.
pub struct SyntheticCorpus {
    rng: ChaCha8Rng,
    words: Vec<Token>,
    cdf: Vec<f64>,
}

impl SyntheticCorpus {
    pub fn new(seed: u64) -> Self {
        Self::with_vocab(seed, 5000)
    }

    pub fn with_vocab(seed: u64, vocab: usize) -> Self {
        let words = (0..vocab)
            .map(|i| Token::new(&format!("w{i}")).expect("valid token"))
            .collect();
        let mut cdf = Vec::with_capacity(vocab);
        let mut acc = 0.0;
        for r in 1..=vocab {
            acc += 1.0 / r as f64;
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        SyntheticCorpus {
            rng: ChaCha8Rng::seed_from_u64(seed),
            words,
            cdf,
        }
    }

    fn word(&mut self) -> Token {
        let x: f64 = self.rng.gen();
        let i = self.cdf.partition_point(|&c| c < x).min(self.words.len() - 1);
        self.words[i].clone()
    }

    fn length(&mut self) -> usize {
        let x: f64 = self.rng.gen();
        let mut acc = 0.0;
        for (len, w) in LENGTH_WEIGHTS {
            acc += w;
            if x < acc {
                return len;
            }
        }
        LENGTH_WEIGHTS[LENGTH_WEIGHTS.len() - 1].0
    }

    /// One raw phrase with count 1.
    pub fn phrase(&mut self) -> NounPhrase {
        let len = self.length();
        let tokens = (0..len).map(|_| self.word()).collect();
        NounPhrase::new(tokens, 1).expect("length within bounds")
    }

    /// `n` raw phrases, duplicates not aggregated.
    pub fn raw_phrases(&mut self, n: usize) -> Vec<NounPhrase> {
        (0..n).map(|_| self.phrase()).collect()
    }

    /// A corpus aggregated from `n` raw phrases.
    pub fn phrases(&mut self, n: usize) -> Corpus {
        Corpus::from_phrases((0..n).map(|_| self.phrase()))
    }

    /// Corpus-file text of roughly `bytes` bytes, one raw phrase per line.
    pub fn corpus_text(&mut self, bytes: usize) -> String {
        let mut out = String::with_capacity(bytes + 64);
        while out.len() < bytes {
            out.push_str(&self.phrase().text());
            out.push('\n');
        }
        out
    }

    /// Document text of about `phrases` noun phrases separated by function
    /// words and sentence punctuation.
    pub fn document(&mut self, phrases: usize) -> String {
        let mut out = String::new();
        for i in 0..phrases {
            if i > 0 {
                let filler = FILLERS[self.rng.gen_range(0..FILLERS.len())];
                out.push(' ');
                out.push_str(filler);
                out.push(' ');
            }
            out.push_str(&self.phrase().text());
            if self.rng.gen_bool(0.2) {
                out.push('.');
            }
        }
        out
    }
}

/// A seeded test collection where each topic names a two-word phrase.
/// Relevant documents contain the phrase; an equal number of distractors
/// contain the same two words only in reversed order or in separate phrases.
#[derive(Clone, Debug)]
pub struct RetrievalFixture {
    pub documents: Vec<Document>,
    pub topics: Vec<Document>,
    pub qrels: Qrels,
}

impl RetrievalFixture {
    pub fn generate(seed: u64, topics: usize, per_topic: usize, background: usize) -> Self {
        let mut gen = SyntheticCorpus::with_vocab(seed, 400);
        let mut documents = Vec::new();
        let mut topic_docs = Vec::new();
        let mut qrels = Qrels::new();
        for t in 0..topics {
            let (a, b) = (format!("t{t}a"), format!("t{t}b"));
            let qid = format!("q{t}");
            topic_docs.push(Document {
                id: qid.clone(),
                text: format!("{a} {b}"),
            });
            for i in 0..per_topic {
                let rel_id = format!("t{t}-rel-{i}");
                let text = format!("{} the {a} {b}. {}", gen.document(3), gen.document(3));
                documents.push(Document { id: rel_id.clone(), text });
                qrels.insert(&qid, &rel_id, true);

                let dis_id = format!("t{t}-dis-{i}");
                let text = if i % 2 == 0 {
                    format!("{} the {b} {a}. {}", gen.document(3), gen.document(3))
                } else {
                    format!("{} of {a}. {} of {b}.", gen.document(3), gen.document(3))
                };
                documents.push(Document { id: dis_id.clone(), text });
                qrels.insert(&qid, &dis_id, false);
            }
        }
        for i in 0..background {
            documents.push(Document {
                id: format!("bg-{i}"),
                text: gen.document(6),
            });
        }
        RetrievalFixture {
            documents,
            topics: topic_docs,
            qrels,
        }
    }
}
