//! Vector-space retrieval over index sets.
//!
//! Documents and queries are tf-idf vectors (`tf = 1 + ln(raw tf)`), scored
//! by cosine similarity through an inverted index. Pseudo-relevance feedback
//! expands the query with the strongest terms of the top-ranked documents.

mod io;
mod stem;

pub use io::{read_index, read_run, write_index, write_run};
pub use stem::s_stem;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{Term, TermKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdfScheme {
    /// `ln(N / df)`; a term present in every document gets weight zero.
    Log,
    /// `ln(N / df) + 1`.
    #[default]
    LogPlusOne,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stemming {
    #[default]
    None,
    /// Plural-stripping "S" stemmer, applied to every token of every term.
    S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weighting {
    pub idf: IdfScheme,
    pub stemming: Stemming,
    /// Multiplier applied to single-word term weights.
    pub word_weight: f64,
    pub head_mod_weight: f64,
    pub full_np_weight: f64,
}

impl Default for Weighting {
    fn default() -> Self {
        Weighting {
            idf: IdfScheme::LogPlusOne,
            stemming: Stemming::None,
            word_weight: 1.0,
            head_mod_weight: 1.0,
            full_np_weight: 1.0,
        }
    }
}

impl Weighting {
    pub fn multiplier(&self, kind: TermKind) -> f64 {
        match kind {
            TermKind::Word => self.word_weight,
            TermKind::HeadMod => self.head_mod_weight,
            TermKind::FullNp => self.full_np_weight,
        }
    }

    pub fn idf(&self, docs: usize, df: usize) -> f64 {
        let base = (docs as f64 / df as f64).ln();
        match self.idf {
            IdfScheme::Log => base,
            IdfScheme::LogPlusOne => base + 1.0,
        }
    }

    pub fn tf(raw: f64) -> f64 {
        if raw > 0.0 {
            1.0 + raw.ln()
        } else {
            0.0
        }
    }

    /// Applies the configured stemming to a term.
    pub fn normalize(&self, term: &Term) -> Term {
        match self.stemming {
            Stemming::None => term.clone(),
            Stemming::S => Term {
                kind: term.kind,
                text: term.tokens().map(s_stem).collect::<Vec<_>>().join(" "),
            },
        }
    }
}

/// A query as a weighted multiset of terms (weights are raw frequencies).
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub id: String,
    pub terms: BTreeMap<Term, f64>,
}

impl Query {
    pub fn from_terms(id: impl Into<String>, terms: impl IntoIterator<Item = Term>) -> Self {
        let mut map = BTreeMap::new();
        for t in terms {
            *map.entry(t).or_insert(0.0) += 1.0;
        }
        Query {
            id: id.into(),
            terms: map,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    /// `(docId, score)`, scores non-increasing, ties by ascending docId.
    pub entries: Vec<(String, f64)>,
}

impl RankedList {
    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(d, _)| d.as_str())
    }

    pub fn rank_of(&self, doc: &str) -> Option<usize> {
        self.entries.iter().position(|(d, _)| d == doc)
    }

    pub fn score_of(&self, doc: &str) -> Option<f64> {
        self.entries.iter().find(|(d, _)| d == doc).map(|(_, s)| *s)
    }
}

/// A query vector over index term ids: `(term id, weight)`, sorted by id.
pub type QueryVector = Vec<(u32, f64)>;

#[derive(Clone, Debug)]
pub struct InvertedIndex {
    weighting: Weighting,
    doc_ids: Vec<String>,
    terms: Vec<Term>,
    term_ids: HashMap<Term, u32>,
    /// Per term: `(doc index, raw tf)` sorted by doc index.
    postings: Vec<Vec<(u32, u32)>>,
    /// Per document: `(term id, raw tf)` sorted by term id.
    forward: Vec<Vec<(u32, u32)>>,
    doc_norms: Vec<f64>,
}

impl InvertedIndex {
    /// Builds the index. Documents are stored in docId order so that
    /// postings and score ties follow docId order.
    pub fn build<I, S>(docs: I, weighting: Weighting) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<Term>)>,
        S: Into<String>,
    {
        let mut docs: Vec<(String, Vec<Term>)> =
            docs.into_iter().map(|(id, t)| (id.into(), t)).collect();
        if docs.is_empty() {
            return Err(Error::EmptyIndex);
        }
        docs.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = docs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDoc(w[0].0.clone()));
        }

        let mut tf_by_doc: Vec<BTreeMap<Term, u32>> = Vec::with_capacity(docs.len());
        let mut vocabulary: BTreeMap<Term, ()> = BTreeMap::new();
        for (_, terms) in &docs {
            let mut tf = BTreeMap::new();
            for t in terms {
                *tf.entry(weighting.normalize(t)).or_insert(0) += 1;
            }
            for t in tf.keys() {
                if !vocabulary.contains_key(t) {
                    vocabulary.insert(t.clone(), ());
                }
            }
            tf_by_doc.push(tf);
        }
        let terms: Vec<Term> = vocabulary.into_keys().collect();
        let term_ids: HashMap<Term, u32> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();

        let mut postings = vec![Vec::new(); terms.len()];
        let mut forward = Vec::with_capacity(docs.len());
        for (d, tf) in tf_by_doc.into_iter().enumerate() {
            let row: Vec<(u32, u32)> = tf.into_iter().map(|(t, n)| (term_ids[&t], n)).collect();
            for &(t, n) in &row {
                postings[t as usize].push((d as u32, n));
            }
            forward.push(row);
        }

        let mut index = InvertedIndex {
            weighting,
            doc_ids: docs.into_iter().map(|(id, _)| id).collect(),
            terms,
            term_ids,
            postings,
            forward,
            doc_norms: Vec::new(),
        };
        index.doc_norms = (0..index.doc_ids.len())
            .map(|d| {
                index.forward[d]
                    .iter()
                    .map(|&(t, n)| index.doc_weight(t, n).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        Ok(index)
    }

    pub fn weighting(&self) -> &Weighting {
        &self.weighting
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term_id(&self, term: &Term) -> Option<u32> {
        self.term_ids.get(&self.weighting.normalize(term)).copied()
    }

    pub fn doc_freq(&self, term: &Term) -> usize {
        self.term_id(term)
            .map_or(0, |t| self.postings[t as usize].len())
    }

    /// `(docId, raw tf)` postings of a term.
    pub fn postings(&self, term: &Term) -> Vec<(&str, u32)> {
        self.term_id(term)
            .map(|t| {
                self.postings[t as usize]
                    .iter()
                    .map(|&(d, n)| (self.doc_ids[d as usize].as_str(), n))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Raw term frequencies of a document, by term.
    pub fn doc_terms(&self, doc: &str) -> Option<Vec<(&Term, u32)>> {
        let d = self.doc_index(doc)?;
        Some(
            self.forward[d]
                .iter()
                .map(|&(t, n)| (&self.terms[t as usize], n))
                .collect(),
        )
    }

    pub fn doc_norm(&self, doc: &str) -> Option<f64> {
        self.doc_index(doc).map(|d| self.doc_norms[d])
    }

    fn doc_index(&self, doc: &str) -> Option<usize> {
        self.doc_ids
            .binary_search_by(|d| d.as_str().cmp(doc))
            .ok()
    }

    fn term_weight(&self, term: u32, raw_tf: f64) -> f64 {
        let t = term as usize;
        Weighting::tf(raw_tf)
            * self.weighting.idf(self.doc_ids.len(), self.postings[t].len())
            * self.weighting.multiplier(self.terms[t].kind)
    }

    fn doc_weight(&self, term: u32, raw_tf: u32) -> f64 {
        self.term_weight(term, raw_tf as f64)
    }

    /// Weighted query vector; terms absent from the index are dropped.
    pub fn query_vector(&self, query: &Query) -> QueryVector {
        let mut tf: BTreeMap<u32, f64> = BTreeMap::new();
        for (term, &w) in &query.terms {
            if let Some(t) = self.term_id(term) {
                *tf.entry(t).or_insert(0.0) += w;
            }
        }
        tf.into_iter()
            .map(|(t, raw)| (t, self.term_weight(t, raw)))
            .collect()
    }

    /// Ranks documents sharing at least one term with the query vector by
    /// cosine similarity and keeps the top `k`.
    pub fn search_vector(&self, query_id: &str, qvec: &[(u32, f64)], k: usize) -> RankedList {
        let qnorm = qvec.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        let mut dots = vec![0.0f64; self.doc_ids.len()];
        let mut touched = vec![false; self.doc_ids.len()];
        for &(t, qw) in qvec {
            for &(d, n) in &self.postings[t as usize] {
                dots[d as usize] += qw * self.doc_weight(t, n);
                touched[d as usize] = true;
            }
        }
        let mut hits: Vec<(usize, f64)> = touched
            .iter()
            .enumerate()
            .filter(|(_, &hit)| hit)
            .map(|(d, _)| {
                let denom = qnorm * self.doc_norms[d];
                let score = if denom > 0.0 { dots[d] / denom } else { 0.0 };
                (d, score)
            })
            .collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        hits.truncate(k);
        RankedList {
            query_id: query_id.to_string(),
            entries: hits
                .into_iter()
                .map(|(d, s)| (self.doc_ids[d].clone(), s))
                .collect(),
        }
    }

    pub fn search(&self, query: &Query, k: usize) -> Result<RankedList> {
        if query.is_empty() || k == 0 {
            return Err(Error::EmptyQuery(query.id.clone()));
        }
        Ok(self.search_vector(&query.id, &self.query_vector(query), k))
    }

    /// Search with one round of pseudo-relevance feedback.
    pub fn feedback_search(
        &self,
        query: &Query,
        k: usize,
        config: &FeedbackConfig,
    ) -> Result<FeedbackOutcome> {
        if query.is_empty() || k == 0 {
            return Err(Error::EmptyQuery(query.id.clone()));
        }
        let qvec = self.query_vector(query);
        let initial = self.search_vector(&query.id, &qvec, k.max(config.fb_docs));
        if initial.entries.is_empty() {
            return Ok(FeedbackOutcome {
                ranking: initial,
                expansion: Vec::new(),
                no_initial_results: true,
            });
        }
        if config.fb_terms == 0 || config.fb_docs == 0 {
            return Ok(FeedbackOutcome {
                ranking: self.search_vector(&query.id, &qvec, k),
                expansion: Vec::new(),
                no_initial_results: false,
            });
        }

        let mut summed: BTreeMap<u32, f64> = BTreeMap::new();
        for (doc, _) in initial.entries.iter().take(config.fb_docs) {
            let d = self.doc_index(doc).expect("ranked doc is indexed");
            let norm = self.doc_norms[d];
            if norm == 0.0 {
                continue;
            }
            for &(t, n) in &self.forward[d] {
                *summed.entry(t).or_insert(0.0) += self.doc_weight(t, n) / norm;
            }
        }
        let in_query: Vec<u32> = qvec.iter().map(|&(t, _)| t).collect();
        let mut candidates: Vec<(u32, f64)> = summed
            .into_iter()
            .filter(|(t, w)| *w > 0.0 && in_query.binary_search(t).is_err())
            .collect();
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        candidates.truncate(config.fb_terms);

        let mean = qvec.iter().map(|(_, w)| w).sum::<f64>() / qvec.len() as f64;
        let added = config.expansion_weight * mean;
        let mut expanded = qvec.clone();
        expanded.extend(candidates.iter().map(|&(t, _)| (t, added)));
        expanded.sort_by_key(|&(t, _)| t);

        Ok(FeedbackOutcome {
            ranking: self.search_vector(&query.id, &expanded, k),
            expansion: candidates
                .into_iter()
                .map(|(t, w)| (self.terms[t as usize].clone(), w))
                .collect(),
            no_initial_results: false,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackConfig {
    pub enabled: bool,
    /// Top documents of the initial ranking treated as relevant.
    pub fb_docs: usize,
    /// Number of expansion terms added.
    pub fb_terms: usize,
    /// Expansion term weight as a fraction of the mean original term weight.
    pub expansion_weight: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            enabled: true,
            fb_docs: 10,
            fb_terms: 20,
            expansion_weight: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackOutcome {
    pub ranking: RankedList,
    /// Added terms with their summed feedback weight, strongest first.
    pub expansion: Vec<(Term, f64)>,
    /// The initial search matched nothing, so no feedback was applied.
    pub no_initial_results: bool,
}
