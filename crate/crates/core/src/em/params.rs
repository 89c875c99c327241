//! The parameter table: word-pair modification probabilities, per-length
//! structure probabilities and the smoothing floor.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::np::{structures, Token, MAX_PHRASE_LEN, MIN_PHRASE_LEN};

/// Tolerance for the pair-distribution sum invariant.
pub const PAIR_MASS_TOLERANCE: f64 = 1e-6;
/// Tolerance for the per-length structure-distribution sum invariant.
pub const STRUCT_MASS_TOLERANCE: f64 = 1e-9;

/// Probability of each canonical structure, one distribution per length.
#[derive(Clone, Debug, PartialEq)]
pub struct StructProbs {
    by_len: Vec<Vec<f64>>,
}

impl StructProbs {
    pub fn uniform() -> Self {
        let by_len = (0..=MAX_PHRASE_LEN)
            .map(|n| match n {
                0 => Vec::new(),
                n => {
                    let k = structures(n).expect("length in range").len();
                    vec![1.0 / k as f64; k]
                }
            })
            .collect();
        StructProbs { by_len }
    }

    /// Probabilities of the structures of length `len`, in canonical order.
    pub fn for_len(&self, len: usize) -> &[f64] {
        &self.by_len[len]
    }

    /// Replaces the distribution for one length. It must have one entry per
    /// structure, each in `[0, 1]`, summing to 1.
    pub fn with_len(mut self, len: usize, probs: Vec<f64>) -> Result<Self> {
        let expected = structures(len)?.len();
        if probs.len() != expected {
            return Err(Error::Normalization(format!(
                "length {len} has {expected} structures, got {} probabilities",
                probs.len()
            )));
        }
        self.by_len[len] = probs;
        self.validate()?;
        Ok(self)
    }

    pub(crate) fn set_len(&mut self, len: usize, probs: Vec<f64>) {
        debug_assert_eq!(probs.len(), self.by_len[len].len());
        self.by_len[len] = probs;
    }

    fn validate(&self) -> Result<()> {
        for n in MIN_PHRASE_LEN..=MAX_PHRASE_LEN {
            let p = &self.by_len[n];
            if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::Normalization(format!(
                    "structure probability outside [0,1] for length {n}"
                )));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > STRUCT_MASS_TOLERANCE {
                return Err(Error::Normalization(format!(
                    "structure probabilities for length {n} sum to {sum}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for StructProbs {
    fn default() -> Self {
        Self::uniform()
    }
}

/// Model parameters.
///
/// Word ids index a lexicographically sorted word list, so iterating
/// `pair_prob` in key order is iterating pairs in `(modifier, head)` string
/// order. Any ordered pair not stored has probability `floor`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamTable {
    words: Vec<Token>,
    word_ids: HashMap<Token, u32>,
    pair_prob: BTreeMap<(u32, u32), f64>,
    struct_prob: StructProbs,
    floor: f64,
    vocab_size: usize,
}

impl ParamTable {
    /// Builds a table from string-keyed pairs. `words` may list extra
    /// vocabulary beyond the words occurring in pairs.
    pub fn from_pairs<I>(
        words: impl IntoIterator<Item = Token>,
        pairs: I,
        struct_prob: StructProbs,
        floor: f64,
        vocab_size: Option<usize>,
    ) -> Self
    where
        I: IntoIterator<Item = ((Token, Token), f64)>,
    {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let mut all: BTreeSet<Token> = words.into_iter().collect();
        for ((u, v), _) in &pairs {
            all.insert(u.clone());
            all.insert(v.clone());
        }
        let words: Vec<Token> = all.into_iter().collect();
        let word_ids: HashMap<Token, u32> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let pair_prob = pairs
            .into_iter()
            .map(|((u, v), p)| ((word_ids[&u], word_ids[&v]), p))
            .collect();
        let vocab_size = vocab_size.unwrap_or(words.len()).max(words.len());
        ParamTable {
            words,
            word_ids,
            pair_prob,
            struct_prob,
            floor,
            vocab_size,
        }
    }

    /// Builds a table whose pair keys are already ids into the sorted `words`.
    pub(crate) fn from_sorted_ids(
        words: Vec<Token>,
        pair_prob: BTreeMap<(u32, u32), f64>,
        struct_prob: StructProbs,
        floor: f64,
        vocab_size: usize,
    ) -> Self {
        debug_assert!(words.windows(2).all(|w| w[0] < w[1]));
        let word_ids = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        ParamTable {
            vocab_size: vocab_size.max(words.len()),
            words,
            word_ids,
            pair_prob,
            struct_prob,
            floor,
        }
    }

    pub fn words(&self) -> &[Token] {
        &self.words
    }

    pub fn word_id(&self, word: &str) -> Option<u32> {
        self.word_ids.get(word).copied()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn struct_probs(&self) -> &StructProbs {
        &self.struct_prob
    }

    pub fn num_pairs(&self) -> usize {
        self.pair_prob.len()
    }

    /// Stored probability of `(modifier, head)`, if the pair is retained.
    pub fn stored_pair(&self, modifier: &str, head: &str) -> Option<f64> {
        let u = self.word_id(modifier)?;
        let v = self.word_id(head)?;
        self.pair_prob.get(&(u, v)).copied()
    }

    /// `P(modifier, head)`, falling back to the floor.
    pub fn pair_prob(&self, modifier: &str, head: &str) -> f64 {
        self.stored_pair(modifier, head).unwrap_or(self.floor)
    }

    pub(crate) fn pair_prob_ids(&self, u: Option<u32>, v: Option<u32>) -> f64 {
        match (u, v) {
            (Some(u), Some(v)) => self.pair_prob.get(&(u, v)).copied().unwrap_or(self.floor),
            _ => self.floor,
        }
    }

    /// Retained pairs in `(modifier, head)` order.
    pub fn pairs(&self) -> impl Iterator<Item = (&Token, &Token, f64)> + '_ {
        self.pair_prob
            .iter()
            .map(|(&(u, v), &p)| (&self.words[u as usize], &self.words[v as usize], p))
    }

    /// `Σ stored + floor × (|V|² − #stored)`; 1 for a valid table.
    pub fn total_pair_mass(&self) -> f64 {
        let stored: f64 = self.pair_prob.values().sum();
        stored + self.floor * self.unstored_pair_count()
    }

    pub(crate) fn unstored_pair_count(&self) -> f64 {
        let v = self.vocab_size as f64;
        v * v - self.pair_prob.len() as f64
    }

    /// Checks every table invariant.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.floor) {
            return Err(Error::Normalization(format!("floor {} outside [0,1]", self.floor)));
        }
        if let Some(p) = self.pair_prob.values().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Normalization(format!("pair probability {p} outside [0,1]")));
        }
        let mass = self.total_pair_mass();
        if (mass - 1.0).abs() > PAIR_MASS_TOLERANCE {
            return Err(Error::Normalization(format!("pair probabilities sum to {mass}")));
        }
        self.struct_prob.validate()
    }

    /// Returns a copy with all stored pair probabilities and the floor
    /// multiplied by `factor`. The result is generally not normalized.
    pub fn scaled(&self, factor: f64) -> ParamTable {
        let mut out = self.clone();
        for p in out.pair_prob.values_mut() {
            *p *= factor;
        }
        out.floor *= factor;
        out
    }

    /// Writes the text parameter file.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#vocab {}", self.vocab_size)?;
        writeln!(out, "#floor {:e}", self.floor)?;
        for n in MIN_PHRASE_LEN..=MAX_PHRASE_LEN {
            write!(out, "#structs {n}")?;
            for p in self.struct_prob.for_len(n) {
                write!(out, " {p:e}")?;
            }
            writeln!(out)?;
        }
        for (u, v, p) in self.pairs() {
            writeln!(out, "{u}\t{v}\t{p:e}")?;
        }
        Ok(())
    }

    /// Reads a parameter file and validates its invariants.
    pub fn read<R: BufRead>(reader: R, source: &str) -> Result<ParamTable> {
        let mut vocab_size = None;
        let mut floor = None;
        let mut struct_prob = StructProbs::uniform();
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::format(source, lineno, e.to_string()))?;
            let bad = |msg: &str| Error::format(source, lineno, msg);
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut fields = rest.split_whitespace();
                match fields.next() {
                    Some("vocab") => {
                        vocab_size = Some(parse_field::<usize>(fields.next(), &bad)?);
                    }
                    Some("floor") => floor = Some(parse_field::<f64>(fields.next(), &bad)?),
                    Some("structs") => {
                        let n = parse_field::<usize>(fields.next(), &bad)?;
                        if !(MIN_PHRASE_LEN..=MAX_PHRASE_LEN).contains(&n) {
                            return Err(bad("structure length out of range"));
                        }
                        let probs = fields
                            .map(|f| f.parse::<f64>().map_err(|_| bad("bad structure probability")))
                            .collect::<Result<Vec<_>>>()?;
                        if probs.len() != struct_prob.for_len(n).len() {
                            return Err(bad("wrong number of structure probabilities"));
                        }
                        struct_prob.set_len(n, probs);
                    }
                    _ => return Err(bad("unknown header line")),
                }
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(u), Some(v), Some(p), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(bad("expected u<TAB>v<TAB>p"));
            };
            let u = Token::new(u).map_err(|e| bad(&e.to_string()))?;
            let v = Token::new(v).map_err(|e| bad(&e.to_string()))?;
            let p: f64 = p.parse().map_err(|_| bad("bad probability"))?;
            pairs.push(((u, v), p));
        }
        let vocab_size =
            vocab_size.ok_or_else(|| Error::format(source, 0, "missing #vocab header"))?;
        let floor = floor.ok_or_else(|| Error::format(source, 0, "missing #floor header"))?;
        let table = ParamTable::from_pairs([], pairs, struct_prob, floor, Some(vocab_size));
        table.validate()?;
        Ok(table)
    }
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    bad: &impl Fn(&str) -> Error,
) -> Result<T> {
    field
        .ok_or_else(|| bad("missing value"))?
        .parse()
        .map_err(|_| bad("bad value"))
}

/// Drops the `⌊drop_fraction × #seen⌋` least probable pairs (ties broken by
/// `(modifier, head)` string order) and spreads their mass evenly over every
/// ordered pair of the vocabulary that is not retained.
pub fn smooth(
    params: &ParamTable,
    vocab: &BTreeSet<Token>,
    drop_fraction: f64,
) -> Result<ParamTable> {
    if !(0.0..1.0).contains(&drop_fraction) {
        return Err(Error::Config(format!(
            "drop fraction {drop_fraction} must be in [0, 1)"
        )));
    }
    if params.floor != 0.0 {
        return Err(Error::Config("table is already smoothed".into()));
    }
    let mut words: BTreeSet<Token> = vocab.clone();
    words.extend(params.words.iter().cloned());
    let vocab_size = words.len().max(params.vocab_size);
    if vocab_size < 2 {
        return Err(Error::VocabTooSmall(vocab_size));
    }
    let seen = params.pair_prob.len();
    let n_drop = (drop_fraction * seen as f64).floor() as usize;
    if seen == 0 || n_drop >= seen {
        return Err(Error::DropAll(seen));
    }

    let mut order: Vec<((u32, u32), f64)> =
        params.pair_prob.iter().map(|(&k, &p)| (k, p)).collect();
    // ids follow string order, so the key is the lexicographic tie-break
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let dropped_mass: f64 = order[..n_drop].iter().map(|(_, p)| p).sum();
    let words: Vec<Token> = words.into_iter().collect();
    // the table's words are a sorted subset, so remapping keeps key order
    let remap: Vec<u32> = params
        .words
        .iter()
        .map(|w| words.binary_search(w).expect("word is in the union") as u32)
        .collect();
    let retained: BTreeMap<(u32, u32), f64> = order[n_drop..]
        .iter()
        .map(|&((u, v), p)| ((remap[u as usize], remap[v as usize]), p))
        .collect();
    let v = vocab_size as f64;
    let unseen = v * v - retained.len() as f64;
    let floor = if unseen > 0.0 { dropped_mass / unseen } else { 0.0 };
    Ok(ParamTable::from_sorted_ids(
        words,
        retained,
        params.struct_prob.clone(),
        floor,
        vocab_size,
    ))
}

/// Averages smoothed tables. A pair missing from a table contributes that
/// table's floor. The result is renormalized.
pub fn merge(tables: &[ParamTable]) -> Result<ParamTable> {
    if tables.is_empty() {
        return Err(Error::NothingToMerge);
    }
    let count = tables.len() as f64;
    let words: BTreeSet<Token> = tables
        .iter()
        .flat_map(|t| t.words.iter().cloned())
        .collect();
    let words: Vec<Token> = words.into_iter().collect();
    let ids: HashMap<&Token, u32> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w, i as u32))
        .collect();
    let vocab_size = tables
        .iter()
        .map(|t| t.vocab_size)
        .max()
        .unwrap_or(0)
        .max(words.len());
    let floor_total: f64 = tables.iter().map(|t| t.floor).sum();

    // (sum of stored values, sum of floors of the tables that stored the pair)
    let mut acc: BTreeMap<(u32, u32), (f64, f64)> = BTreeMap::new();
    for t in tables {
        for (&(u, v), &p) in &t.pair_prob {
            let key = (
                ids[&t.words[u as usize]],
                ids[&t.words[v as usize]],
            );
            let e = acc.entry(key).or_insert((0.0, 0.0));
            e.0 += p;
            e.1 += t.floor;
        }
    }
    let mut pairs: BTreeMap<(u32, u32), f64> = acc
        .into_iter()
        .map(|(k, (stored, floors_present))| {
            (k, (stored + (floor_total - floors_present)) / count)
        })
        .collect();
    let mut floor = floor_total / count;

    let v = vocab_size as f64;
    let total: f64 = pairs.values().sum::<f64>() + floor * (v * v - pairs.len() as f64);
    for p in pairs.values_mut() {
        *p /= total;
    }
    floor /= total;

    let mut struct_prob = StructProbs::uniform();
    for n in MIN_PHRASE_LEN..=MAX_PHRASE_LEN {
        let k = struct_prob.for_len(n).len();
        let mut mean = vec![0.0; k];
        for t in tables {
            for (m, p) in mean.iter_mut().zip(t.struct_prob.for_len(n)) {
                *m += p;
            }
        }
        let sum: f64 = mean.iter().sum();
        struct_prob.set_len(n, mean.into_iter().map(|m| m / sum).collect());
    }

    Ok(ParamTable::from_sorted_ids(words, pairs, struct_prob, floor, vocab_size))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(s: &str) -> Token {
        Token::new(s).unwrap()
    }

    fn table(pairs: &[(&str, &str, f64)], floor: f64, vocab: usize) -> ParamTable {
        ParamTable::from_pairs(
            [],
            pairs.iter().map(|&(u, v, p)| ((tok(u), tok(v)), p)),
            StructProbs::uniform(),
            floor,
            Some(vocab),
        )
    }

    #[test]
    fn structure_distribution_checked() {
        let sp = StructProbs::uniform().with_len(3, vec![0.7, 0.3]).unwrap();
        assert_eq!(sp.for_len(3), &[0.7, 0.3]);
        assert!(StructProbs::uniform().with_len(3, vec![0.7, 0.2]).is_err());
        assert!(StructProbs::uniform().with_len(3, vec![1.0]).is_err());
        assert!(StructProbs::uniform().with_len(7, vec![1.0]).is_err());
    }

    #[test]
    fn smoothing_two_word_vocab() {
        let t = table(&[("a", "b", 0.9), ("b", "a", 0.1)], 0.0, 2);
        let vocab: BTreeSet<_> = [tok("a"), tok("b")].into();
        let s = smooth(&t, &vocab, 0.5).unwrap();
        assert_eq!(s.num_pairs(), 1);
        assert_eq!(s.stored_pair("a", "b"), Some(0.9));
        assert!((s.floor() - 0.1 / 3.0).abs() < 1e-15);
        assert!((s.pair_prob("b", "a") - 0.1 / 3.0).abs() < 1e-15);
        assert!((s.total_pair_mass() - 1.0).abs() < 1e-12);
        s.validate().unwrap();
    }

    #[test]
    fn smoothing_zero_fraction_is_noop() {
        let t = table(&[("a", "b", 0.9), ("b", "a", 0.1)], 0.0, 2);
        let vocab: BTreeSet<_> = [tok("a"), tok("b")].into();
        let s = smooth(&t, &vocab, 0.0).unwrap();
        assert_eq!(s.floor(), 0.0);
        assert_eq!(s.num_pairs(), 2);
        assert_eq!(s.pairs().collect::<Vec<_>>(), t.pairs().collect::<Vec<_>>());
    }

    #[test]
    fn smoothing_full_table_keeps_zero_floor() {
        let t = table(
            &[("a", "a", 0.4), ("a", "b", 0.3), ("b", "a", 0.2), ("b", "b", 0.1)],
            0.0,
            2,
        );
        let vocab: BTreeSet<_> = [tok("a"), tok("b")].into();
        let s = smooth(&t, &vocab, 0.0).unwrap();
        assert_eq!(s.floor(), 0.0);
        assert!((s.total_pair_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smoothing_ties_break_lexicographically() {
        let t = table(
            &[("c", "d", 0.25), ("a", "b", 0.25), ("b", "c", 0.25), ("a", "d", 0.25)],
            0.0,
            4,
        );
        let vocab: BTreeSet<_> = ["a", "b", "c", "d"].into_iter().map(tok).collect();
        let s = smooth(&t, &vocab, 0.5).unwrap();
        let kept: Vec<_> = s.pairs().map(|(u, v, _)| format!("{u} {v}")).collect();
        assert_eq!(kept, vec!["b c", "c d"]);
    }

    #[test]
    fn smoothing_errors() {
        let two: BTreeSet<_> = [tok("a"), tok("b")].into();
        let empty = table(&[], 0.0, 2);
        assert!(matches!(smooth(&empty, &two, 0.5), Err(Error::DropAll(0))));
        let t = table(&[("a", "b", 1.0)], 0.0, 2);
        assert!(matches!(smooth(&t, &two, 1.0), Err(Error::Config(_))));
        let already = table(&[("a", "b", 0.5)], 0.125, 2);
        assert!(matches!(smooth(&already, &two, 0.1), Err(Error::Config(_))));
    }

    #[test]
    fn single_word_vocabulary_rejected() {
        let t = ParamTable::from_pairs(
            [tok("a")],
            [((tok("a"), tok("a")), 1.0)],
            StructProbs::uniform(),
            0.0,
            None,
        );
        let one: BTreeSet<_> = [tok("a")].into();
        assert!(matches!(smooth(&t, &one, 0.5), Err(Error::VocabTooSmall(1))));
    }

    #[test]
    fn merge_single_table_is_identity() {
        let t = table(&[("a", "b", 0.5), ("b", "c", 0.3)], 0.2 / 7.0, 3);
        t.validate().unwrap();
        let m = merge(std::slice::from_ref(&t)).unwrap();
        assert_eq!(m.num_pairs(), 2);
        for (u, v, p) in t.pairs() {
            assert!((m.pair_prob(u.as_str(), v.as_str()) - p).abs() < 1e-12);
        }
        assert!((m.floor() - t.floor()).abs() < 1e-12);
    }

    #[test]
    fn merge_disjoint_pairs_average_with_other_floor() {
        // each table: one stored pair + floor over a 2-word vocabulary
        let t1 = table(&[("a", "b", 0.7)], 0.1, 2);
        let t2 = table(&[("b", "a", 0.4)], 0.2, 2);
        let m = merge(&[t1, t2]).unwrap();
        let ab: f64 = (0.7 + 0.2) / 2.0;
        let ba = (0.4 + 0.1) / 2.0;
        let floor = (0.1 + 0.2) / 2.0;
        let total = ab + ba + floor * 2.0;
        assert!((total - 1.0).abs() < 1e-12, "fixture is already normalized");
        assert!((m.pair_prob("a", "b") - ab).abs() < 1e-12);
        assert!((m.pair_prob("b", "a") - ba).abs() < 1e-12);
        assert!((m.floor() - floor).abs() < 1e-12);
        m.validate().unwrap();
    }

    #[test]
    fn merge_empty_list_errors() {
        assert!(matches!(merge(&[]), Err(Error::NothingToMerge)));
    }

    #[test]
    fn file_round_trip_and_validation() {
        let t = table(&[("a", "b", 0.5), ("b", "c", 0.3)], 0.2 / 7.0, 3);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#vocab 3\n#floor "));
        assert!(text.contains("#structs 3 5e-1 5e-1\n"));
        let back = ParamTable::read(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, t);

        let broken = "#vocab 3\n#floor 0\na\tb\t0.5\n";
        assert!(matches!(
            ParamTable::read(broken.as_bytes(), "mem"),
            Err(Error::Normalization(_))
        ));
        let garbage = "#vocab 3\n#floor 0\na\tb\n";
        assert!(matches!(
            ParamTable::read(garbage.as_bytes(), "mem"),
            Err(Error::Format { line: 3, .. })
        ));
    }
}
