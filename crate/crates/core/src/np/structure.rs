//! Binary bracketings over noun-phrase positions and the modifier/head
//! pairs they induce.
//!
//! Positions are 0-based. The head of a constituent is the head of its right
//! child, so a bracketing over `n` leaves yields exactly `n - 1` pairs and the
//! last position is the head of the whole phrase.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::np::{MAX_PHRASE_LEN, MIN_PHRASE_LEN};

/// A (modifier position, head position) pair; `modifier < head` always.
pub type PositionPair = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Bracketing {
    Leaf(usize),
    Node(Box<Bracketing>, Box<Bracketing>),
}

impl Bracketing {
    pub fn node(left: Bracketing, right: Bracketing) -> Self {
        Bracketing::Node(Box::new(left), Box::new(right))
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Bracketing::Leaf(_) => 1,
            Bracketing::Node(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    /// Parses a position bracketing such as `[[0 1] 2]`.
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = lex_brackets(text)?;
        let mut pos = 0;
        let tree = parse_tree(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::MalformedTree(format!("trailing input in {text:?}")));
        }
        Ok(tree)
    }

    /// Renders the bracketing over `words`, joining constituents with `=`,
    /// e.g. `[[heavy=construction]=industry]`.
    pub fn render<S: AsRef<str>>(&self, words: &[S]) -> String {
        let mut out = String::new();
        self.render_into(words, &mut out);
        out
    }

    fn render_into<S: AsRef<str>>(&self, words: &[S], out: &mut String) {
        match self {
            Bracketing::Leaf(p) => out.push_str(words[*p].as_ref()),
            Bracketing::Node(l, r) => {
                out.push('[');
                l.render_into(words, out);
                out.push('=');
                r.render_into(words, out);
                out.push(']');
            }
        }
    }
}

impl fmt::Display for Bracketing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bracketing::Leaf(p) => write!(f, "{p}"),
            Bracketing::Node(l, r) => write!(f, "[{l} {r}]"),
        }
    }
}

fn lex_brackets(text: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut num = String::new();
    for ch in text.chars() {
        match ch {
            '[' | ']' => {
                if !num.is_empty() {
                    tokens.push(std::mem::take(&mut num));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_ascii_digit() => num.push(c),
            c if c.is_whitespace() => {
                if !num.is_empty() {
                    tokens.push(std::mem::take(&mut num));
                }
            }
            c => return Err(Error::MalformedTree(format!("unexpected character {c:?}"))),
        }
    }
    if !num.is_empty() {
        tokens.push(num);
    }
    Ok(tokens)
}

fn parse_tree(tokens: &[String], pos: &mut usize) -> Result<Bracketing> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| Error::MalformedTree("unexpected end of input".into()))?;
    *pos += 1;
    match tok.as_str() {
        "[" => {
            let left = parse_tree(tokens, pos)?;
            let right = parse_tree(tokens, pos)?;
            match tokens.get(*pos).map(String::as_str) {
                Some("]") => {
                    *pos += 1;
                    Ok(Bracketing::node(left, right))
                }
                _ => Err(Error::MalformedTree(
                    "expected ']' after two constituents".into(),
                )),
            }
        }
        "]" => Err(Error::MalformedTree("unexpected ']'".into())),
        n => n
            .parse()
            .map(Bracketing::Leaf)
            .map_err(|_| Error::MalformedTree(format!("bad leaf {n:?}"))),
    }
}

/// Derives the modifier/head pair set of a bracketing.
///
/// `head(leaf p) = p`, `head([L R]) = head(R)`, and each internal node adds
/// `(head(L), head(R))`. The leaves must be `0..n` in left-to-right order.
/// Pairs are returned sorted.
pub fn derive_pairs(tree: &Bracketing) -> Result<Vec<PositionPair>> {
    let mut pairs = Vec::new();
    let mut next_leaf = 0;
    collect_pairs(tree, &mut next_leaf, &mut pairs)?;
    pairs.sort_unstable();
    Ok(pairs)
}

fn collect_pairs(
    tree: &Bracketing,
    next_leaf: &mut usize,
    pairs: &mut Vec<PositionPair>,
) -> Result<usize> {
    match tree {
        Bracketing::Leaf(p) => {
            if *p != *next_leaf {
                return Err(Error::MalformedTree(format!(
                    "leaf {p} found where leaf {next_leaf} was expected"
                )));
            }
            *next_leaf += 1;
            Ok(*p)
        }
        Bracketing::Node(l, r) => {
            let lh = collect_pairs(l, next_leaf, pairs)?;
            let rh = collect_pairs(r, next_leaf, pairs)?;
            pairs.push((lh, rh));
            Ok(rh)
        }
    }
}

/// A bracketing together with its derived pair set and its index in the
/// canonical enumeration order for its length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    bracketing: Bracketing,
    pairs: Vec<PositionPair>,
    index: usize,
}

impl Structure {
    fn new(bracketing: Bracketing, index: usize) -> Self {
        let pairs = derive_pairs(&bracketing).expect("enumerated trees are well formed");
        Structure {
            bracketing,
            pairs,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bracketing(&self) -> &Bracketing {
        &self.bracketing
    }

    pub fn pairs(&self) -> &[PositionPair] {
        &self.pairs
    }

    /// Position in the canonical order of `enumerate_structures(self.len())`.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn render<S: AsRef<str>>(&self, words: &[S]) -> String {
        self.bracketing.render(words)
    }
}

/// Canonical order: larger left constituent first (so the fully
/// left-branching tree comes first), then recursively by left and right
/// subtree order.
fn enumerate_range(lo: usize, hi: usize) -> Vec<Bracketing> {
    if hi - lo == 1 {
        return vec![Bracketing::Leaf(lo)];
    }
    let mut out = Vec::new();
    for split in (lo + 1..hi).rev() {
        let lefts = enumerate_range(lo, split);
        let rights = enumerate_range(split, hi);
        for l in &lefts {
            for r in &rights {
                out.push(Bracketing::node(l.clone(), r.clone()));
            }
        }
    }
    out
}

static STRUCTURES: OnceLock<Vec<Vec<Structure>>> = OnceLock::new();

/// Cached structures for lengths 1..=6 (length 1 is the single leaf).
pub fn structures(len: usize) -> Result<&'static [Structure]> {
    if !(1..=MAX_PHRASE_LEN).contains(&len) {
        return Err(Error::StructureLength(len));
    }
    let table = STRUCTURES.get_or_init(|| {
        (0..=MAX_PHRASE_LEN)
            .map(|n| {
                if n == 0 {
                    return Vec::new();
                }
                enumerate_range(0, n)
                    .into_iter()
                    .enumerate()
                    .map(|(i, b)| Structure::new(b, i))
                    .collect()
            })
            .collect()
    });
    Ok(&table[len])
}

/// Every full binary bracketing over `len` leaves, in canonical order.
pub fn enumerate_structures(len: usize) -> Result<Vec<Structure>> {
    if !(MIN_PHRASE_LEN..=MAX_PHRASE_LEN).contains(&len) {
        return Err(Error::PhraseLength(len));
    }
    Ok(structures(len)?.to_vec())
}
