//! Byte-pair encoding over characters with an end-of-word suffix.
//!
//! Words start as character sequences whose last character carries
//! [`END_OF_WORD`]. Training repeatedly merges the most frequent adjacent
//! pair; equal counts go to the lexicographically smallest `(left, right)`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const END_OF_WORD: &str = "</w>";
pub const DEFAULT_VOCAB_SIZE: usize = 30_000;
const FILE_MAGIC: &str = "histbias-bpe";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
    vocab: BTreeMap<String, usize>,
    vocab_size: usize,
}

/// Remove the end-of-word suffix from a symbol.
pub fn strip_marker(symbol: &str) -> &str {
    symbol.strip_suffix(END_OF_WORD).unwrap_or(symbol)
}

fn initial_symbols(word: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(END_OF_WORD);
    }
    symbols
}

struct Trainer {
    symbols: Vec<String>,
    words: Vec<(Vec<u32>, i64)>,
    pair_counts: HashMap<(u32, u32), i64>,
    pair_words: HashMap<(u32, u32), BTreeSet<usize>>,
    heap: BinaryHeap<(i64, Reverse<(String, String)>, (u32, u32))>,
}

impl Trainer {
    fn push(&mut self, pair: (u32, u32)) {
        let count = self.pair_counts.get(&pair).copied().unwrap_or(0);
        if count > 0 {
            let key = (self.symbols[pair.0 as usize].clone(), self.symbols[pair.1 as usize].clone());
            self.heap.push((count, Reverse(key), pair));
        }
    }

    fn add_word_pairs(&mut self, idx: usize, sign: i64, touched: &mut HashSet<(u32, u32)>) {
        let (syms, count) = &self.words[idx];
        for w in syms.windows(2) {
            let pair = (w[0], w[1]);
            *self.pair_counts.entry(pair).or_insert(0) += sign * count;
            if sign > 0 {
                self.pair_words.entry(pair).or_default().insert(idx);
            }
            touched.insert(pair);
        }
    }

    fn pop_best(&mut self) -> Option<(u32, u32)> {
        while let Some((count, _, pair)) = self.heap.pop() {
            if self.pair_counts.get(&pair).copied() == Some(count) {
                return Some(pair);
            }
        }
        None
    }
}

impl BpeModel {
    /// Learn merges from a stream of word tokens.
    pub fn train<I, S>(corpus: I, vocab_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: BTreeMap<String, i64> = BTreeMap::new();
        for w in corpus {
            let w = w.as_ref();
            if !w.is_empty() {
                *counts.entry(w.to_string()).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            return Err(Error::invalid("cannot train BPE on an empty corpus"));
        }
        Self::train_from_counts(counts, vocab_size)
    }

    pub fn train_from_counts(counts: BTreeMap<String, i64>, vocab_size: usize) -> Result<Self> {
        let mut alphabet: BTreeSet<String> = BTreeSet::new();
        for w in counts.keys() {
            alphabet.extend(initial_symbols(w));
        }
        if alphabet.is_empty() {
            return Err(Error::invalid("cannot train BPE on an empty corpus"));
        }
        if vocab_size <= alphabet.len() {
            return Err(Error::Config(format!(
                "vocab_size {vocab_size} must exceed the initial alphabet of {} symbols",
                alphabet.len()
            )));
        }
        let symbols: Vec<String> = alphabet.into_iter().collect();
        let ids: HashMap<String, u32> = symbols.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
        let words = counts
            .iter()
            .map(|(w, &c)| (initial_symbols(w).iter().map(|s| ids[s]).collect(), c))
            .collect();
        let mut t = Trainer {
            symbols,
            words,
            pair_counts: HashMap::new(),
            pair_words: HashMap::new(),
            heap: BinaryHeap::new(),
        };
        let mut touched = HashSet::new();
        for i in 0..t.words.len() {
            t.add_word_pairs(i, 1, &mut touched);
        }
        for pair in touched.drain() {
            t.push(pair);
        }

        let mut merges = Vec::new();
        while t.symbols.len() < vocab_size {
            let Some((a, b)) = t.pop_best() else { break };
            let merged = format!("{}{}", t.symbols[a as usize], t.symbols[b as usize]);
            let new_id = t.symbols.len() as u32;
            merges.push((t.symbols[a as usize].clone(), t.symbols[b as usize].clone()));
            t.symbols.push(merged);
            let affected: Vec<usize> = t.pair_words.remove(&(a, b)).unwrap_or_default().into_iter().collect();
            for idx in affected {
                if !t.words[idx].0.windows(2).any(|w| w == [a, b]) {
                    continue;
                }
                t.add_word_pairs(idx, -1, &mut touched);
                let old = std::mem::take(&mut t.words[idx].0);
                t.words[idx].0 = merge_ids(&old, a, b, new_id);
                t.add_word_pairs(idx, 1, &mut touched);
            }
            t.pair_counts.remove(&(a, b));
            for pair in touched.drain().collect::<Vec<_>>() {
                t.push(pair);
            }
        }
        Ok(Self::from_parts(merges, vocab_size, Some(&t.symbols)))
    }

    fn from_parts(merges: Vec<(String, String)>, vocab_size: usize, symbols: Option<&[String]>) -> Self {
        let ranks = merges.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let mut vocab = BTreeMap::new();
        let mut add = |s: &str| {
            let n = vocab.len();
            vocab.entry(s.to_string()).or_insert(n);
        };
        match symbols {
            Some(symbols) => symbols.iter().for_each(|s| add(s)),
            None => {
                for (l, r) in &merges {
                    add(l);
                    add(r);
                    add(&format!("{l}{r}"));
                }
            }
        }
        BpeModel {
            merges,
            ranks,
            vocab,
            vocab_size,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab(&self) -> &BTreeMap<String, usize> {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Encode one word into symbols; the last symbol carries [`END_OF_WORD`].
    pub fn encode(&self, word: &str) -> Vec<String> {
        let mut symbols = initial_symbols(word);
        loop {
            let best = symbols
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| self.ranks.get(&(w[0].clone(), w[1].clone())).map(|&r| (r, i)))
                .min();
            let Some((rank, _)) = best else { break };
            let (l, r) = &self.merges[rank];
            let mut next = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && &symbols[i] == l && &symbols[i + 1] == r {
                    next.push(format!("{l}{r}"));
                    i += 2;
                } else {
                    next.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = next;
        }
        symbols
    }

    /// Inverse of [`encode`](Self::encode) for a single word.
    pub fn decode(symbols: &[String]) -> String {
        symbols.iter().map(|s| strip_marker(s)).collect()
    }

    /// Header line then one `left right` merge per line, in rank order.
    pub fn to_text(&self) -> String {
        let mut out = format!("{FILE_MAGIC} vocab_size={}\n", self.vocab_size);
        for (l, r) in &self.merges {
            let _ = writeln!(out, "{l} {r}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing BPE header".into(),
        })?;
        let vocab_size = header
            .strip_prefix(FILE_MAGIC)
            .and_then(|rest| rest.trim().strip_prefix("vocab_size="))
            .and_then(|v| v.parse().ok())
            .ok_or(Error::Parse {
                line: 1,
                message: format!("bad BPE header {header:?}"),
            })?;
        let mut merges = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => merges.push((l.to_string(), r.to_string())),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected 'left right', got {line:?}"),
                    })
                }
            }
        }
        Ok(Self::from_parts(merges, vocab_size, None))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn merge_ids(word: &[u32], a: u32, b: u32, new_id: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == a && word[i + 1] == b {
            out.push(new_id);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    out
}
