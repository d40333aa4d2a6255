use std::collections::HashMap;

use crate::error::{Error, Result};

/// Token inventory ordered by descending count, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Build from `(token, count)` pairs in the given order.
    pub fn from_ordered(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        let mut tokens = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (i, (t, c)) in entries.into_iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary token {t:?}")));
            }
            tokens.push(t);
            counts.push(c);
        }
        Ok(Vocab { tokens, counts, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Count tokens in a single streaming pass and keep those seen at least `min_count` times.
pub fn build_vocab<'a, I, S>(corpus: I, min_count: u64) -> Result<Vocab>
where
    I: IntoIterator<Item = &'a S>,
    S: AsRef<[String]> + 'a + ?Sized,
{
    let mut counts: HashMap<&str, u64> = HashMap::new();
    let mut seen_any = false;
    for sentence in corpus {
        for t in sentence.as_ref() {
            seen_any = true;
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    if !seen_any {
        return Err(Error::invalid("cannot build a vocabulary from an empty corpus"));
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    if entries.is_empty() {
        return Err(Error::Degenerate(format!("no token occurs at least {min_count} times")));
    }
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocab::from_ordered(entries)
}
