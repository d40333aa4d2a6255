use std::cmp::Ordering;

use super::vocab::Vocab;
use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};
use crate::tokenize::BpeModel;

/// How a word is turned into a vector.
#[derive(Debug, Clone, Copy)]
pub enum Lookup<'a> {
    /// The word's own row.
    Word,
    /// Unweighted mean of the rows of its BPE symbols that the model knows.
    Subword(&'a BpeModel),
}

/// Immutable word vectors with cosine-geometry queries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel<T> {
    vocab: Vocab,
    matrix: Vec<T>,
    norms: Vec<T>,
    dim: usize,
    min_count: u64,
    seed: u64,
}

pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!("dimension mismatch {} vs {}", u.len(), v.len())));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == T::zero() || nv == T::zero() {
        return Err(Error::Degenerate("cosine of a zero-norm vector".into()));
    }
    Ok((dot(u, v) / (nu * nv)).max(-T::one()).min(T::one()))
}

impl<T: Scalar> EmbeddingModel<T> {
    pub fn new(vocab: Vocab, matrix: Vec<T>, dim: usize, min_count: u64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        if matrix.len() != vocab.len() * dim {
            return Err(Error::invalid(format!(
                "matrix has {} values, expected {} rows x {dim}",
                matrix.len(),
                vocab.len()
            )));
        }
        if let Some(bad) = matrix.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value in row {:?}",
                vocab.token(bad / dim)
            )));
        }
        let norms = matrix.chunks(dim).map(norm).collect();
        Ok(EmbeddingModel {
            vocab,
            matrix,
            norms,
            dim,
            min_count,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &[T] {
        &self.matrix
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.get(token).is_some()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[T]> {
        self.vocab.get(token).map(|i| self.row(i))
    }

    /// Vector for `word` under the given lookup mode.
    pub fn word_vector(&self, word: &str, mode: Lookup<'_>) -> Result<Vec<T>> {
        match mode {
            Lookup::Word => self
                .vector(word)
                .map(<[T]>::to_vec)
                .ok_or_else(|| Error::Lookup(word.to_string())),
            Lookup::Subword(bpe) => {
                let mut acc = vec![T::zero(); self.dim];
                let mut n = 0usize;
                for sym in bpe.encode(word) {
                    if let Some(v) = self.vector(&sym) {
                        acc.iter_mut().zip(v).for_each(|(a, &x)| *a += x);
                        n += 1;
                    }
                }
                if n == 0 {
                    return Err(Error::Lookup(word.to_string()));
                }
                let n = T::of(n as f64);
                acc.iter_mut().for_each(|a| *a /= n);
                Ok(acc)
            }
        }
    }

    pub fn similarity(&self, a: &str, b: &str) -> Result<T> {
        let u = self.vector(a).ok_or_else(|| Error::Lookup(a.to_string()))?;
        let v = self.vector(b).ok_or_else(|| Error::Lookup(b.to_string()))?;
        cosine(u, v)
    }

    /// Top `k` vocabulary entries by cosine to `query`, skipping `exclude`
    /// and zero-norm rows.
    pub fn nearest_to_vector(&self, query: &[T], k: usize, exclude: Option<usize>) -> Result<Vec<(String, T)>> {
        if k == 0 {
            return Ok(Vec::new());
        }
        let qn = norm(query);
        if qn == T::zero() {
            return Err(Error::Degenerate("nearest neighbours of a zero vector".into()));
        }
        let mut scored: Vec<(usize, T)> = (0..self.len())
            .filter(|&i| Some(i) != exclude && self.norms[i] > T::zero())
            .map(|i| (i, dot(query, self.row(i)) / (qn * self.norms[i])))
            .collect();
        let cmp = |a: &(usize, T), b: &(usize, T)| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.vocab.token(a.0).cmp(self.vocab.token(b.0)))
        };
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(scored
            .into_iter()
            .map(|(i, s)| (self.vocab.token(i).to_string(), s.max(-T::one()).min(T::one())))
            .collect())
    }

    /// Top `k` neighbours of an in-vocabulary token, excluding the token itself.
    pub fn nearest_neighbors(&self, query: &str, k: usize) -> Result<Vec<(String, T)>> {
        let i = self.vocab.get(query).ok_or_else(|| Error::Lookup(query.to_string()))?;
        self.nearest_to_vector(self.row(i), k, Some(i))
    }

    /// Neighbours of a word resolved through `mode`; an in-vocabulary query is excluded from its own list.
    pub fn nearest_neighbors_with(&self, query: &str, k: usize, mode: Lookup<'_>) -> Result<Vec<(String, T)>> {
        let v = self.word_vector(query, mode)?;
        self.nearest_to_vector(&v, k, self.vocab.get(query))
    }

    /// Word-level model whose rows are `word_vector(word, Subword(bpe))` for
    /// each representable word; unrepresentable words are skipped.
    pub fn word_view<'w>(&self, bpe: &BpeModel, words: impl IntoIterator<Item = (&'w str, u64)>) -> Result<Self> {
        let mut entries = Vec::new();
        let mut matrix = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (w, count) in words {
            if !seen.insert(w) {
                continue;
            }
            if let Ok(v) = self.word_vector(w, Lookup::Subword(bpe)) {
                entries.push((w.to_string(), count));
                matrix.extend(v);
            }
        }
        if entries.is_empty() {
            return Err(Error::Degenerate("no word is representable through the subword model".into()));
        }
        EmbeddingModel::new(Vocab::from_ordered(entries)?, matrix, self.dim, 0, self.seed)
    }

    /// Multiply every vector by `c`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        EmbeddingModel::new(
            self.vocab.clone(),
            self.matrix.iter().map(|&v| v * c).collect(),
            self.dim,
            self.min_count,
            self.seed,
        )
    }
}
