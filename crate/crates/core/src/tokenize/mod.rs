//! Word and subword tokenization.

mod bpe;
mod words;

use std::collections::HashMap;

pub use bpe::{strip_marker, BpeModel, DEFAULT_VOCAB_SIZE, END_OF_WORD};
pub use words::{tokenize_words, PunctuationPolicy, RuleTokenizer};

pub fn bpe_train<I, S>(corpus: I, vocab_size: usize) -> crate::Result<BpeModel>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    BpeModel::train(corpus, vocab_size)
}

pub fn bpe_encode(word: &str, m: &BpeModel) -> Vec<String> {
    m.encode(word)
}

/// Which tokenization regime feeds an embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    Word,
    Bpe,
}

impl std::fmt::Display for TokenizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TokenizerKind::Word => "word",
            TokenizerKind::Bpe => "bpe",
        })
    }
}

/// Word-tokenize every sentence.
pub fn word_corpus<S: AsRef<str>>(sentences: &[S], t: &RuleTokenizer) -> Vec<Vec<String>> {
    sentences.iter().map(|s| t.tokenize(s.as_ref())).collect()
}

/// Re-encode a word-tokenized corpus into BPE symbols, memoizing per word type.
pub fn bpe_corpus(words: &[Vec<String>], m: &BpeModel) -> Vec<Vec<String>> {
    let mut cache: HashMap<&str, Vec<String>> = HashMap::new();
    words
        .iter()
        .map(|sentence| {
            let mut out = Vec::with_capacity(sentence.len() * 2);
            for w in sentence {
                out.extend(cache.entry(w.as_str()).or_insert_with(|| m.encode(w)).iter().cloned());
            }
            out
        })
        .collect()
}
