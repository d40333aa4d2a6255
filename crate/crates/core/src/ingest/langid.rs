//! Character n-gram language scoring.
//!
//! Each language is an add-k smoothed n-gram model; a sentence's English score
//! is the posterior of the English model under a uniform prior over the loaded
//! languages.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

pub const ENGLISH: &str = "en";
pub const DEFAULT_ORDER: usize = 3;
const SMOOTHING: f64 = 0.5;

const BUNDLED_EN: &str = include_str!("../../data/langid/en.txt");
const BUNDLED_DA: &str = include_str!("../../data/langid/da.txt");

/// Lowercase letters only; everything else collapses to a single space.
fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push(' ');
    for c in text.trim().chars().flat_map(char::to_lowercase) {
        if c.is_alphabetic() {
            out.push(c);
        } else if !out.ends_with(' ') {
            out.push(' ');
        }
    }
    if !out.ends_with(' ') {
        out.push(' ');
    }
    out
}

fn ngrams(text: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    let chars: Vec<char> = text.chars().collect();
    (0..chars.len().saturating_sub(n - 1)).map(move |i| chars[i..i + n].iter().collect())
}

#[derive(Debug, Clone)]
pub struct NgramProfile {
    counts: HashMap<String, u64>,
    total: u64,
}

impl NgramProfile {
    pub fn train(text: &str, n: usize) -> Self {
        let mut counts = HashMap::new();
        let mut total = 0;
        for line in text.lines() {
            for g in ngrams(&normalize(line), n) {
                *counts.entry(g).or_insert(0) += 1;
                total += 1;
            }
        }
        NgramProfile { counts, total }
    }
}

/// A set of per-language profiles sharing one n-gram order.
#[derive(Debug, Clone)]
pub struct LanguageProfiles {
    order: usize,
    languages: Vec<(String, NgramProfile)>,
    vocabulary: usize,
}

/// English score with a flag telling whether the text was long enough to score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnglishScore {
    pub score: f64,
    pub informative: bool,
}

impl LanguageProfiles {
    /// Build profiles from `(language code, training text)` pairs. English
    /// plus at least one contrast language are required.
    pub fn train<'a>(order: usize, texts: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("n-gram order must be positive".into()));
        }
        let languages: Vec<(String, NgramProfile)> = texts
            .into_iter()
            .map(|(code, text)| (code.to_string(), NgramProfile::train(text, order)))
            .collect();
        if !languages.iter().any(|(c, _)| c == ENGLISH) || languages.len() < 2 {
            return Err(Error::Config(
                "language profiles need English and at least one contrast language".into(),
            ));
        }
        let vocabulary = languages
            .iter()
            .flat_map(|(_, p)| p.counts.keys())
            .collect::<HashSet<_>>()
            .len()
            + 1;
        Ok(LanguageProfiles {
            order,
            languages,
            vocabulary,
        })
    }

    /// English and Danish trigram profiles trained on the bundled newspaper-style texts.
    pub fn bundled() -> Self {
        Self::train(DEFAULT_ORDER, [(ENGLISH, BUNDLED_EN), ("da", BUNDLED_DA)]).expect("bundled profiles")
    }

    /// Load `<code>.txt` training files from a directory.
    pub fn load_dir(dir: &Path, order: usize) -> Result<Self> {
        let mut texts = Vec::new();
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().is_some_and(|e| e == "txt") {
                let code = path.file_stem().unwrap().to_string_lossy().into_owned();
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                texts.push((code, text));
            }
        }
        texts.sort();
        Self::train(order, texts.iter().map(|(c, t)| (c.as_str(), t.as_str())))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn log_likelihood(&self, profile: &NgramProfile, text: &str) -> f64 {
        let denom = (profile.total as f64 + SMOOTHING * self.vocabulary as f64).ln();
        ngrams(text, self.order)
            .map(|g| (profile.counts.get(&g).copied().unwrap_or(0) as f64 + SMOOTHING).ln() - denom)
            .sum()
    }

    /// Posterior probability that `sentence` is English.
    ///
    /// Sentences with fewer letters than the model order get 0.5 and are
    /// flagged uninformative.
    pub fn score_english(&self, sentence: &str) -> EnglishScore {
        let text = normalize(sentence);
        let letters = text.chars().filter(|c| c.is_alphabetic()).count();
        if letters < self.order {
            return EnglishScore {
                score: 0.5,
                informative: false,
            };
        }
        let lls: Vec<f64> = self.languages.iter().map(|(_, p)| self.log_likelihood(p, &text)).collect();
        let max = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = lls.iter().map(|l| (l - max).exp()).sum();
        let en = self.languages.iter().position(|(c, _)| c == ENGLISH).unwrap();
        EnglishScore {
            score: ((lls[en] - max).exp() / z).clamp(0.0, 1.0),
            informative: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_profiles_separate_examples() {
        let p = LanguageProfiles::bundled();
        assert!(p.score_english("the ship arrived yesterday morning").score > 0.9);
        assert!(p.score_english("skibet ankom i går morges").score < 0.1);
        let short = p.score_english("xx");
        assert_eq!(short.score, 0.5);
        assert!(!short.informative);
    }

    #[test]
    fn whitespace_invariant() {
        let p = LanguageProfiles::bundled();
        let a = p.score_english("the house of commons");
        let b = p.score_english("  \tthe house of commons \n");
        assert_eq!(a, b);
    }

    #[test]
    fn requires_contrast_language() {
        assert!(LanguageProfiles::train(3, [(ENGLISH, "some text")]).is_err());
        assert!(LanguageProfiles::train(3, [("da", "tekst"), ("de", "Text")]).is_err());
    }
}
