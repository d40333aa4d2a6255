//! Rule-based repair of common OCR confusions.
//!
//! A rule table is an ordered list of substitutions. Rules run top to bottom
//! and the whole table is re-applied until the text stops changing, so a
//! convergent table is idempotent by construction.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

const DEFAULT_RULES: &str = include_str!("../../data/ocr_rules.tsv");
const DEFAULT_DICTIONARY: &str = include_str!("../../data/dictionary.txt");

const MAX_PASSES: usize = 8;
/// Words with more candidate positions than this are left alone (2^n candidates).
const MAX_LONG_S_POSITIONS: usize = 6;

fn word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{L}]+(?:['’][\p{L}]+)*").unwrap())
}

/// Lowercase word list used to gate dictionary-validated rules.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    words: HashSet<String>,
}

impl Dictionary {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty() && !w.starts_with('#'))
            .collect();
        Dictionary { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_words(text.lines()))
    }

    /// The bundled public-domain English word list.
    pub fn bundled() -> &'static Dictionary {
        static DICT: OnceLock<Dictionary> = OnceLock::new();
        DICT.get_or_init(|| Dictionary::from_words(DEFAULT_DICTIONARY.lines()))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Membership of a lowercase word, accepting regular inflections of listed stems.
    pub fn knows(&self, word: &str) -> bool {
        if self.words.contains(word) {
            return true;
        }
        let stems: [(&str, &str); 8] = [
            ("'s", ""),
            ("s", ""),
            ("es", ""),
            ("ed", ""),
            ("ed", "e"),
            ("ing", ""),
            ("ing", "e"),
            ("ly", ""),
        ];
        stems.iter().any(|(suffix, restore)| {
            word.strip_suffix(suffix)
                .filter(|stem| stem.chars().count() >= 2)
                .is_some_and(|stem| self.words.contains(&format!("{stem}{restore}")))
        })
    }
}

#[derive(Debug, Clone)]
pub enum OcrRule {
    Literal { pattern: String, replacement: String },
    Regex { pattern: Regex, replacement: String },
    /// Whole-word substitution keyed by the lowercase word.
    Word { from: String, to: String },
    /// Long s misread as `f`: a word unknown to the dictionary whose non-final
    /// `f`s can be turned into `s` to give a known word is repaired.
    LongS,
}

/// Ordered OCR rule table plus the dictionary gating `LongS`.
#[derive(Debug, Clone)]
pub struct OcrRules {
    rules: Vec<OcrRule>,
    dictionary: Dictionary,
}

impl OcrRules {
    pub fn new(rules: Vec<OcrRule>, dictionary: Dictionary) -> Self {
        OcrRules { rules, dictionary }
    }

    /// The shipped table: ligature and punctuation normalization plus the long-s family.
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_RULES, Dictionary::bundled().clone()).expect("bundled rules are valid")
    }

    /// Parse the tab-separated rule format. Errors name the 0-based rule index.
    pub fn parse(text: &str, dictionary: Dictionary) -> Result<Self> {
        let mut rules = Vec::new();
        for line in text.lines() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let index = rules.len();
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |message: String| Error::InvalidRule { index, message };
            let rule = match fields.as_slice() {
                ["long-s"] => OcrRule::LongS,
                ["literal", p, r] if !p.is_empty() => OcrRule::Literal {
                    pattern: p.to_string(),
                    replacement: r.to_string(),
                },
                ["regex", p, r] => OcrRule::Regex {
                    pattern: Regex::new(p).map_err(|e| bad(e.to_string()))?,
                    replacement: r.to_string(),
                },
                ["word", from, to] if !from.is_empty() => OcrRule::Word {
                    from: from.to_lowercase(),
                    to: to.to_string(),
                },
                _ => return Err(bad(format!("unrecognised rule line {line:?}"))),
            };
            rules.push(rule);
        }
        Ok(OcrRules { rules, dictionary })
    }

    pub fn load(path: &Path, dictionary: Dictionary) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, dictionary)
    }

    /// Append whole-word rules for a misspelling map. The first mapping of a
    /// duplicated misspelt form wins.
    pub fn with_normalization_map<'a>(mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut seen = HashSet::new();
        for (from, to) in pairs {
            let from = from.to_lowercase();
            if from != to.to_lowercase() && seen.insert(from.clone()) {
                self.rules.push(OcrRule::Word { from, to: to.to_lowercase() });
            }
        }
        self
    }

    pub fn rules(&self) -> &[OcrRule] {
        &self.rules
    }

    /// Apply the table until a fixed point (bounded by a pass limit).
    pub fn clean(&self, text: &str) -> String {
        let words = self.word_map();
        let mut current = text.to_string();
        for _ in 0..MAX_PASSES {
            let next = self.pass(&current, &words);
            if next == current {
                return next;
            }
            current = next;
        }
        log::warn!("OCR rule table did not converge after {MAX_PASSES} passes");
        current
    }

    fn word_map(&self) -> HashMap<&str, &str> {
        // Word rules are grouped so one scan handles all of them; order among
        // them only matters for duplicated keys, resolved first-wins.
        let mut map = HashMap::new();
        for rule in &self.rules {
            if let OcrRule::Word { from, to } = rule {
                map.entry(from.as_str()).or_insert(to.as_str());
            }
        }
        map
    }

    fn pass(&self, text: &str, words: &HashMap<&str, &str>) -> String {
        let mut out = text.to_string();
        let mut words_done = false;
        for rule in &self.rules {
            out = match rule {
                OcrRule::Literal { pattern, replacement } => out.replace(pattern.as_str(), replacement),
                OcrRule::Regex { pattern, replacement } => {
                    pattern.replace_all(&out, replacement.as_str()).into_owned()
                }
                OcrRule::Word { .. } if words_done => continue,
                OcrRule::Word { .. } => {
                    words_done = true;
                    replace_words(&out, |w| {
                        words.get(w.to_lowercase().as_str()).map(|to| match_case(w, to))
                    })
                }
                OcrRule::LongS => replace_words(&out, |w| repair_long_s(w, &self.dictionary)),
            };
        }
        out
    }
}

fn replace_words(text: &str, mut f: impl FnMut(&str) -> Option<String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in word_regex().find_iter(text) {
        if let Some(rep) = f(m.as_str()) {
            out.push_str(&text[last..m.start()]);
            out.push_str(&rep);
            last = m.end();
        }
    }
    out.push_str(&text[last..]);
    out
}

fn match_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        replacement.to_uppercase()
    } else if letters.first().is_some_and(|c| c.is_uppercase()) {
        let mut chars = replacement.chars();
        chars
            .next()
            .map(|c| c.to_uppercase().chain(chars).collect())
            .unwrap_or_default()
    } else {
        replacement.to_string()
    }
}

fn repair_long_s(word: &str, dict: &Dictionary) -> Option<String> {
    let lower = word.to_lowercase();
    if !word.contains('f') || dict.knows(&lower) {
        return None;
    }
    let chars: Vec<char> = word.chars().collect();
    // Long s never appeared word-finally.
    let positions: Vec<usize> = chars
        .iter()
        .enumerate()
        .filter(|&(i, &c)| c == 'f' && i + 1 < chars.len() && chars[i + 1].is_alphabetic())
        .map(|(i, _)| i)
        .collect();
    if positions.is_empty() || positions.len() > MAX_LONG_S_POSITIONS {
        return None;
    }
    // Fewest substitutions first, then leftmost.
    let mut masks: Vec<u32> = (1..(1u32 << positions.len())).collect();
    masks.sort_by_key(|m| (m.count_ones(), m.reverse_bits()));
    masks.into_iter().find_map(|mask| {
        let mut cand = chars.clone();
        for (bit, &pos) in positions.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                cand[pos] = 's';
            }
        }
        let cand: String = cand.into_iter().collect();
        dict.knows(&cand.to_lowercase()).then_some(cand)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dict() -> Dictionary {
        Dictionary::from_words(["house", "of", "commons", "majesty", "such", "shall", "first", "fold"])
    }

    #[test]
    fn long_s_repairs_dictionary_words() {
        let rules = OcrRules::parse("long-s\n", small_dict()).unwrap();
        assert_eq!(rules.clean("houfe of commons"), "house of commons");
        assert_eq!(rules.clean("Fuch a thing"), "Fuch a thing");
        assert_eq!(rules.clean("fuch firft"), "such first");
        // known words are never touched
        assert_eq!(rules.clean("fold"), "fold");
        // final f is not a long-s position
        assert_eq!(rules.clean("houf"), "houf");
    }

    #[test]
    fn bundled_rules_fix_the_long_s_example() {
        let rules = OcrRules::bundled();
        assert_eq!(rules.clean("houfe of commons"), "house of commons");
        assert_eq!(rules.clean(""), "");
        assert_eq!(rules.clean("the  fhip ,arrived ;; yesterday"), "the ship,arrived; yesterday");
    }

    #[test]
    fn word_map_from_pairs() {
        let rules = OcrRules::parse("", small_dict()).unwrap().with_normalization_map([("majetty", "majesty")]);
        assert_eq!(rules.clean("majetty"), "majesty");
        assert_eq!(rules.clean("His Majetty"), "His Majesty");
        assert_eq!(rules.clean("MAJETTY"), "MAJESTY");
    }

    #[test]
    fn invalid_rule_names_its_index() {
        let err = OcrRules::parse("literal\ta\tb\nregex\t(\tx\n", small_dict()).unwrap_err();
        match err {
            Error::InvalidRule { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            OcrRules::parse("bogus\tx\n", small_dict()),
            Err(Error::InvalidRule { index: 0, .. })
        ));
    }

    #[test]
    fn inflections_are_known() {
        let d = Dictionary::from_words(["ask", "arrive", "house"]);
        assert!(d.knows("asked"));
        assert!(d.knows("arrived"));
        assert!(d.knows("houses"));
        assert!(!d.knows("afked"));
    }
}
