//! Rule-based sentence segmentation: terminal punctuation plus an abbreviation list.

use std::collections::HashSet;
use std::sync::OnceLock;

/// Lowercase abbreviations (without the trailing period) that do not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "messrs", "mssrs", "ms", "dr", "st", "capt", "col", "gen", "lieut", "lt", "maj", "sgt", "rev",
    "hon", "esq", "jun", "jr", "sen", "sr", "gov", "prof", "adm", "brig", "cpl", "no", "nos", "vol", "viz", "vs",
    "etc", "inst", "ult", "prox", "co", "bros", "wm", "jno", "jas", "chas", "thos", "geo", "benj", "robt",
    "richd", "saml", "eliz", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    "i.e", "e.g", "a.m", "p.m", "ibid", "cf", "fig", "pp",
];

fn abbreviations() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| ABBREVIATIONS.iter().copied().collect())
}

pub(crate) fn is_abbreviation(word: &str) -> bool {
    abbreviations().contains(word)
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’' | '»')
}

/// Split text into trimmed, non-empty sentences.
///
/// A boundary is a run of `.`, `?` or `!` (plus closing quotes or brackets)
/// followed by whitespace or the end of the text. A period closes no sentence
/// when the word before it is a known abbreviation.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !matches!(c, '.' | '?' | '!') {
            i += 1;
            continue;
        }
        let mut j = i;
        let mut has_strong = false;
        while j < chars.len() && matches!(chars[j].1, '.' | '?' | '!') {
            has_strong |= chars[j].1 != '.';
            j += 1;
        }
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let at_end = j == chars.len();
        let before_space = !at_end && chars[j].1.is_whitespace();
        if (at_end || before_space) && (has_strong || !ends_with_abbreviation(text, start, chars[i].0)) {
            let end = if at_end { text.len() } else { chars[j].0 };
            push_trimmed(&mut out, &text[start..end]);
            start = end;
        }
        i = j.max(i + 1);
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// Whether the word ending at byte offset `dot` (exclusive) is an abbreviation.
fn ends_with_abbreviation(text: &str, start: usize, dot: usize) -> bool {
    let prefix = &text[start..dot];
    let word = prefix
        .rsplit(|c: char| c.is_whitespace() || matches!(c, '(' | '"' | '“' | '‘'))
        .next()
        .unwrap_or("");
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    if word.is_empty() {
        return false;
    }
    abbreviations().contains(word.to_lowercase().as_str())
}
