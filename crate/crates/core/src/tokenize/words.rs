use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PunctuationPolicy {
    /// Drop punctuation that is not inside a word.
    #[default]
    Strip,
    /// Emit each punctuation character as its own token.
    Keep,
}

/// Whitespace tokenizer with word-internal joiners (apostrophes, hyphens, periods).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTokenizer {
    pub lowercase: bool,
    pub punctuation: PunctuationPolicy,
}

impl Default for RuleTokenizer {
    fn default() -> Self {
        RuleTokenizer {
            lowercase: true,
            punctuation: PunctuationPolicy::Strip,
        }
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '’' | '-' | '.' | '&')
}

impl RuleTokenizer {
    pub fn tokenize(&self, sentence: &str) -> Vec<String> {
        let mut out = Vec::new();
        for chunk in sentence.split_whitespace() {
            self.tokenize_chunk(chunk, &mut out);
        }
        out
    }

    fn tokenize_chunk(&self, chunk: &str, out: &mut Vec<String>) {
        let chars: Vec<char> = chunk.chars().collect();
        let mut word = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let joins = is_joiner(c)
                && !word.is_empty()
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
            if c.is_alphanumeric() || joins {
                word.push(c);
                continue;
            }
            self.flush(&mut word, out);
            if self.punctuation == PunctuationPolicy::Keep {
                out.push(c.to_string());
            }
        }
        self.flush(&mut word, out);
    }

    fn flush(&self, word: &mut String, out: &mut Vec<String>) {
        if word.is_empty() {
            return;
        }
        let w = std::mem::take(word);
        out.push(if self.lowercase { w.to_lowercase() } else { w });
    }
}

/// Tokenize with the default rule tokenizer (lowercase, strip punctuation).
pub fn tokenize_words(sentence: &str, t: &RuleTokenizer) -> Vec<String> {
    t.tokenize(sentence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases_and_splits() {
        let t = RuleTokenizer::default();
        assert_eq!(t.tokenize("The NEGRO Woman"), vec!["the", "negro", "woman"]);
        assert_eq!(t.tokenize("o'clock,"), vec!["o'clock"]);
        assert!(t.tokenize("").is_empty());
        assert!(t.tokenize(" ;; -- ").is_empty());
    }

    #[test]
    fn keep_policy_emits_punctuation() {
        let t = RuleTokenizer {
            lowercase: false,
            punctuation: PunctuationPolicy::Keep,
        };
        assert_eq!(t.tokenize("Sold, (cheap)!"), vec!["Sold", ",", "(", "cheap", ")", "!"]);
        assert_eq!(t.tokenize("'Tis"), vec!["'", "Tis"]);
    }

    #[test]
    fn joiners_stay_inside_words() {
        let t = RuleTokenizer::default();
        assert_eq!(t.tokenize("well-made i.e. o’clock"), vec!["well-made", "i.e", "o’clock"]);
        assert_eq!(t.tokenize("end-"), vec!["end"]);
    }
}
