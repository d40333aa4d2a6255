//! Rule-based fallback annotator: titles and capitalized names, person-noun
//! phrases and gendered pronouns, linked within a document by surname match,
//! definite re-mention and a pronoun window.

use std::collections::{BTreeMap, HashSet};

use super::annotation::{AnnotatedDocument, AnnotatedEntity, AnnotatedSentence, MentionSpan, Token};
use super::classify::{parse_word_list, KeywordSets, PersonLexicon};
use crate::ingest::CleanSentence;
use crate::tokenize::{PunctuationPolicy, RuleTokenizer};

/// How many sentences back a pronoun or definite noun phrase may reach.
pub const LINK_WINDOW: usize = 3;

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "his", "her", "their", "our", "my", "your", "said", "one", "every", "no", "some",
];
const DEFINITE: &[&str] = &["the", "this", "that", "said"];
const NON_NAME_CAPS: &[&str] = &[
    "the", "a", "an", "and", "or", "but", "of", "in", "on", "at", "to", "for", "by", "with", "from", "as", "is", "was",
    "were", "are", "be", "it", "its", "this", "that", "these", "those", "there", "then", "when", "where", "who", "whom",
    "which", "what", "if", "not", "no", "yes", "all", "any", "some", "one", "two", "three", "i", "we", "you", "they",
    "he", "she", "his", "her", "him", "them", "our", "my", "your", "their", "on", "upon", "after", "before", "yesterday",
    "today", "last", "next", "here", "notice", "sale", "sold", "wanted", "ran", "for", "ship", "schooner", "brig",
    "sloop", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday", "january", "february",
    "march", "april", "may", "june", "july", "august", "september", "october", "november", "december",
];
const VESSELS: &[&str] = &["ship", "schooner", "brig", "sloop", "snow", "barque", "bark", "vessel"];
const PLACE_PREPOSITIONS: &[&str] = &["from", "to", "at", "in", "near", "into"];
const PLACE_SUFFIXES: &[&str] = &[
    "street", "lane", "square", "road", "wharf", "town", "county", "parish", "island", "river", "bay", "alley",
];
const TITLE_ABBREVIATIONS: &[(&str, &str)] = &[
    ("dr", "doctor"),
    ("capt", "captain"),
    ("col", "colonel"),
    ("gen", "general"),
    ("rev", "reverend"),
    ("lieut", "lieutenant"),
    ("maj", "major"),
];
const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("men", "man"),
    ("women", "woman"),
    ("gentlemen", "gentleman"),
    ("children", "child"),
    ("brethren", "brother"),
    ("wives", "wife"),
    ("negroes", "negro"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum G {
    Male,
    Female,
    Unknown,
}

pub struct HeuristicAnnotator {
    lex: PersonLexicon,
    keywords: KeywordSets,
    adjectives: HashSet<String>,
    given_names: HashSet<String>,
    window: usize,
}

impl Default for HeuristicAnnotator {
    fn default() -> Self {
        HeuristicAnnotator {
            lex: PersonLexicon::bundled(),
            keywords: KeywordSets::bundled(),
            adjectives: parse_word_list(include_str!("../../data/entities/adjectives.txt")),
            given_names: parse_word_list(include_str!("../../data/entities/given_names.txt")),
            window: LINK_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Name,
    Noun,
    Pronoun,
}

#[derive(Debug, Clone)]
struct Found {
    span: MentionSpan,
    kind: Kind,
    gender: G,
    /// Surname key for names, head lemma for nouns.
    key: String,
    definite: bool,
    /// Person noun implied by a title, so "the captain" can find "Captain Smith".
    title_noun: Option<String>,
    /// Index of a mention in the same sentence this one is in apposition to.
    appositive_of: Option<usize>,
}

struct Chain {
    id: usize,
    gender: G,
    names: HashSet<String>,
    nouns: HashSet<String>,
    last: (usize, usize),
    mentions: Vec<MentionSpan>,
}

fn compatible(a: G, b: G) -> bool {
    a == G::Unknown || b == G::Unknown || a == b
}

impl HeuristicAnnotator {
    /// Bundled name and adjective lists with a custom person lexicon.
    pub fn with_lexicon(lex: PersonLexicon) -> Self {
        HeuristicAnnotator {
            lex,
            ..Self::default()
        }
    }

    fn lemma(&self, lower: &str) -> String {
        if self.lex.nouns.contains(lower) {
            return lower.to_string();
        }
        if let Some((_, s)) = IRREGULAR_PLURALS.iter().find(|(p, _)| *p == lower) {
            return s.to_string();
        }
        let candidates = [
            lower.strip_suffix("ies").map(|s| format!("{s}y")),
            lower.strip_suffix("es").map(str::to_string),
            lower.strip_suffix('s').map(str::to_string),
        ];
        candidates
            .into_iter()
            .flatten()
            .find(|c| self.lex.nouns.contains(c))
            .unwrap_or_else(|| lower.to_string())
    }

    fn word_gender(&self, w: &str) -> G {
        match (self.keywords.male.contains(w), self.keywords.female.contains(w)) {
            (true, false) => G::Male,
            (false, true) => G::Female,
            _ => G::Unknown,
        }
    }

    fn tokenize(&self, text: &str) -> Vec<Token> {
        let t = RuleTokenizer {
            lowercase: false,
            punctuation: PunctuationPolicy::Keep,
        };
        let mut raw = t.tokenize(text);
        // keep abbreviated titles whole: "Mr" "." -> "Mr."
        let mut k = 0;
        while k + 1 < raw.len() {
            let capitalized = raw[k].starts_with(|c: char| c.is_uppercase());
            if raw[k + 1] == "." && k + 2 < raw.len() && capitalized && self.lex.titles.contains(&raw[k].to_lowercase()) {
                raw[k].push('.');
                raw.remove(k + 1);
            }
            k += 1;
        }
        raw.into_iter()
            .enumerate()
            .map(|(i, text)| {
                let lower = text.trim_end_matches('.').to_lowercase();
                let lemma = self.lemma(&lower);
                let pos = if !text.chars().any(char::is_alphanumeric) {
                    "PUNCT"
                } else if self.lex.pronouns.contains(&lower) {
                    "PRON"
                } else if self.adjectives.contains(&lower) {
                    "ADJ"
                } else if self.lex.nouns.contains(&lemma) {
                    "NOUN"
                } else if text.chars().next().is_some_and(char::is_uppercase) {
                    "PROPN"
                } else {
                    "X"
                };
                Token {
                    i,
                    text,
                    lemma,
                    pos: pos.to_string(),
                    head: i as i64,
                    dep: "dep".to_string(),
                }
            })
            .collect()
    }

    /// Capitalized word that could continue a name already under way.
    fn is_name_continuation(&self, t: &Token) -> bool {
        let lower = t.text.to_lowercase();
        t.text.chars().next().is_some_and(char::is_uppercase)
            && t.text.chars().all(|c| c.is_alphabetic() || c == '\'' || c == '-')
            && !NON_NAME_CAPS.contains(&lower.as_str())
            && !self.lex.pronouns.contains(&lower)
            && !self.lex.titles.contains(&lower)
            && !self.keywords.non_white.contains(&lower)
    }

    fn is_name_token(&self, tokens: &[Token], i: usize, known: &HashSet<String>) -> bool {
        let t = &tokens[i];
        let lower = t.text.to_lowercase();
        self.is_name_continuation(t)
            && !self.adjectives.contains(&lower)
            && !self.lex.nouns.contains(&t.lemma)
            && (i > 0 || known.contains(&lower) || self.given_names.contains(&lower) || tokens.get(1).is_some_and(|n| {
                n.text.chars().next().is_some_and(char::is_uppercase) && !NON_NAME_CAPS.contains(&n.text.to_lowercase().as_str())
            }))
    }

    fn title_noun(&self, title: &str) -> Option<String> {
        let noun = TITLE_ABBREVIATIONS
            .iter()
            .find(|(a, _)| *a == title)
            .map_or(title, |(_, n)| *n);
        self.lex.nouns.contains(noun).then(|| noun.to_string())
    }

    /// Adjectives directly before `start` become `amod` dependents of `head`;
    /// returns the index where a preceding determiner or adjective run begins.
    fn attach_modifiers(&self, tokens: &mut [Token], start: usize, head: usize) -> usize {
        let mut j = start;
        while j > 0 && tokens[j - 1].pos == "ADJ" {
            j -= 1;
            tokens[j].head = head as i64;
            tokens[j].dep = "amod".into();
        }
        if j > 0 && DETERMINERS.contains(&tokens[j - 1].text.to_lowercase().as_str()) {
            j -= 1;
            tokens[j].head = head as i64;
            tokens[j].dep = "det".into();
        }
        j
    }

    fn find_mentions(&self, sentence: usize, tokens: &mut [Token], known: &HashSet<String>) -> Vec<Found> {
        let n = tokens.len();
        let mut out: Vec<Found> = Vec::new();
        let mut i = 0;
        while i < n {
            let lower = tokens[i].text.trim_end_matches('.').to_lowercase();
            let title = self.lex.titles.contains(&lower) && i + 1 < n && self.is_name_token(tokens, i + 1, known);
            if title || self.is_name_token(tokens, i, known) {
                let start = i;
                let first = if title { i + 1 } else { i };
                let mut end = first + 1;
                while end < n && self.is_name_continuation(&tokens[end]) {
                    end += 1;
                }
                let head = end - 1;
                let before = start.checked_sub(1).map(|k| tokens[k].text.to_lowercase());
                let place = !title
                    && (before.as_deref().is_some_and(|b| PLACE_PREPOSITIONS.contains(&b))
                        || PLACE_SUFFIXES.contains(&tokens[head].text.to_lowercase().as_str()));
                if place {
                    i = end;
                    continue;
                }
                for k in start..head {
                    tokens[k].head = head as i64;
                    tokens[k].dep = "compound".into();
                }
                let mut gender = if title { self.word_gender(&lower) } else { G::Unknown };
                if before.as_deref().is_some_and(|b| VESSELS.contains(&b)) {
                    gender = G::Female;
                }
                if gender == G::Unknown {
                    gender = (start..end).map(|k| self.word_gender(&tokens[k].text.to_lowercase())).find(|g| *g != G::Unknown).unwrap_or(G::Unknown);
                }
                let from = self.attach_modifiers(tokens, start, head);
                let appositive_of = out.iter().rposition(|f| {
                    f.kind == Kind::Noun
                        && (f.span.end_token == start || (f.span.end_token + 1 == start && tokens[start - 1].text == ","))
                });
                out.push(Found {
                    span: MentionSpan {
                        sentence,
                        start_token: from.min(start),
                        end_token: end,
                        head,
                    },
                    kind: Kind::Name,
                    gender,
                    key: tokens[head].text.to_lowercase(),
                    definite: false,
                    title_noun: if title { self.title_noun(&lower) } else { None },
                    appositive_of,
                });
                i = end;
                continue;
            }
            if self.lex.pronouns.contains(&lower) {
                out.push(Found {
                    span: MentionSpan {
                        sentence,
                        start_token: i,
                        end_token: i + 1,
                        head: i,
                    },
                    kind: Kind::Pronoun,
                    gender: self.word_gender(&lower),
                    key: lower,
                    definite: false,
                    title_noun: None,
                    appositive_of: None,
                });
                i += 1;
                continue;
            }
            if tokens[i].pos == "NOUN" {
                let mut head = i;
                while head + 1 < n && tokens[head + 1].pos == "NOUN" {
                    head += 1;
                }
                for k in i..head {
                    if tokens[k].dep == "dep" {
                        tokens[k].head = head as i64;
                        tokens[k].dep = "compound".into();
                    }
                }
                let from = self.attach_modifiers(tokens, i, head);
                let det = tokens[from].text.to_lowercase();
                let appositive_of = if from > 0 && from < i && tokens[from - 1].text == "," {
                    out.iter().rposition(|f| f.kind == Kind::Name && f.span.end_token + 1 == from)
                } else {
                    None
                };
                let gender = (i..=head)
                    .map(|k| self.word_gender(&tokens[k].lemma))
                    .chain((i..=head).map(|k| self.word_gender(&tokens[k].text.to_lowercase())))
                    .find(|g| *g != G::Unknown)
                    .unwrap_or(G::Unknown);
                out.push(Found {
                    span: MentionSpan {
                        sentence,
                        start_token: from,
                        end_token: head + 1,
                        head,
                    },
                    kind: Kind::Noun,
                    gender,
                    key: tokens[head].lemma.clone(),
                    definite: DEFINITE.contains(&det.as_str()),
                    title_noun: None,
                    appositive_of,
                });
                i = head + 1;
                continue;
            }
            i += 1;
        }
        out
    }

    /// Annotate one document's sentences (already in order).
    pub fn annotate_document(&self, doc_id: &str, sentences: &[&CleanSentence]) -> AnnotatedDocument {
        let mut out_sentences = Vec::with_capacity(sentences.len());
        let mut chains: Vec<Chain> = Vec::new();
        for s in sentences {
            let mut tokens = self.tokenize(&s.text);
            let known: HashSet<String> = chains.iter().flat_map(|c| c.names.iter().cloned()).collect();
            let found = self.find_mentions(s.index, &mut tokens, &known);
            let mut assigned: Vec<usize> = Vec::with_capacity(found.len());
            for f in &found {
                let pos = (f.span.sentence, f.span.start_token);
                let in_window = |c: &Chain| c.last.0 + self.window >= f.span.sentence;
                let appositive = f.appositive_of.map(|a| assigned[a]);
                let target = match f.kind {
                    _ if appositive.is_some() => appositive,
                    Kind::Name => chains
                        .iter()
                        .position(|c| c.names.contains(&f.key) && compatible(c.gender, f.gender)),
                    Kind::Noun if f.definite => chains
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| in_window(c) && c.nouns.contains(&f.key) && compatible(c.gender, f.gender))
                        .max_by_key(|(_, c)| c.last)
                        .map(|(k, _)| k),
                    Kind::Noun => None,
                    Kind::Pronoun => chains
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| in_window(c) && c.last < pos && compatible(c.gender, f.gender))
                        .max_by_key(|(_, c)| (f.gender != G::Unknown && c.gender == f.gender, c.last))
                        .map(|(k, _)| k),
                };
                let k = match target {
                    Some(k) => k,
                    None => {
                        chains.push(Chain {
                            id: chains.len(),
                            gender: G::Unknown,
                            names: HashSet::new(),
                            nouns: HashSet::new(),
                            last: pos,
                            mentions: Vec::new(),
                        });
                        chains.len() - 1
                    }
                };
                let c = &mut chains[k];
                if c.gender == G::Unknown {
                    c.gender = f.gender;
                }
                match f.kind {
                    Kind::Name => {
                        c.names.insert(f.key.clone());
                        c.nouns.extend(f.title_noun.clone());
                    }
                    Kind::Noun => {
                        c.nouns.insert(f.key.clone());
                    }
                    Kind::Pronoun => {}
                }
                c.last = c.last.max(pos);
                c.mentions.push(f.span);
                assigned.push(k);
            }
            out_sentences.push(AnnotatedSentence {
                index: s.index,
                tokens,
            });
        }
        let entities = chains
            .into_iter()
            .map(|c| AnnotatedEntity {
                id: format!("e{}", c.id),
                mentions: c.mentions,
            })
            .collect();
        AnnotatedDocument {
            doc_id: doc_id.to_string(),
            sentences: out_sentences,
            entities,
        }
    }

    /// Group sentences by document (ordered by id, then index) and annotate each.
    pub fn annotate(&self, sentences: &[CleanSentence]) -> Vec<AnnotatedDocument> {
        let mut by_doc: BTreeMap<&str, Vec<&CleanSentence>> = BTreeMap::new();
        for s in sentences {
            by_doc.entry(s.doc_id.as_str()).or_default().push(s);
        }
        by_doc
            .into_iter()
            .map(|(id, mut ss)| {
                ss.sort_by_key(|s| s.index);
                self.annotate_document(id, &ss)
            })
            .collect()
    }
}

pub fn heuristic_annotate(sentences: &[CleanSentence]) -> Vec<AnnotatedDocument> {
    HeuristicAnnotator::default().annotate(sentences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(doc: &str, texts: &[&str]) -> Vec<CleanSentence> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| CleanSentence {
                doc_id: doc.into(),
                index: i,
                text: t.to_string(),
                english_score: 1.0,
            })
            .collect()
    }

    #[test]
    fn name_and_pronoun_link() {
        let docs = heuristic_annotate(&sents("d", &["Mary arrived.", "She was tired."]));
        assert_eq!(docs[0].entities.len(), 1);
        assert_eq!(docs[0].entities[0].mentions.len(), 2);
    }

    #[test]
    fn no_people_no_chains() {
        let docs = heuristic_annotate(&sents("d", &["the price of sugar rose sharply."]));
        assert!(docs[0].entities.is_empty());
    }

    #[test]
    fn adjacent_adjective_is_amod() {
        let docs = heuristic_annotate(&sents("d", &["We met the celebrated doctor."]));
        let d = &docs[0];
        let toks = &d.sentences[0].tokens;
        let adj = toks.iter().find(|t| t.text == "celebrated").unwrap();
        assert_eq!(adj.dep, "amod");
        assert_eq!(toks[adj.head as usize].text, "doctor");
        assert_eq!(d.entities.len(), 1);
    }

    #[test]
    fn apposition_joins_name() {
        let docs = heuristic_annotate(&sents("d", &["For sale, a free black girl JOSEPHINE."]));
        let d = &docs[0];
        assert_eq!(d.entities.len(), 1);
        let amods: Vec<&str> = d.sentences[0].tokens.iter().filter(|t| t.dep == "amod").map(|t| t.text.as_str()).collect();
        assert_eq!(amods, vec!["free", "black"]);
    }
}
