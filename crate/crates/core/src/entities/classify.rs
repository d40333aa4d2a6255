use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::annotation::{AnnotatedDocument, EntityChain};
use crate::error::{Error, Result};
use crate::tokenize::RuleTokenizer;

/// Parse a one-token-per-line word list; blank lines and `#` comments are skipped.
pub fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn load_word_list(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&text))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSets {
    pub male: HashSet<String>,
    pub female: HashSet<String>,
    pub non_white: HashSet<String>,
}

impl KeywordSets {
    pub fn bundled() -> Self {
        KeywordSets {
            male: parse_word_list(include_str!("../../data/keywords/male.txt")),
            female: parse_word_list(include_str!("../../data/keywords/female.txt")),
            non_white: parse_word_list(include_str!("../../data/keywords/non_white.txt")),
        }
    }

    /// Reads `male.txt`, `female.txt` and `non_white.txt` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        Ok(KeywordSets {
            male: load_word_list(&dir.join("male.txt"))?,
            female: load_word_list(&dir.join("female.txt"))?,
            non_white: load_word_list(&dir.join("non_white.txt"))?,
        })
    }
}

/// Closed-list stand-in for a lexical-database person test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonLexicon {
    pub nouns: HashSet<String>,
    pub pronouns: HashSet<String>,
    pub titles: HashSet<String>,
}

impl PersonLexicon {
    pub fn bundled() -> Self {
        PersonLexicon {
            nouns: parse_word_list(include_str!("../../data/entities/person_nouns.txt")),
            pronouns: parse_word_list(include_str!("../../data/entities/pronouns.txt")),
            titles: parse_word_list(include_str!("../../data/entities/titles.txt")),
        }
    }

    /// Reads `person_nouns.txt`, `pronouns.txt` and `titles.txt` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        Ok(PersonLexicon {
            nouns: load_word_list(&dir.join("person_nouns.txt"))?,
            pronouns: load_word_list(&dir.join("pronouns.txt"))?,
            titles: load_word_list(&dir.join("titles.txt"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyOptions {
    /// Let a pronoun-only chain pass the person filter.
    pub pronoun_person_evidence: bool,
    /// Let pronoun keywords decide gender.
    pub pronoun_gender_evidence: bool,
    /// Only accept descriptor arcs attached to a mention's head token.
    pub head_only_descriptors: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            pronoun_person_evidence: true,
            pronoun_gender_evidence: true,
            head_only_descriptors: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Race {
    NonWhite,
    White,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Unknown => "unknown",
        })
    }
}

impl fmt::Display for Race {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Race::NonWhite => "non_white",
            Race::White => "white",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub gender: Gender,
    pub race: Race,
    /// Both gender keyword sets matched.
    pub gender_conflict: bool,
}

impl GroupAssignment {
    /// `race_gender`, or just the race when gender is unknown.
    pub fn intersection(&self) -> String {
        match self.gender {
            Gender::Unknown => self.race.to_string(),
            g => format!("{}_{g}", self.race),
        }
    }

    /// Every descriptor group this entity belongs to.
    pub fn groups(&self) -> Vec<String> {
        let mut out = vec![self.race.to_string()];
        if self.gender != Gender::Unknown {
            out.push(self.gender.to_string());
            out.push(self.intersection());
        }
        out
    }
}

fn mention_words<'a>(doc: &'a AnnotatedDocument, chain: &'a EntityChain) -> impl Iterator<Item = String> + 'a {
    let tok = RuleTokenizer::default();
    chain.mentions.iter().flat_map(move |m| {
        let s = doc.sentence(m.sentence_index);
        let tokens = s.map(|s| &s.tokens[m.span.start_token..m.span.end_token]).unwrap_or(&[]);
        tokens.iter().flat_map(move |t| tok.tokenize(&t.text)).collect::<Vec<_>>()
    })
}

fn head_lemma(doc: &AnnotatedDocument, m: &super::annotation::Mention) -> Option<String> {
    let t = doc.sentence(m.sentence_index)?.tokens.get(m.head_token_index)?;
    let lemma = if t.lemma.is_empty() { &t.text } else { &t.lemma };
    Some(lemma.to_lowercase())
}

/// Keep chains with person evidence and mark them `is_person`.
///
/// Evidence is a mention head in the noun list, a title word inside a
/// mention, or (if enabled) a pronoun head.
pub fn filter_persons(
    doc: &AnnotatedDocument,
    chains: Vec<EntityChain>,
    lex: &PersonLexicon,
    opts: &ClassifyOptions,
) -> Vec<EntityChain> {
    chains
        .into_iter()
        .filter_map(|mut c| {
            let by_head = c.mentions.iter().any(|m| {
                head_lemma(doc, m).is_some_and(|h| {
                    lex.nouns.contains(&h) || (opts.pronoun_person_evidence && lex.pronouns.contains(&h))
                })
            });
            let by_title = mention_words(doc, &c).any(|w| lex.titles.contains(&w));
            (by_head || by_title).then(|| {
                c.is_person = true;
                c
            })
        })
        .collect()
}

const GENDER_PRONOUNS: [&str; 8] = ["he", "him", "his", "himself", "she", "her", "hers", "herself"];

/// Keyword-existence classification over all mention tokens.
pub fn classify_entity(
    doc: &AnnotatedDocument,
    chain: &EntityChain,
    keywords: &KeywordSets,
    opts: &ClassifyOptions,
) -> GroupAssignment {
    let (mut male, mut female, mut non_white) = (false, false, false);
    for w in mention_words(doc, chain) {
        let pronoun = GENDER_PRONOUNS.contains(&w.as_str());
        if !pronoun || opts.pronoun_gender_evidence {
            male |= keywords.male.contains(&w);
            female |= keywords.female.contains(&w);
        }
        non_white |= keywords.non_white.contains(&w);
    }
    classify_flags(male, female, non_white)
}

pub fn classify_flags(male: bool, female: bool, non_white: bool) -> GroupAssignment {
    let gender = match (male, female) {
        (true, false) => Gender::Male,
        (false, true) => Gender::Female,
        _ => Gender::Unknown,
    };
    GroupAssignment {
        gender,
        race: if non_white { Race::NonWhite } else { Race::White },
        gender_conflict: male && female,
    }
}

/// Lowercased lemmas of `amod` dependents attached to the chain's mentions.
///
/// Returns the descriptors and the number of mentions whose sentence was missing.
pub fn collect_descriptors(doc: &AnnotatedDocument, chain: &EntityChain, head_only: bool) -> (Vec<String>, usize) {
    let mut arcs = std::collections::BTreeSet::new();
    let mut missing = 0;
    for m in &chain.mentions {
        let Some(s) = doc.sentence(m.sentence_index) else {
            missing += 1;
            continue;
        };
        for t in &s.tokens {
            if t.dep != "amod" || t.head < 0 {
                continue;
            }
            let h = t.head as usize;
            let attached = if head_only {
                h == m.head_token_index
            } else {
                (m.span.start_token..m.span.end_token).contains(&h)
            };
            if attached {
                arcs.insert((m.sentence_index, t.i));
            }
        }
    }
    let descriptors = arcs
        .into_iter()
        .map(|(s, i)| {
            let t = &doc.sentence(s).expect("present").tokens[i];
            let lemma = if t.lemma.is_empty() { &t.text } else { &t.lemma };
            lemma.to_lowercase()
        })
        .collect();
    (descriptors, missing)
}

/// One classified person entity, as written to `entities.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub doc_id: String,
    pub entity_id: String,
    pub mentions: Vec<String>,
    pub is_person: bool,
    pub gender: Gender,
    pub race: Race,
    pub gender_conflict: bool,
    pub group: String,
    pub descriptors: Vec<String>,
}

impl EntityRecord {
    pub fn assignment(&self) -> GroupAssignment {
        GroupAssignment {
            gender: self.gender,
            race: self.race,
            gender_conflict: self.gender_conflict,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClassifyStats {
    pub chains: usize,
    pub persons: usize,
    pub missing_sentences: usize,
}

/// Filter, classify and collect descriptors for every chain of every document.
///
/// With `keep_non_persons`, filtered chains are emitted too with `is_person = false`.
pub fn classify_documents(
    docs: &[AnnotatedDocument],
    keywords: &KeywordSets,
    lex: &PersonLexicon,
    opts: &ClassifyOptions,
    keep_non_persons: bool,
) -> Result<(Vec<EntityRecord>, ClassifyStats)> {
    use rayon::prelude::*;
    let per_doc: Vec<(Vec<EntityRecord>, ClassifyStats)> = docs
        .par_iter()
        .map(|doc| {
            let chains = doc.chains()?;
            let mut stats = ClassifyStats {
                chains: chains.len(),
                ..Default::default()
            };
            let persons: HashSet<String> = filter_persons(doc, chains.clone(), lex, opts)
                .into_iter()
                .map(|c| c.entity_id)
                .collect();
            let mut records = Vec::new();
            for mut chain in chains {
                chain.is_person = persons.contains(&chain.entity_id);
                if !chain.is_person && !keep_non_persons {
                    continue;
                }
                stats.persons += chain.is_person as usize;
                let g = classify_entity(doc, &chain, keywords, opts);
                let (descriptors, missing) = collect_descriptors(doc, &chain, opts.head_only_descriptors);
                stats.missing_sentences += missing;
                records.push(EntityRecord {
                    doc_id: doc.doc_id.clone(),
                    entity_id: chain.entity_id.clone(),
                    mentions: chain.mentions.iter().map(|m| m.surface.clone()).collect(),
                    is_person: chain.is_person,
                    gender: g.gender,
                    race: g.race,
                    gender_conflict: g.gender_conflict,
                    group: g.intersection(),
                    descriptors,
                });
            }
            Ok((records, stats))
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut stats = ClassifyStats::default();
    for (r, s) in per_doc {
        records.extend(r);
        stats.chains += s.chains;
        stats.persons += s.persons;
        stats.missing_sentences += s.missing_sentences;
    }
    records.sort_by(|a, b| (&a.doc_id, &a.entity_id).cmp(&(&b.doc_id, &b.entity_id)));
    Ok((records, stats))
}

/// Descriptor multisets per group: each person record contributes to its race,
/// and when gender is known to its gender and intersection groups.
pub fn descriptor_lists(records: &[EntityRecord]) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_person) {
        for g in r.assignment().groups() {
            out.entry(g).or_default().extend(r.descriptors.iter().cloned());
        }
    }
    out
}

/// Group sizes in the layout of an entities-per-group table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EntityCounts {
    pub entities: usize,
    pub males: usize,
    pub females: usize,
    pub non_whites: usize,
    pub non_white_males: usize,
    pub non_white_females: usize,
    pub gender_conflicts: usize,
}

pub fn entity_counts(records: &[EntityRecord]) -> EntityCounts {
    let mut c = EntityCounts::default();
    for r in records.iter().filter(|r| r.is_person) {
        c.entities += 1;
        let nw = r.race == Race::NonWhite;
        c.non_whites += nw as usize;
        c.gender_conflicts += r.gender_conflict as usize;
        match r.gender {
            Gender::Male => {
                c.males += 1;
                c.non_white_males += nw as usize;
            }
            Gender::Female => {
                c.females += 1;
                c.non_white_females += nw as usize;
            }
            Gender::Unknown => {}
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_to_assignment() {
        let g = classify_flags(true, true, false);
        assert_eq!((g.gender, g.race, g.gender_conflict), (Gender::Unknown, Race::White, true));
        assert_eq!(classify_flags(false, true, true).intersection(), "non_white_female");
        assert_eq!(classify_flags(false, false, true).groups(), vec!["non_white"]);
    }

    #[test]
    fn bundled_lists_load() {
        let k = KeywordSets::bundled();
        assert!(k.female.contains("mrs") && k.male.contains("man") && k.non_white.contains("negro"));
        let p = PersonLexicon::bundled();
        assert!(p.nouns.len() > 500 && p.nouns.contains("sailor") && p.pronouns.contains("she"));
        assert!(!p.nouns.contains("schooner"));
    }
}
