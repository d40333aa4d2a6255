use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::annotation::AnnotatedDocument;
use super::classify::{EntityRecord, Gender, Race};
use crate::error::{Error, Result};

/// Hand label for one entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub doc_id: String,
    pub entity_id: String,
    pub gender: Gender,
    pub race: Race,
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldLabel>> {
    crate::jsonl::read_jsonl(path)
}

/// Ratios for the entities whose gold label is `attribute`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeAccuracy {
    pub attribute: String,
    pub n: usize,
    pub correct: f64,
    pub incorrect: f64,
    pub unable: f64,
}

pub const ATTRIBUTES: [&str; 4] = ["Non-whites", "Whites", "Males", "Females"];

/// Per-attribute correct / incorrect / unable-to-classify ratios.
///
/// Rows are keyed by the gold class. A prediction is "unable" when the entity
/// was not accepted as a person or, for the gender rows, its gender is unknown.
pub fn eval_classification(predicted: &[EntityRecord], gold: &[GoldLabel]) -> Result<Vec<AttributeAccuracy>> {
    let by_id: HashMap<(&str, &str), &EntityRecord> =
        predicted.iter().map(|r| ((r.doc_id.as_str(), r.entity_id.as_str()), r)).collect();
    // (correct, incorrect, unable) per attribute
    let mut tallies = [[0usize; 3]; 4];
    for g in gold {
        let p = by_id
            .get(&(g.doc_id.as_str(), g.entity_id.as_str()))
            .ok_or_else(|| Error::invalid(format!("gold entity {}/{} has no prediction", g.doc_id, g.entity_id)))?;
        let race_row = if g.race == Race::NonWhite { 0 } else { 1 };
        let race_col = if !p.is_person {
            2
        } else if p.race == g.race {
            0
        } else {
            1
        };
        tallies[race_row][race_col] += 1;
        let gender_row = match g.gender {
            Gender::Male => 2,
            Gender::Female => 3,
            Gender::Unknown => continue,
        };
        let gender_col = if !p.is_person || p.gender == Gender::Unknown {
            2
        } else if p.gender == g.gender {
            0
        } else {
            1
        };
        tallies[gender_row][gender_col] += 1;
    }
    let by_gold: HashSet<(&str, &str)> = gold.iter().map(|g| (g.doc_id.as_str(), g.entity_id.as_str())).collect();
    if by_gold.len() != gold.len() {
        return Err(Error::invalid("duplicate entity in gold labels"));
    }
    Ok(ATTRIBUTES
        .iter()
        .zip(tallies)
        .map(|(name, [c, i, u])| {
            let n = c + i + u;
            let r = |x: usize| if n == 0 { 0.0 } else { x as f64 / n as f64 };
            AttributeAccuracy {
                attribute: name.to_string(),
                n,
                correct: r(c),
                incorrect: r(i),
                unable: r(u),
            }
        })
        .collect())
}

pub fn write_accuracy_csv<W: std::io::Write>(rows: &[AttributeAccuracy], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["attribute", "n", "correct", "incorrect", "unable"])?;
    for r in rows {
        w.write_record([
            r.attribute.clone(),
            r.n.to_string(),
            r.correct.to_string(),
            r.incorrect.to_string(),
            r.unable.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

type MentionKey = (String, usize, usize);

fn link_pairs(docs: &[AnnotatedDocument]) -> HashSet<(MentionKey, MentionKey)> {
    let mut out = HashSet::new();
    for d in docs {
        for e in &d.entities {
            let mut keys: Vec<MentionKey> = e.mentions.iter().map(|m| (d.doc_id.clone(), m.sentence, m.head)).collect();
            keys.sort();
            keys.dedup();
            for i in 0..keys.len() {
                for j in i + 1..keys.len() {
                    out.insert((keys[i].clone(), keys[j].clone()));
                }
            }
        }
    }
    out
}

/// Coreference link precision/recall/F1 over unordered mention pairs; mentions
/// are identified by document, sentence and head token.
pub fn pairwise_link_f1(gold: &[AnnotatedDocument], predicted: &[AnnotatedDocument]) -> LinkScores {
    let g = link_pairs(gold);
    let p = link_pairs(predicted);
    let hit = g.intersection(&p).count() as f64;
    let precision = if p.is_empty() { 1.0 } else { hit / p.len() as f64 };
    let recall = if g.is_empty() { 1.0 } else { hit / g.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    LinkScores { precision, recall, f1 }
}
