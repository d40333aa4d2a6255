//! Loading, cleaning, segmenting, language filtering and period bucketing of OCRed documents.

mod langid;
mod ocr;
mod period;
mod segment;

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use langid::{EnglishScore, LanguageProfiles, NgramProfile, DEFAULT_ORDER, ENGLISH};
pub use ocr::{Dictionary, OcrRule, OcrRules};
pub use period::{bucket_by_period, load_periods, validate_periods, PeriodBuckets, PeriodManifest, PeriodSpec, UNASSIGNED};
pub use segment::split_sentences;
pub(crate) use segment::is_abbreviation;

use crate::error::{Error, Result};
use crate::jsonl;

pub const DEFAULT_ENGLISH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub source: String,
    pub year: i32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanSentence {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub english_score: f64,
}

/// Validate id presence/uniqueness and, optionally, the year range.
pub fn validate_documents(docs: &[RawDocument], years: Option<(i32, i32)>) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, d) in docs.iter().enumerate() {
        if d.id.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "document id is empty".into(),
            });
        }
        if !seen.insert(d.id.as_str()) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("duplicate document id {:?}", d.id),
            });
        }
        if let Some((lo, hi)) = years {
            if !(lo..=hi).contains(&d.year) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("year {} outside corpus range {lo}..={hi}", d.year),
                });
            }
        }
    }
    Ok(())
}

pub fn read_documents(path: &Path) -> Result<Vec<RawDocument>> {
    let docs: Vec<RawDocument> = jsonl::read_jsonl(path)?;
    validate_documents(&docs, None)?;
    Ok(docs)
}

pub fn clean_ocr(text: &str, rules: &OcrRules) -> String {
    rules.clean(text)
}

/// Segment an already-cleaned document. Scores are left at 1.0 until language filtering.
pub fn segment_sentences(doc: &RawDocument) -> Vec<CleanSentence> {
    split_sentences(&doc.text)
        .into_iter()
        .enumerate()
        .map(|(index, text)| CleanSentence {
            doc_id: doc.id.clone(),
            index,
            text,
            english_score: 1.0,
        })
        .collect()
}

pub struct IngestOptions<'a> {
    pub rules: &'a OcrRules,
    pub profiles: &'a LanguageProfiles,
    pub english_threshold: f64,
    pub periods: &'a [PeriodSpec],
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutput {
    /// English sentences sorted by (doc id, index).
    pub sentences: Vec<CleanSentence>,
    /// Cleaned documents bucketed by period.
    pub buckets: PeriodBuckets,
    pub dropped_non_english: usize,
    pub uninformative: usize,
}

/// Clean → segment → language-filter every document, then bucket by period.
pub fn ingest(docs: Vec<RawDocument>, opts: &IngestOptions<'_>) -> Result<IngestOutput> {
    validate_periods(opts.periods)?;
    let processed: Vec<(RawDocument, Vec<CleanSentence>, usize, usize)> = docs
        .into_par_iter()
        .map(|mut doc| {
            doc.text = clean_ocr(&doc.text, opts.rules);
            let mut dropped = 0;
            let mut uninformative = 0;
            let kept = segment_sentences(&doc)
                .into_iter()
                .filter_map(|mut s| {
                    let score = opts.profiles.score_english(&s.text);
                    uninformative += usize::from(!score.informative);
                    s.english_score = score.score;
                    if score.score >= opts.english_threshold {
                        Some(s)
                    } else {
                        dropped += 1;
                        None
                    }
                })
                .collect();
            (doc, kept, dropped, uninformative)
        })
        .collect();
    let mut out = IngestOutput::default();
    let mut cleaned = Vec::with_capacity(processed.len());
    for (doc, sentences, dropped, uninformative) in processed {
        out.sentences.extend(sentences);
        out.dropped_non_english += dropped;
        out.uninformative += uninformative;
        cleaned.push(doc);
    }
    out.sentences
        .sort_by(|a, b| a.doc_id.cmp(&b.doc_id).then(a.index.cmp(&b.index)));
    out.buckets = bucket_by_period(cleaned, opts.periods)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> RawDocument {
        RawDocument {
            id: id.into(),
            source: "s".into(),
            year: 1800,
            text: text.into(),
        }
    }

    #[test]
    fn segment_keeps_order_and_drops_nothing() {
        let d = doc("d1", "The houfe sat. Mr. Pitt spoke!  ");
        let s = segment_sentences(&d);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].index, s[1].index), (0, 1));
        let joined: String = s.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
        assert_eq!(joined, d.text.trim());
        assert!(segment_sentences(&doc("e", "")).is_empty());
    }

    #[test]
    fn ingest_filters_danish_and_buckets() {
        let rules = OcrRules::bundled();
        let profiles = LanguageProfiles::bundled();
        let periods = vec![PeriodSpec::new("p", 1790, 1810)];
        let opts = IngestOptions {
            rules: &rules,
            profiles: &profiles,
            english_threshold: DEFAULT_ENGLISH_THRESHOLD,
            periods: &periods,
        };
        let docs = vec![
            doc("b", "The houfe of commons met yesterday. Skibet ankom i går morges fra København."),
            doc("a", "The ship arrived from London."),
        ];
        let out = ingest(docs, &opts).unwrap();
        let texts: Vec<&str> = out.sentences.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, vec!["The ship arrived from London.", "The house of commons met yesterday."]);
        assert_eq!(out.dropped_non_english, 1);
        assert_eq!(out.buckets.get("p").unwrap().len(), 2);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let docs = vec![doc("a", ""), doc("a", "")];
        assert!(matches!(validate_documents(&docs, None), Err(Error::Parse { line: 2, .. })));
        assert!(validate_documents(&[doc("a", "")], Some((1700, 1750))).is_err());
    }
}
