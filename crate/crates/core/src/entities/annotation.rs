//! Standoff annotation documents: tokens with dependency arcs plus coreference chains.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub i: usize,
    pub text: String,
    #[serde(default)]
    pub lemma: String,
    #[serde(default)]
    pub pos: String,
    /// Index of the syntactic head within the sentence; a root points at itself.
    pub head: i64,
    #[serde(default)]
    pub dep: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub index: usize,
    pub tokens: Vec<Token>,
}

impl AnnotatedSentence {
    /// Tokens joined by single spaces; character offsets refer to this text.
    pub fn text(&self) -> String {
        self.tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
    }

    /// Character offset of each token start in [`text`](Self::text), plus the total length.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.tokens.len() + 1);
        let mut pos = 0;
        for (k, t) in self.tokens.iter().enumerate() {
            if k > 0 {
                pos += 1;
            }
            out.push(pos);
            pos += t.text.chars().count();
        }
        out.push(pos);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MentionSpan {
    pub sentence: usize,
    pub start_token: usize,
    /// Exclusive.
    pub end_token: usize,
    pub head: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedEntity {
    pub id: String,
    pub mentions: Vec<MentionSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub sentences: Vec<AnnotatedSentence>,
    pub entities: Vec<AnnotatedEntity>,
}

/// A resolved reference with character offsets into its sentence text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub doc_id: String,
    pub sentence_index: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub surface: String,
    pub head_token_index: usize,
    pub span: MentionSpan,
}

/// All references to one entity, sorted by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityChain {
    pub entity_id: String,
    pub doc_id: String,
    pub mentions: Vec<Mention>,
    pub is_person: bool,
}

impl AnnotatedDocument {
    pub fn sentence(&self, index: usize) -> Option<&AnnotatedSentence> {
        self.sentences.iter().find(|s| s.index == index)
    }

    /// Check token numbering, head indices and mention bounds.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(format!("document {:?}: {m}", self.doc_id)));
        for s in &self.sentences {
            for (k, t) in s.tokens.iter().enumerate() {
                if t.i != k {
                    return fail(format!("sentence {} token {k} has i={}", s.index, t.i));
                }
                if t.head >= s.tokens.len() as i64 {
                    return fail(format!("sentence {} token {k} head {} out of range", s.index, t.head));
                }
            }
        }
        for e in &self.entities {
            if e.mentions.is_empty() {
                return fail(format!("entity {:?} has no mentions", e.id));
            }
            for m in &e.mentions {
                let Some(s) = self.sentence(m.sentence) else {
                    return fail(format!("entity {:?} refers to missing sentence {}", e.id, m.sentence));
                };
                if m.start_token >= m.end_token || m.end_token > s.tokens.len() || !(m.start_token..m.end_token).contains(&m.head)
                {
                    return fail(format!("entity {:?} has an out-of-range mention {m:?}", e.id));
                }
            }
        }
        Ok(())
    }

    /// Resolve entities into chains; `is_person` starts false.
    pub fn chains(&self) -> Result<Vec<EntityChain>> {
        self.validate()?;
        Ok(self
            .entities
            .iter()
            .map(|e| {
                let mut spans = e.mentions.clone();
                spans.sort();
                let mentions = spans
                    .into_iter()
                    .map(|span| {
                        let s = self.sentence(span.sentence).expect("validated");
                        let offsets = s.offsets();
                        let surface = s.tokens[span.start_token..span.end_token]
                            .iter()
                            .map(|t| t.text.as_str())
                            .collect::<Vec<_>>()
                            .join(" ");
                        let char_start = offsets[span.start_token];
                        Mention {
                            doc_id: self.doc_id.clone(),
                            sentence_index: span.sentence,
                            char_start,
                            char_end: char_start + surface.chars().count(),
                            surface,
                            head_token_index: span.head,
                            span,
                        }
                    })
                    .collect();
                EntityChain {
                    entity_id: e.id.clone(),
                    doc_id: self.doc_id.clone(),
                    mentions,
                    is_person: false,
                }
            })
            .collect())
    }
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotatedDocument>> {
    let docs: Vec<AnnotatedDocument> = jsonl::read_jsonl(path)?;
    for (i, d) in docs.iter().enumerate() {
        d.validate().map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
    }
    Ok(docs)
}
