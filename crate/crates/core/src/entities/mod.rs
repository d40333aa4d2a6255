//! Person entities from coreference annotations: person filtering, keyword
//! group classification and adjectival descriptor collection.

mod annotation;
mod classify;
mod eval;
mod heuristic;

pub use annotation::{
    read_annotations, AnnotatedDocument, AnnotatedEntity, AnnotatedSentence, EntityChain, Mention, MentionSpan, Token,
};
pub use classify::{
    classify_documents, classify_entity, classify_flags, collect_descriptors, descriptor_lists, entity_counts,
    filter_persons, load_word_list, parse_word_list, ClassifyOptions, ClassifyStats, EntityCounts, EntityRecord, Gender,
    GroupAssignment, KeywordSets, PersonLexicon, Race,
};
pub use eval::{
    eval_classification, pairwise_link_f1, read_gold, write_accuracy_csv, AttributeAccuracy, GoldLabel,
    LinkScores, ATTRIBUTES,
};
pub use heuristic::{heuristic_annotate, HeuristicAnnotator, LINK_WINDOW};

pub fn read_records(path: &std::path::Path) -> crate::Result<Vec<EntityRecord>> {
    crate::jsonl::read_jsonl(path)
}
