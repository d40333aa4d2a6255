use histbias::entities::{
    classify_documents, classify_entity, collect_descriptors, entity_counts, eval_classification, filter_persons,
    heuristic_annotate, pairwise_link_f1, AnnotatedDocument, AnnotatedEntity, AnnotatedSentence, ClassifyOptions,
    Gender, GoldLabel, KeywordSets, MentionSpan, PersonLexicon, Race, Token, ATTRIBUTES,
};
use histbias::ingest::CleanSentence;
use histbias::synth::{gender_skew_spec, generate};
use serde::Deserialize;

#[derive(Deserialize)]
struct FixtureDoc {
    doc_id: String,
    sentences: Vec<String>,
    chains: Vec<Vec<(usize, String)>>,
}

fn fixture() -> Vec<FixtureDoc> {
    serde_json::from_str(include_str!("fixtures/coref_30.json")).unwrap()
}

fn clean(doc_id: &str, texts: &[String]) -> Vec<CleanSentence> {
    texts
        .iter()
        .enumerate()
        .map(|(index, t)| CleanSentence {
            doc_id: doc_id.into(),
            index,
            text: t.clone(),
            english_score: 1.0,
        })
        .collect()
}

/// Gold chains placed on the predicted tokenization; tokenization is not what is scored.
fn gold_for(doc: &FixtureDoc, predicted: &AnnotatedDocument) -> AnnotatedDocument {
    let entities = doc
        .chains
        .iter()
        .enumerate()
        .map(|(k, chain)| AnnotatedEntity {
            id: format!("g{k}"),
            mentions: chain
                .iter()
                .map(|(s, word)| {
                    let head = predicted.sentences[*s]
                        .tokens
                        .iter()
                        .position(|t| &t.text == word)
                        .unwrap_or_else(|| panic!("{word:?} not in sentence {s} of {}", doc.doc_id));
                    MentionSpan {
                        sentence: *s,
                        start_token: head,
                        end_token: head + 1,
                        head,
                    }
                })
                .collect(),
        })
        .collect();
    AnnotatedDocument {
        doc_id: doc.doc_id.clone(),
        sentences: predicted.sentences.clone(),
        entities,
    }
}

#[test]
fn heuristic_chain_pairs_on_hand_fixture() {
    let docs = fixture();
    let mut gold = Vec::new();
    let mut predicted = Vec::new();
    for d in &docs {
        let p = heuristic_annotate(&clean(&d.doc_id, &d.sentences)).remove(0);
        p.validate().unwrap();
        gold.push(gold_for(d, &p));
        predicted.push(p);
    }
    let scores = pairwise_link_f1(&gold, &predicted);
    println!("chain-pair P={:.3} R={:.3} F1={:.3}", scores.precision, scores.recall, scores.f1);
    assert!(scores.f1 >= 0.8, "{scores:?}");
}

#[test]
fn sentences_without_people_still_emit_tokens() {
    let d = heuristic_annotate(&clean("x", &["Coffee remains dull at the wharf.".into()])).remove(0);
    assert!(d.entities.is_empty());
    assert_eq!(d.sentences[0].tokens.len(), 7);
}

fn tok(i: usize, text: &str, head: usize, dep: &str, pos: &str) -> Token {
    Token {
        i,
        text: text.into(),
        lemma: text.to_lowercase(),
        pos: pos.into(),
        head: head as i64,
        dep: dep.into(),
    }
}

fn sentence(index: usize, words: &[(&str, usize, &str, &str)]) -> AnnotatedSentence {
    AnnotatedSentence {
        index,
        tokens: words
            .iter()
            .enumerate()
            .map(|(i, (w, h, d, p))| tok(i, w, *h, d, p))
            .collect(),
    }
}

fn span(sentence: usize, start: usize, end: usize, head: usize) -> MentionSpan {
    MentionSpan {
        sentence,
        start_token: start,
        end_token: end,
        head,
    }
}

/// "Mrs Smith arrived. She left." / "A negro man ran." / "The prisoner escaped." /
/// "The man said she was ill." with one chain per line of the original layout.
fn curated() -> AnnotatedDocument {
    let sentences = vec![
        sentence(0, &[("Mrs", 1, "compound", "PROPN"), ("Smith", 2, "nsubj", "PROPN"), ("arrived", 2, "ROOT", "VERB")]),
        sentence(1, &[("She", 1, "nsubj", "PRON"), ("left", 1, "ROOT", "VERB")]),
        sentence(2, &[("A", 2, "det", "DET"), ("negro", 2, "compound", "NOUN"), ("man", 3, "nsubj", "NOUN"), ("ran", 3, "ROOT", "VERB")]),
        sentence(3, &[("The", 1, "det", "DET"), ("prisoner", 2, "nsubj", "NOUN"), ("escaped", 2, "ROOT", "VERB")]),
        sentence(4, &[("The", 1, "det", "DET"), ("man", 2, "nsubj", "NOUN"), ("fainted", 2, "ROOT", "VERB")]),
        sentence(5, &[("She", 1, "nsubj", "PRON"), ("recovered", 1, "ROOT", "VERB")]),
    ];
    AnnotatedDocument {
        doc_id: "curated".into(),
        sentences,
        entities: vec![
            AnnotatedEntity {
                id: "smith".into(),
                mentions: vec![span(0, 0, 2, 1), span(1, 0, 1, 0)],
            },
            AnnotatedEntity {
                id: "jack".into(),
                mentions: vec![span(2, 0, 3, 2)],
            },
            AnnotatedEntity {
                id: "prisoner".into(),
                mentions: vec![span(3, 0, 2, 1)],
            },
            AnnotatedEntity {
                id: "conflict".into(),
                mentions: vec![span(4, 0, 2, 1), span(5, 0, 1, 0)],
            },
        ],
    }
}

#[test]
fn curated_classification() {
    let doc = curated();
    doc.validate().unwrap();
    let kw = KeywordSets::bundled();
    let opts = ClassifyOptions::default();
    let chains = doc.chains().unwrap();
    let got: Vec<(Gender, Race, bool)> = chains
        .iter()
        .map(|c| {
            let g = classify_entity(&doc, c, &kw, &opts);
            (g.gender, g.race, g.gender_conflict)
        })
        .collect();
    assert_eq!(
        got,
        vec![
            (Gender::Female, Race::White, false),
            (Gender::Male, Race::NonWhite, false),
            (Gender::Unknown, Race::White, false),
            (Gender::Unknown, Race::White, true),
        ]
    );
}

#[test]
fn schooner_with_pronoun_only_evidence() {
    let doc = AnnotatedDocument {
        doc_id: "ship".into(),
        sentences: vec![
            sentence(0, &[("the", 1, "det", "DET"), ("schooner", 2, "nsubj", "NOUN"), ("sailed", 2, "ROOT", "VERB")]),
            sentence(1, &[("she", 1, "nsubj", "PRON"), ("sank", 1, "ROOT", "VERB")]),
            sentence(2, &[("the", 2, "det", "DET"), ("old", 2, "amod", "ADJ"), ("sailor", 3, "nsubj", "NOUN"), ("wept", 3, "ROOT", "VERB")]),
        ],
        entities: vec![
            AnnotatedEntity {
                id: "ship".into(),
                mentions: vec![span(0, 0, 2, 1), span(1, 0, 1, 0)],
            },
            AnnotatedEntity {
                id: "sailor".into(),
                mentions: vec![span(2, 0, 3, 2)],
            },
        ],
    };
    let lex = PersonLexicon::bundled();
    let strict = ClassifyOptions {
        pronoun_person_evidence: false,
        ..ClassifyOptions::default()
    };
    let kept: Vec<String> = filter_persons(&doc, doc.chains().unwrap(), &lex, &strict)
        .into_iter()
        .map(|c| c.entity_id)
        .collect();
    assert_eq!(kept, vec!["sailor"]);
    let lenient: Vec<String> = filter_persons(&doc, doc.chains().unwrap(), &lex, &ClassifyOptions::default())
        .into_iter()
        .map(|c| c.entity_id)
        .collect();
    assert_eq!(lenient, vec!["ship", "sailor"]);
    assert!(filter_persons(&doc, Vec::new(), &lex, &strict).is_empty());
}

#[test]
fn descriptors_from_amod_arcs() {
    let doc = AnnotatedDocument {
        doc_id: "ad".into(),
        sentences: vec![sentence(
            0,
            &[
                ("a", 3, "det", "DET"),
                ("free", 3, "amod", "ADJ"),
                ("black", 3, "amod", "ADJ"),
                ("girl", 3, "ROOT", "NOUN"),
                ("JOSEPHINE", 3, "appos", "PROPN"),
                ("Beautiful", 3, "amod", "ADJ"),
            ],
        )],
        entities: vec![AnnotatedEntity {
            id: "j".into(),
            mentions: vec![span(0, 0, 5, 3)],
        }],
    };
    let chain = &doc.chains().unwrap()[0];
    let (ds, missing) = collect_descriptors(&doc, chain, true);
    assert_eq!(ds, vec!["free", "black", "beautiful"]);
    assert_eq!(missing, 0);
    let plain = AnnotatedDocument {
        entities: vec![AnnotatedEntity {
            id: "p".into(),
            mentions: vec![span(0, 4, 5, 4)],
        }],
        ..doc.clone()
    };
    let chain = &plain.chains().unwrap()[0];
    assert!(collect_descriptors(&plain, chain, true).0.is_empty());
}

#[test]
fn synthetic_gold_round_trips_and_fills_accuracy_columns() {
    let corpus = generate(&gender_skew_spec("brave", "meek", 9.0, 5), 2_000).unwrap();
    let (records, _) = classify_documents(
        &corpus.annotations,
        &KeywordSets::bundled(),
        &PersonLexicon::bundled(),
        &ClassifyOptions::default(),
        true,
    )
    .unwrap();
    assert_eq!(records.len(), corpus.gold.len());
    let rows = eval_classification(&records, &corpus.gold).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.attribute.as_str()).collect();
    assert_eq!(names, ATTRIBUTES);
    for r in &rows {
        assert!(r.n > 0);
        assert_eq!((r.correct, r.incorrect, r.unable), (1.0, 0.0, 0.0), "{r:?}");
    }
    let counts = entity_counts(&records);
    assert_eq!(counts.entities, 2_000);
    assert_eq!(counts.males + counts.females, 2_000);
}

#[test]
fn unable_column_counts_non_persons_and_unknown_gender() {
    let corpus = generate(&gender_skew_spec("brave", "meek", 9.0, 6), 40).unwrap();
    let (mut records, _) = classify_documents(
        &corpus.annotations,
        &KeywordSets::bundled(),
        &PersonLexicon::bundled(),
        &ClassifyOptions::default(),
        true,
    )
    .unwrap();
    records[0].is_person = false;
    let g0: &GoldLabel = corpus
        .gold
        .iter()
        .find(|g| g.doc_id == records[0].doc_id && g.entity_id == records[0].entity_id)
        .unwrap();
    let gender_row = if g0.gender == Gender::Male { 2 } else { 3 };
    let rows = eval_classification(&records, &corpus.gold).unwrap();
    assert!(rows[gender_row].unable > 0.0);
    assert!((rows[gender_row].correct + rows[gender_row].incorrect + rows[gender_row].unable - 1.0).abs() < 1e-12);
}

