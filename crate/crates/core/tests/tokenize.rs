use std::collections::{BTreeMap, BTreeSet};

use histbias::tokenize::{bpe_corpus, strip_marker, word_corpus, BpeModel, PunctuationPolicy, RuleTokenizer, END_OF_WORD};
use proptest::prelude::*;

#[test]
fn hand_checked_sentences() {
    let t = RuleTokenizer::default();
    let mut n = 0;
    for line in include_str!("fixtures/tokenize_50.tsv").lines() {
        let (sentence, expected) = line.split_once('\t').expect("tab-separated line");
        let want: Vec<&str> = expected.split_whitespace().collect();
        assert_eq!(t.tokenize(sentence), want, "{sentence:?}");
        n += 1;
    }
    assert_eq!(n, 50);
}

#[test]
fn keep_policy_emits_punctuation() {
    let t = RuleTokenizer {
        lowercase: false,
        punctuation: PunctuationPolicy::Keep,
    };
    assert_eq!(t.tokenize("Mr. Hall, (merchant)."), vec!["Mr", ".", "Hall", ",", "(", "merchant", ")", "."]);
}

fn initial(w: &str) -> Vec<String> {
    let mut s: Vec<String> = w.chars().map(String::from).collect();
    s.last_mut().unwrap().push_str(END_OF_WORD);
    s
}

fn alphabet(counts: &BTreeMap<String, i64>) -> usize {
    counts.keys().flat_map(|w| initial(w)).collect::<BTreeSet<_>>().len()
}

/// Textbook BPE over strings: recount every pair each round, merge left to right.
fn naive_bpe(counts: &BTreeMap<String, i64>, vocab_size: usize) -> Vec<(String, String)> {
    let mut words: Vec<(Vec<String>, i64)> = counts.iter().map(|(w, &c)| (initial(w), c)).collect();
    let alphabet = alphabet(counts);
    let mut merges = Vec::new();
    while alphabet + merges.len() < vocab_size {
        let mut pairs: BTreeMap<(String, String), i64> = BTreeMap::new();
        for (s, c) in &words {
            for w in s.windows(2) {
                *pairs.entry((w[0].clone(), w[1].clone())).or_insert(0) += c;
            }
        }
        let Some(best) = pairs.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(p, _)| p.clone()) else {
            break;
        };
        for (s, _) in &mut words {
            let mut out = Vec::new();
            let mut i = 0;
            while i < s.len() {
                if i + 1 < s.len() && s[i] == best.0 && s[i + 1] == best.1 {
                    out.push(format!("{}{}", best.0, best.1));
                    i += 2;
                } else {
                    out.push(s[i].clone());
                    i += 1;
                }
            }
            *s = out;
        }
        merges.push(best);
    }
    merges
}

fn word_counts() -> impl Strategy<Value = BTreeMap<String, i64>> {
    prop::collection::btree_map("[abcd]{1,6}", 1i64..20, 1..25)
}

proptest! {
    #[test]
    fn first_merge_is_most_frequent_pair(counts in word_counts()) {
        let m = BpeModel::train_from_counts(counts.clone(), alphabet(&counts) + 1).unwrap();
        let mut best: Option<((String, String), i64)> = None;
        for w in counts.keys() {
            for pair in initial(w).windows(2) {
                let pair = (pair[0].clone(), pair[1].clone());
                let total: i64 = counts
                    .iter()
                    .map(|(v, &d)| d * initial(v).windows(2).filter(|x| x[0] == pair.0 && x[1] == pair.1).count() as i64)
                    .sum();
                if best.as_ref().is_none_or(|(p, t)| total > *t || (total == *t && pair < *p)) {
                    best = Some((pair, total));
                }
            }
        }
        match best {
            Some((pair, _)) => prop_assert_eq!(m.merges(), &[pair][..]),
            None => prop_assert!(m.merges().is_empty()),
        }
    }

    #[test]
    fn merge_sequence_matches_naive_trainer(counts in word_counts(), extra in 1usize..30) {
        let vocab_size = alphabet(&counts) + extra;
        let m = BpeModel::train_from_counts(counts.clone(), vocab_size).unwrap();
        let want = naive_bpe(&counts, vocab_size);
        prop_assert_eq!(m.merges(), want.as_slice());
    }
}

#[test]
fn round_trip_over_a_thousand_words() {
    let mut rng_state = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        rng_state
    };
    let letters: Vec<char> = "abcdefghijklmnopqrstuvwxyzſæ'-".chars().collect();
    let words: Vec<String> = (0..1000)
        .map(|_| {
            let len = 1 + (next() % 12) as usize;
            (0..len).map(|_| letters[(next() % letters.len() as u64) as usize]).collect()
        })
        .collect();
    let m = BpeModel::train(words.iter().take(800), 400).unwrap();
    for w in words.iter().take(800) {
        let enc = m.encode(w);
        assert!(enc.last().unwrap().ends_with(END_OF_WORD));
        assert!(enc[..enc.len() - 1].iter().all(|s| !s.ends_with(END_OF_WORD)));
        assert!(enc.iter().all(|s| m.vocab().contains_key(s)), "{w} -> {enc:?}");
        assert_eq!(BpeModel::decode(&enc), *w);
    }
    for w in &words[800..] {
        let enc = m.encode(w);
        assert_eq!(enc.iter().map(|s| strip_marker(s)).collect::<String>(), *w);
    }
}

proptest! {
    #[test]
    fn encode_decode_round_trip(w in "[a-z]{1,15}") {
        let m = BpeModel::train(["the", "then", "there", "hither", "thither", "whether"], 40).unwrap();
        prop_assert_eq!(BpeModel::decode(&m.encode(&w)), w);
    }
}

#[test]
fn model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = BpeModel::train("the sugar the ship the shore sugar cane".split(' '), 30).unwrap();
    let path = dir.path().join("m.bpe");
    m.save(&path).unwrap();
    let back = BpeModel::load(&path).unwrap();
    assert_eq!(back.merges(), m.merges());
    for w in ["shore", "sugary", "x"] {
        assert_eq!(back.encode(w), m.encode(w));
    }
}

#[test]
fn vocab_size_below_alphabet_is_rejected() {
    assert!(BpeModel::train(["abc", "de"], 5).is_err());
    assert!(BpeModel::train(Vec::<String>::new(), 50).is_err());
}

#[test]
fn corpus_helpers_preserve_sentence_shape() {
    let t = RuleTokenizer::default();
    let words = word_corpus(&["The ship sailed.", "Sugar rose."], &t);
    assert_eq!(words, vec![vec!["the", "ship", "sailed"], vec!["sugar", "rose"]]);
    let m = BpeModel::train(words.iter().flatten(), 20).unwrap();
    let sub = bpe_corpus(&words, &m);
    assert_eq!(sub.len(), 2);
    let rebuilt: String = sub[1].iter().map(|s| s.replace(END_OF_WORD, " ")).collect();
    assert_eq!(rebuilt.trim_end(), "sugar rose");
}
