use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use histbias::entities::{
    classify_documents, eval_classification, ClassifyOptions, Gender, KeywordSets, PersonLexicon, Race,
};
use histbias::pmi::{FEMALE, MALE, NON_WHITE, WHITE};
use histbias::synth::{
    expected_pmi, expected_plane, generate, group_labels, DescriptorSpec, GroupSpec, PlantSpec, Sampler,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn standard() -> PlantSpec {
    PlantSpec::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synth/standard.json")).unwrap()
}

/// Men and women at equal priors; `brave` 9:1 toward men, `meek` 9:1 toward women.
fn two_group() -> PlantSpec {
    let odds = |g: &str| BTreeMap::from([(g.to_string(), 9.0)]);
    PlantSpec {
        groups: vec![
            GroupSpec {
                name: "male".into(),
                prior: 0.5,
            },
            GroupSpec {
                name: "female".into(),
                prior: 0.5,
            },
        ],
        descriptors: vec![
            DescriptorSpec {
                lemma: "brave".into(),
                weight: 1.0,
                odds: odds("male"),
            },
            DescriptorSpec {
                lemma: "meek".into(),
                weight: 1.0,
                odds: odds("female"),
            },
        ],
        entity_fraction: 1.0,
        seed: 1,
        ..PlantSpec::default()
    }
}

/// Draw `n` entities and count (group, descriptor) events in both universes:
/// spec groups, and axis groups with each occurrence under race and gender.
fn simulate(spec: &PlantSpec, n: usize, seed: u64) -> (HashMap<(String, String), u64>, HashMap<(String, String), u64>) {
    let sampler = Sampler::new(spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec_cells = HashMap::new();
    let mut axis_cells = HashMap::new();
    for _ in 0..n {
        let e = sampler.sample_entity(&mut rng);
        let name = &spec.groups[e.group].name;
        let (gender, race) = group_labels(name).unwrap();
        let mut axes = vec![if race == Race::White { WHITE } else { NON_WHITE }];
        match gender {
            Gender::Male => axes.push(MALE),
            Gender::Female => axes.push(FEMALE),
            Gender::Unknown => {}
        }
        for &d in &e.descriptors {
            let lemma = spec.descriptors[d].lemma.clone();
            *spec_cells.entry((name.clone(), lemma.clone())).or_insert(0u64) += 1;
            for a in &axes {
                *axis_cells.entry((a.to_string(), lemma.clone())).or_insert(0u64) += 1;
            }
        }
    }
    (spec_cells, axis_cells)
}

fn empirical_pmi(cells: &HashMap<(String, String), u64>, g: &str, d: &str) -> f64 {
    let n: u64 = cells.values().sum();
    let cg: u64 = cells.iter().filter(|((x, _), _)| x == g).map(|(_, c)| c).sum();
    let cd: u64 = cells.iter().filter(|((_, x), _)| x == d).map(|(_, c)| c).sum();
    let c = cells[&(g.to_string(), d.to_string())];
    (c as f64 * n as f64 / (cg as f64 * cd as f64)).ln()
}

#[test]
fn two_group_closed_form_and_simulation() {
    let spec = two_group();
    let want = 1.8f64.ln();
    approx::assert_abs_diff_eq!(expected_pmi(&spec, "male", "brave").unwrap(), want, epsilon = 1e-12);
    approx::assert_abs_diff_eq!(expected_pmi(&spec, "female", "brave").unwrap(), 0.2f64.ln(), epsilon = 1e-12);
    let (spec_cells, axis_cells) = simulate(&spec, 1_000_000, 77);
    for (g, d) in [("male", "brave"), ("female", "brave"), ("male", "meek"), ("female", "meek")] {
        let sim = empirical_pmi(&spec_cells, g, d);
        let exp = expected_pmi(&spec, g, d).unwrap();
        assert!((sim - exp).abs() < 0.01, "{g}/{d}: simulated {sim} expected {exp}");
    }
    // every occurrence is white, so the gender axis universe doubles N without changing the ratio
    let gx = expected_pmi(&spec, FEMALE, "brave").unwrap() - expected_pmi(&spec, MALE, "brave").unwrap();
    approx::assert_abs_diff_eq!(gx, -(9f64.ln()), epsilon = 1e-12);
    assert!(expected_plane(&spec, "brave").is_err(), "no non-white mass, no race axis");
    let sim_gx = empirical_pmi(&axis_cells, FEMALE, "brave") - empirical_pmi(&axis_cells, MALE, "brave");
    assert!((sim_gx - gx).abs() < 0.02, "{sim_gx} vs {gx}");
}

#[test]
fn axis_group_formula_matches_simulation_on_standard_spec() {
    let spec = standard();
    let (_, cells) = simulate(&spec, 1_000_000, 5);
    for d in &spec.descriptors {
        for g in [MALE, FEMALE, WHITE, NON_WHITE] {
            let exp = expected_pmi(&spec, g, &d.lemma).unwrap();
            let sim = empirical_pmi(&cells, g, &d.lemma);
            assert!((sim - exp).abs() < 0.03, "{g}/{}: simulated {sim} expected {exp}", d.lemma);
        }
    }
}

#[test]
fn conditionals_converge_within_three_percent() {
    let spec = two_group();
    let (cells, _) = simulate(&spec, 100_000, 1);
    for g in &spec.groups {
        let p = spec.conditional(&g.name).unwrap();
        let total: u64 = cells.iter().filter(|((x, _), _)| *x == g.name).map(|(_, c)| c).sum();
        for (k, d) in spec.descriptors.iter().enumerate() {
            let hat = cells[&(g.name.clone(), d.lemma.clone())] as f64 / total as f64;
            let rel = (hat - p[k]).abs() / p[k];
            assert!(rel < 0.03, "{}/{}: {hat} vs {}", g.name, d.lemma, p[k]);
        }
    }
}

#[test]
fn zero_noise_rate_leaves_words_intact() {
    let mut spec = standard();
    let noisy = generate(&spec, 3_000).unwrap();
    let count = |c: &histbias::synth::SynthCorpus, w: &str| c.token_corpus().iter().flatten().filter(|t| *t == w).count();
    assert!(count(&noisy, "houfe") > 0);
    spec.ocr_noise.rate = 0.0;
    let clean = generate(&spec, 3_000).unwrap();
    assert_eq!(count(&clean, "houfe"), 0);
    assert!(count(&clean, "house") > 0);
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn fixed_seed_is_byte_identical() {
    let spec = standard();
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    generate(&spec, 500).unwrap().write_to_dir(&a).unwrap();
    generate(&spec, 500).unwrap().write_to_dir(&b).unwrap();
    let other = PlantSpec { seed: 12, ..spec };
    generate(&other, 500).unwrap().write_to_dir(&c).unwrap();
    let (ba, bb, bc) = (dir_bytes(&a), dir_bytes(&b), dir_bytes(&c));
    assert_eq!(ba.len(), 4);
    assert_eq!(ba, bb);
    assert_ne!(ba["documents.jsonl"], bc["documents.jsonl"]);
}

#[test]
fn gold_labels_round_trip_through_the_classifier() {
    let corpus = generate(&standard(), 5_000).unwrap();
    let (records, _) = classify_documents(
        &corpus.annotations,
        &KeywordSets::bundled(),
        &PersonLexicon::bundled(),
        &ClassifyOptions::default(),
        true,
    )
    .unwrap();
    assert_eq!(records.len(), corpus.gold.len());
    for r in eval_classification(&records, &corpus.gold).unwrap() {
        assert_eq!(r.correct, 1.0, "{r:?}");
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let mut s = two_group();
    s.groups[0].prior = 0.7;
    assert!(s.validate().is_err());
    let mut s = two_group();
    s.descriptors[0].lemma = "negro".into();
    assert!(s.validate().is_err());
    let mut s = two_group();
    s.descriptors[0].odds.insert("martian".into(), 2.0);
    assert!(s.validate().is_err());
    let mut s = standard();
    s.topics[0].words.push("mr".into());
    assert!(s.validate().is_err());
    assert!(expected_pmi(&two_group(), "male", "unknown").is_err());
}
