//! Synthetic corpora with planted group–descriptor associations, topic
//! co-occurrence structure and word-level OCR confusions.
//!
//! Sampling law for an entity sentence: a group `g` is drawn with
//! probability `prior(g)`, then each descriptor `d` independently of the
//! others with probability proportional to `weight(d) · odds(d, g)`.
//! Topic sentences draw a topic by weight and then words uniformly from it.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entities::{
    AnnotatedDocument, AnnotatedEntity, AnnotatedSentence, Gender, GoldLabel, KeywordSets, MentionSpan, Race, Token,
};
use crate::error::{Error, Result};
use crate::ingest::RawDocument;
use crate::jsonl;
use crate::pmi::{FEMALE, MALE, NON_WHITE, WHITE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    /// One of `white_male`, `white_female`, `non_white_male`, `non_white_female`,
    /// `male`, `female` (race white), `white` or `non_white` (gender unknown).
    pub name: String,
    pub prior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSpec {
    pub lemma: String,
    #[serde(default = "one")]
    pub weight: f64,
    /// Per-group odds multipliers; groups not listed get 1.
    #[serde(default)]
    pub odds: BTreeMap<String, f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSpec {
    pub name: String,
    pub words: Vec<String>,
    /// Relative frequency of the topic among topic sentences.
    #[serde(default = "one", alias = "size")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OcrNoise {
    pub rate: f64,
    pub substitutions: Vec<Substitution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantSpec {
    pub groups: Vec<GroupSpec>,
    pub descriptors: Vec<DescriptorSpec>,
    pub descriptors_per_entity: usize,
    pub topics: Vec<TopicSpec>,
    pub topic_sentence_len: usize,
    /// Probability that a sentence is an entity sentence rather than a topic sentence.
    pub entity_fraction: f64,
    pub ocr_noise: OcrNoise,
    pub sentences_per_doc: usize,
    pub years: (i32, i32),
    pub seed: u64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        PlantSpec {
            groups: Vec::new(),
            descriptors: Vec::new(),
            descriptors_per_entity: 1,
            topics: Vec::new(),
            topic_sentence_len: 10,
            entity_fraction: 0.5,
            ocr_noise: OcrNoise::default(),
            sentences_per_doc: 20,
            years: (1751, 1876),
            seed: 1,
        }
    }
}

/// Gender and race implied by a group name.
pub fn group_labels(name: &str) -> Option<(Gender, Race)> {
    Some(match name {
        "white_male" | "male" => (Gender::Male, Race::White),
        "white_female" | "female" => (Gender::Female, Race::White),
        "non_white_male" => (Gender::Male, Race::NonWhite),
        "non_white_female" => (Gender::Female, Race::NonWhite),
        "white" => (Gender::Unknown, Race::White),
        "non_white" => (Gender::Unknown, Race::NonWhite),
        _ => return None,
    })
}

fn axis_groups(gender: Gender, race: Race) -> Vec<&'static str> {
    let mut out = vec![if race == Race::White { WHITE } else { NON_WHITE }];
    match gender {
        Gender::Male => out.push(MALE),
        Gender::Female => out.push(FEMALE),
        Gender::Unknown => {}
    }
    out
}

impl PlantSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let spec: PlantSpec = jsonl::read_json(path)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.groups.is_empty() {
            return bad("spec has no groups".into());
        }
        let mut names = HashSet::new();
        for g in &self.groups {
            if group_labels(&g.name).is_none() {
                return bad(format!("unknown group name {:?}", g.name));
            }
            if !names.insert(g.name.as_str()) {
                return bad(format!("duplicate group {:?}", g.name));
            }
            if !(g.prior > 0.0 && g.prior.is_finite()) {
                return bad(format!("group {:?} prior must be positive", g.name));
            }
        }
        let total: f64 = self.groups.iter().map(|g| g.prior).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("group priors sum to {total}, expected 1"));
        }
        if !(0.0..=1.0).contains(&self.entity_fraction) {
            return bad("entity_fraction must lie in [0,1]".into());
        }
        if self.entity_fraction > 0.0 && (self.descriptors.is_empty() || self.descriptors_per_entity == 0) {
            return bad("entity sentences need at least one descriptor".into());
        }
        let keywords = KeywordSets::bundled();
        let mut lemmas = HashSet::new();
        for d in &self.descriptors {
            if d.lemma.is_empty() || d.lemma.chars().any(|c| !c.is_lowercase()) {
                return bad(format!("descriptor {:?} must be a lowercase word", d.lemma));
            }
            if keywords.male.contains(&d.lemma) || keywords.female.contains(&d.lemma) || keywords.non_white.contains(&d.lemma) {
                return bad(format!("descriptor {:?} is a group keyword", d.lemma));
            }
            if !lemmas.insert(d.lemma.as_str()) {
                return bad(format!("duplicate descriptor {:?}", d.lemma));
            }
            if !(d.weight > 0.0 && d.weight.is_finite()) {
                return bad(format!("descriptor {:?} weight must be positive", d.lemma));
            }
            for (g, &o) in &d.odds {
                if !names.contains(g.as_str()) {
                    return bad(format!("descriptor {:?} has odds for unknown group {g:?}", d.lemma));
                }
                if !(o > 0.0 && o.is_finite()) {
                    return bad(format!("descriptor {:?} odds for {g:?} must be positive", d.lemma));
                }
            }
        }
        if self.entity_fraction < 1.0 {
            if self.topics.is_empty() || self.topics.iter().any(|t| t.words.is_empty() || !(t.weight > 0.0)) {
                return bad("topic sentences need non-empty topics with positive weight".into());
            }
            for w in self.topics.iter().flat_map(|t| &t.words) {
                if w.is_empty() || w.chars().any(|c| c.is_whitespace() || c == '.') || crate::ingest::is_abbreviation(w) {
                    return bad(format!("topic word {w:?} would not survive sentence segmentation"));
                }
            }
            if self.topic_sentence_len == 0 {
                return bad("topic_sentence_len must be positive".into());
            }
        }
        if !(0.0..=1.0).contains(&self.ocr_noise.rate) {
            return bad("ocr_noise.rate must lie in [0,1]".into());
        }
        if self.sentences_per_doc == 0 {
            return bad("sentences_per_doc must be positive".into());
        }
        if self.years.0 > self.years.1 {
            return bad("years range is reversed".into());
        }
        Ok(())
    }

    fn odds(&self, d: &DescriptorSpec, group: &str) -> f64 {
        d.odds.get(group).copied().unwrap_or(1.0)
    }

    /// `P(descriptor | group)` under the sampling law.
    pub fn conditional(&self, group: &str) -> Result<Vec<f64>> {
        if !self.groups.iter().any(|g| g.name == group) {
            return Err(Error::invalid(format!("unknown group {group:?}")));
        }
        let raw: Vec<f64> = self.descriptors.iter().map(|d| d.weight * self.odds(d, group)).collect();
        let z: f64 = raw.iter().sum();
        Ok(raw.into_iter().map(|r| r / z).collect())
    }

    fn descriptor_index(&self, lemma: &str) -> Result<usize> {
        self.descriptors
            .iter()
            .position(|d| d.lemma == lemma)
            .ok_or_else(|| Error::invalid(format!("unknown descriptor {lemma:?}")))
    }
}

/// Analytic PMI under the generator's distribution.
///
/// For a spec group the universe is (spec group, occurrence):
/// `ln P(d|g) / Σ_g' prior(g') P(d|g')`. For an axis group (`male`,
/// `female`, `white`, `non_white`) not named in the plant spec, the universe is the
/// one the measured count table uses: each occurrence paired with its race
/// group and, when known, its gender group.
pub fn expected_pmi(spec: &PlantSpec, group: &str, descriptor: &str) -> Result<f64> {
    spec.validate()?;
    let d = spec.descriptor_index(descriptor)?;
    if spec.groups.iter().any(|g| g.name == group) {
        let mut p_d = 0.0;
        for g in &spec.groups {
            p_d += g.prior * spec.conditional(&g.name)?[d];
        }
        return Ok((spec.conditional(group)?[d] / p_d).ln());
    }
    let mut joint = 0.0; // mass of (group, d)
    let mut group_mass = 0.0;
    let mut desc_mass = 0.0;
    let mut total = 0.0;
    for g in &spec.groups {
        let (gender, race) = group_labels(&g.name).expect("validated");
        let axes = axis_groups(gender, race);
        let p = spec.conditional(&g.name)?[d];
        let k = axes.len() as f64;
        total += g.prior * k;
        desc_mass += g.prior * p * k;
        if axes.contains(&group) {
            joint += g.prior * p;
            group_mass += g.prior;
        }
    }
    if joint == 0.0 {
        return Err(Error::Degenerate(format!("group {group:?} has no mass in this spec")));
    }
    Ok((joint * total / (group_mass * desc_mass)).ln())
}

/// Expected plane coordinates (female − male, non-white − white) of a descriptor.
pub fn expected_plane(spec: &PlantSpec, descriptor: &str) -> Result<(f64, f64)> {
    let e = |g| expected_pmi(spec, g, descriptor);
    Ok((e(FEMALE)? - e(MALE)?, e(NON_WHITE)? - e(WHITE)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorExpectation {
    pub lemma: String,
    pub gender_axis: Option<f64>,
    pub race_axis: Option<f64>,
    pub pmi: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub descriptors: Vec<DescriptorExpectation>,
}

pub fn expectations(spec: &PlantSpec) -> Result<Expectations> {
    let mut out = Vec::new();
    for d in &spec.descriptors {
        let mut pmi = BTreeMap::new();
        let names = spec.groups.iter().map(|g| g.name.as_str()).chain([MALE, FEMALE, WHITE, NON_WHITE]);
        for g in names {
            if let Ok(v) = expected_pmi(spec, g, &d.lemma) {
                pmi.insert(g.to_string(), v);
            }
        }
        let plane = expected_plane(spec, &d.lemma).ok();
        out.push(DescriptorExpectation {
            lemma: d.lemma.clone(),
            gender_axis: plane.map(|p| p.0),
            race_axis: plane.map(|p| p.1),
            pmi,
        });
    }
    Ok(Expectations { descriptors: out })
}

const MALE_NOUNS: &[&str] = &["man", "gentleman", "boy", "husband", "father"];
const FEMALE_NOUNS: &[&str] = &["woman", "lady", "girl", "wife", "mother"];
const NEUTRAL_NOUNS: &[&str] = &["person", "servant", "passenger", "labourer"];
const RACE_MARKERS: &[&str] = &["negro", "mulatto", "creole", "colored"];
const DETERMINERS: &[&str] = &["a", "the"];
const PREDICATES: &[&[&str]] = &[
    &["arrived", "at", "the", "wharf"],
    &["was", "seen", "in", "town"],
    &["left", "the", "estate"],
    &["spoke", "at", "the", "meeting"],
    &["came", "from", "the", "country"],
    &["was", "taken", "up", "yesterday"],
];

/// Group and descriptor indices of one sampled entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledEntity {
    pub group: usize,
    pub descriptors: Vec<usize>,
}

/// Precomputed samplers for a validated spec.
pub struct Sampler<'a> {
    spec: &'a PlantSpec,
    groups: WeightedIndex<f64>,
    per_group: Vec<WeightedIndex<f64>>,
    topics: Option<WeightedIndex<f64>>,
}

impl<'a> Sampler<'a> {
    pub fn new(spec: &'a PlantSpec) -> Result<Self> {
        spec.validate()?;
        let wi = |w: Vec<f64>| WeightedIndex::new(w).map_err(|e| Error::Config(e.to_string()));
        let groups = wi(spec.groups.iter().map(|g| g.prior).collect())?;
        let per_group = if spec.descriptors.is_empty() {
            Vec::new()
        } else {
            spec.groups
                .iter()
                .map(|g| wi(spec.conditional(&g.name)?))
                .collect::<Result<_>>()?
        };
        let topics = if spec.topics.is_empty() {
            None
        } else {
            Some(wi(spec.topics.iter().map(|t| t.weight).collect())?)
        };
        Ok(Sampler {
            spec,
            groups,
            per_group,
            topics,
        })
    }

    pub fn sample_entity<R: Rng>(&self, rng: &mut R) -> SampledEntity {
        let group = self.groups.sample(rng);
        let descriptors = (0..self.spec.descriptors_per_entity)
            .map(|_| self.per_group[group].sample(rng))
            .collect();
        SampledEntity { group, descriptors }
    }
}

fn token(i: usize, text: &str, head: usize, dep: &str, pos: &str) -> Token {
    Token {
        i,
        text: text.to_string(),
        lemma: text.to_lowercase(),
        pos: pos.to_string(),
        head: head as i64,
        dep: dep.to_string(),
    }
}

struct Built {
    tokens: Vec<Token>,
    mention: Option<MentionSpan>,
}

fn entity_sentence<R: Rng>(spec: &PlantSpec, e: &SampledEntity, sentence: usize, rng: &mut R) -> Built {
    let (gender, race) = group_labels(&spec.groups[e.group].name).expect("validated");
    let det = DETERMINERS[rng.gen_range(0..DETERMINERS.len())];
    let noun = match gender {
        Gender::Male => MALE_NOUNS[rng.gen_range(0..MALE_NOUNS.len())],
        Gender::Female => FEMALE_NOUNS[rng.gen_range(0..FEMALE_NOUNS.len())],
        Gender::Unknown => NEUTRAL_NOUNS[rng.gen_range(0..NEUTRAL_NOUNS.len())],
    };
    let marker = (race == Race::NonWhite).then(|| RACE_MARKERS[rng.gen_range(0..RACE_MARKERS.len())]);
    let predicate = PREDICATES[rng.gen_range(0..PREDICATES.len())];

    let head = 1 + e.descriptors.len() + marker.is_some() as usize;
    let verb = head + 1;
    let mut tokens = vec![token(0, det, head, "det", "DET")];
    for &d in &e.descriptors {
        tokens.push(token(tokens.len(), &spec.descriptors[d].lemma, head, "amod", "ADJ"));
    }
    if let Some(m) = marker {
        tokens.push(token(tokens.len(), m, head, "compound", "NOUN"));
    }
    tokens.push(token(tokens.len(), noun, verb, "nsubj", "NOUN"));
    for (k, w) in predicate.iter().enumerate() {
        let (h, dep) = if k == 0 { (verb, "ROOT") } else { (verb, "dep") };
        tokens.push(token(tokens.len(), w, h, dep, if k == 0 { "VERB" } else { "X" }));
    }
    tokens.push(token(tokens.len(), ".", verb, "punct", "PUNCT"));
    Built {
        tokens,
        mention: Some(MentionSpan {
            sentence,
            start_token: 0,
            end_token: head + 1,
            head,
        }),
    }
}

fn topic_sentence<R: Rng>(spec: &PlantSpec, topics: &WeightedIndex<f64>, rng: &mut R) -> Built {
    let topic = &spec.topics[topics.sample(rng)];
    let mut tokens = Vec::with_capacity(spec.topic_sentence_len + 1);
    for k in 0..spec.topic_sentence_len {
        let mut w = topic.words[rng.gen_range(0..topic.words.len())].as_str();
        for s in &spec.ocr_noise.substitutions {
            if s.from == w && spec.ocr_noise.rate > 0.0 && rng.gen::<f64>() < spec.ocr_noise.rate {
                w = &s.to;
                break;
            }
        }
        tokens.push(token(k, w, k, "dep", "X"));
    }
    let last = tokens.len();
    tokens.push(token(last, ".", last, "punct", "PUNCT"));
    Built { tokens, mention: None }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub documents: Vec<RawDocument>,
    pub annotations: Vec<AnnotatedDocument>,
    pub gold: Vec<GoldLabel>,
    pub expectations: Expectations,
}

/// Generate `n_sentences` sentences grouped into documents.
pub fn generate(spec: &PlantSpec, n_sentences: usize) -> Result<SynthCorpus> {
    let sampler = Sampler::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut documents = Vec::new();
    let mut annotations = Vec::new();
    let mut gold = Vec::new();
    let n_docs = n_sentences.div_ceil(spec.sentences_per_doc);
    let width = n_docs.max(1).to_string().len().max(6);
    let mut produced = 0;
    for doc_no in 0..n_docs {
        let doc_id = format!("synth-{doc_no:0width$}");
        let year = rng.gen_range(spec.years.0..=spec.years.1);
        let mut sentences = Vec::new();
        let mut entities = Vec::new();
        let mut texts = Vec::new();
        let count = spec.sentences_per_doc.min(n_sentences - produced);
        for s in 0..count {
            let entity_turn = sampler.topics.is_none() || rng.gen::<f64>() < spec.entity_fraction;
            let built = if entity_turn {
                let e = sampler.sample_entity(&mut rng);
                let b = entity_sentence(spec, &e, s, &mut rng);
                let id = format!("e{}", entities.len());
                let (gender, race) = group_labels(&spec.groups[e.group].name).expect("validated");
                gold.push(GoldLabel {
                    doc_id: doc_id.clone(),
                    entity_id: id.clone(),
                    gender,
                    race,
                });
                entities.push(AnnotatedEntity {
                    id,
                    mentions: vec![b.mention.expect("entity sentence has a mention")],
                });
                b
            } else {
                topic_sentence(spec, sampler.topics.as_ref().expect("topics present"), &mut rng)
            };
            let words: Vec<&str> = built.tokens.iter().map(|t| t.text.as_str()).collect();
            let n = words.len();
            texts.push(format!("{}.", words[..n - 1].join(" ")));
            sentences.push(AnnotatedSentence {
                index: s,
                tokens: built.tokens,
            });
        }
        produced += count;
        documents.push(RawDocument {
            id: doc_id.clone(),
            source: "synth".into(),
            year,
            text: texts.join(" "),
        });
        annotations.push(AnnotatedDocument {
            doc_id,
            sentences,
            entities,
        });
    }
    Ok(SynthCorpus {
        documents,
        annotations,
        gold,
        expectations: expectations(spec)?,
    })
}

impl SynthCorpus {
    /// Writes `documents.jsonl`, `annotations.jsonl`, `gold_labels.jsonl` and `expectations.json`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        jsonl::write_jsonl(&dir.join("documents.jsonl"), &self.documents)?;
        jsonl::write_jsonl(&dir.join("annotations.jsonl"), &self.annotations)?;
        jsonl::write_jsonl(&dir.join("gold_labels.jsonl"), &self.gold)?;
        jsonl::write_json(&dir.join("expectations.json"), &self.expectations)
    }

    /// Word-tokenized sentences straight from the gold tokens, punctuation dropped.
    pub fn token_corpus(&self) -> Vec<Vec<String>> {
        self.annotations
            .iter()
            .flat_map(|d| d.sentences.iter())
            .map(|s| {
                s.tokens
                    .iter()
                    .filter(|t| t.pos != "PUNCT")
                    .map(|t| t.text.to_lowercase())
                    .collect()
            })
            .collect()
    }
}

/// Four intersectional groups with equal priors and one descriptor pair
/// skewed `odds`:1 toward men (`favoured`) and women (`complement`).
pub fn gender_skew_spec(favoured: &str, complement: &str, odds: f64, seed: u64) -> PlantSpec {
    let groups: Vec<GroupSpec> = ["white_male", "white_female", "non_white_male", "non_white_female"]
        .iter()
        .map(|n| GroupSpec {
            name: n.to_string(),
            prior: 0.25,
        })
        .collect();
    let skew = |male: f64, female: f64| -> BTreeMap<String, f64> {
        groups
            .iter()
            .map(|g| (g.name.clone(), if g.name.ends_with("_male") { male } else { female }))
            .collect()
    };
    PlantSpec {
        groups: groups.clone(),
        descriptors: vec![
            DescriptorSpec {
                lemma: favoured.to_string(),
                weight: 1.0,
                odds: skew(odds, 1.0),
            },
            DescriptorSpec {
                lemma: complement.to_string(),
                weight: 1.0,
                odds: skew(1.0, odds),
            },
        ],
        entity_fraction: 1.0,
        seed,
        ..PlantSpec::default()
    }
}
