//! Word Embedding Association Test: association scores, effect size and
//! permutation significance.
//!
//! Sign convention: a positive statistic or effect size means the X targets
//! sit closer to the A attributes than the Y targets do.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{cosine, EmbeddingModel};
use crate::error::{Error, Result};
use crate::scalar::{mean, population_std, Scalar};

pub const DEFAULT_N_PERM: usize = 10_000;
pub const DEFAULT_MAX_DROP: f64 = 0.5;
pub const MIN_PERMUTATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSet {
    pub name: String,
    pub words: Vec<String>,
}

impl WordSet {
    /// Lowercases and removes duplicates, keeping first occurrences.
    pub fn new(name: impl Into<String>, words: impl IntoIterator<Item = impl AsRef<str>>) -> Result<Self> {
        let name = name.into();
        let mut seen = HashSet::new();
        let words: Vec<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty() && seen.insert(w.clone()))
            .collect();
        if words.is_empty() {
            return Err(Error::invalid(format!("word set {name:?} is empty")));
        }
        Ok(WordSet { name, words })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw: WordSet = crate::jsonl::read_json(path)?;
        WordSet::new(raw.name, raw.words)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn bundled_set_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "african_countries" => include_str!("../data/weat/african_countries.json"),
        "appearance" => include_str!("../data/weat/appearance.json"),
        "career" => include_str!("../data/weat/career.json"),
        "caribbean_countries" => include_str!("../data/weat/caribbean_countries.json"),
        "crime" => include_str!("../data/weat/crime.json"),
        "european_countries" => include_str!("../data/weat/european_countries.json"),
        "family" => include_str!("../data/weat/family.json"),
        "female" => include_str!("../data/weat/female.json"),
        "intelligence" => include_str!("../data/weat/intelligence.json"),
        "lawfulness" => include_str!("../data/weat/lawfulness.json"),
        "male" => include_str!("../data/weat/male.json"),
        "manual_labour" => include_str!("../data/weat/manual_labour.json"),
        "mental_illness" => include_str!("../data/weat/mental_illness.json"),
        "non_manual_labour" => include_str!("../data/weat/non_manual_labour.json"),
        "physical_illness" => include_str!("../data/weat/physical_illness.json"),
        "strong" => include_str!("../data/weat/strong.json"),
        "weak" => include_str!("../data/weat/weak.json"),
        _ => return None,
    })
}

/// One of the shipped attribute/target sets by name.
pub fn bundled_set(name: &str) -> Result<WordSet> {
    let text = bundled_set_text(name).ok_or_else(|| Error::Config(format!("no bundled word set {name:?}")))?;
    let raw: WordSet = serde_json::from_str(text)?;
    WordSet::new(raw.name, raw.words)
}

/// Names of the four sets in one test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSpec {
    pub x: String,
    pub y: String,
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFile {
    pub tests: Vec<TestSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeatTest {
    pub x: WordSet,
    pub y: WordSet,
    pub a: WordSet,
    pub b: WordSet,
}

impl WeatTest {
    pub fn attr_pair(&self) -> String {
        format!("{}/{}", self.a.name, self.b.name)
    }

    pub fn target_pair(&self) -> String {
        format!("{}/{}", self.x.name, self.y.name)
    }
}

/// Resolve test specs against `<dir>/<name>.json`, or against the bundled sets when `dir` is `None`.
pub fn resolve_tests(specs: &[TestSpec], dir: Option<&Path>) -> Result<Vec<WeatTest>> {
    let mut cache: BTreeMap<String, WordSet> = BTreeMap::new();
    let mut get = |name: &str| -> Result<WordSet> {
        if let Some(s) = cache.get(name) {
            return Ok(s.clone());
        }
        let set = match dir {
            Some(d) => WordSet::load(&d.join(format!("{name}.json")))?,
            None => bundled_set(name)?,
        };
        cache.insert(name.to_string(), set.clone());
        Ok(set)
    };
    specs
        .iter()
        .map(|s| {
            Ok(WeatTest {
                x: get(&s.x)?,
                y: get(&s.y)?,
                a: get(&s.a)?,
                b: get(&s.b)?,
            })
        })
        .collect()
}

/// Load a tests file; set files are looked up next to it.
pub fn load_tests(path: &Path) -> Result<Vec<WeatTest>> {
    let file: TestFile = crate::jsonl::read_json(path)?;
    let dir: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    resolve_tests(&file.tests, Some(&dir))
}

/// The bundled six concept pairs crossed with three attribute pairs.
pub fn bundled_tests() -> Result<Vec<WeatTest>> {
    let file: TestFile = serde_json::from_str(include_str!("../data/weat/tests.json"))?;
    resolve_tests(&file.tests, None)
}

fn vectors<'m, T: Scalar>(m: &'m EmbeddingModel<T>, set: &WordSet) -> (Vec<&'m [T]>, Vec<String>) {
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for w in &set.words {
        match m.vector(w) {
            Some(v) => found.push(v),
            None => missing.push(w.clone()),
        }
    }
    (found, missing)
}

fn s_of<T: Scalar>(w: &[T], a: &[&[T]], b: &[&[T]]) -> Result<T> {
    let ma = mean(a.iter().map(|v| cosine(w, v)).collect::<Result<Vec<_>>>()?).expect("non-empty");
    let mb = mean(b.iter().map(|v| cosine(w, v)).collect::<Result<Vec<_>>>()?).expect("non-empty");
    Ok(ma - mb)
}

fn require<'m, T: Scalar>(m: &'m EmbeddingModel<T>, set: &WordSet) -> Result<Vec<&'m [T]>> {
    let (found, missing) = vectors(m, set);
    if found.is_empty() {
        return Err(Error::Lookup(format!("no word of set {:?} is in the model: {}", set.name, missing.join(", "))));
    }
    Ok(found)
}

/// Mean cosine of `w` to A minus mean cosine to B, over representable attribute words.
pub fn assoc_s<T: Scalar>(w: &str, a: &WordSet, b: &WordSet, m: &EmbeddingModel<T>) -> Result<T> {
    let v = m.vector(w).ok_or_else(|| Error::Lookup(w.to_string()))?;
    s_of(v, &require(m, a)?, &require(m, b)?)
}

fn all_s<T: Scalar>(set: &WordSet, a: &[&[T]], b: &[&[T]], m: &EmbeddingModel<T>) -> Result<Vec<T>> {
    set.words
        .iter()
        .map(|w| {
            let v = m.vector(w).ok_or_else(|| Error::Lookup(w.clone()))?;
            s_of(v, a, b)
        })
        .collect()
}

/// Per-word association scores for X and Y. Every target word must be representable.
pub fn target_scores<T: Scalar>(
    x: &WordSet,
    y: &WordSet,
    a: &WordSet,
    b: &WordSet,
    m: &EmbeddingModel<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let (va, vb) = (require(m, a)?, require(m, b)?);
    Ok((all_s(x, &va, &vb, m)?, all_s(y, &va, &vb, m)?))
}

/// Sum of s over X minus sum of s over Y.
pub fn weat_statistic<T: Scalar>(x: &WordSet, y: &WordSet, a: &WordSet, b: &WordSet, m: &EmbeddingModel<T>) -> Result<T> {
    let (sx, sy) = target_scores(x, y, a, b, m)?;
    Ok(statistic_from_scores(&sx, &sy))
}

pub fn statistic_from_scores<T: Scalar>(sx: &[T], sy: &[T]) -> T {
    sx.iter().copied().sum::<T>() - sy.iter().copied().sum::<T>()
}

/// Difference of mean scores over the population standard deviation of all scores.
pub fn effect_size_from_scores<T: Scalar>(sx: &[T], sy: &[T]) -> Result<T> {
    let (Some(mx), Some(my)) = (mean(sx.iter().copied()), mean(sy.iter().copied())) else {
        return Err(Error::invalid("effect size needs non-empty target sets"));
    };
    let pooled: Vec<T> = sx.iter().chain(sy).copied().collect();
    let sd = population_std(&pooled).expect("non-empty");
    if sd <= T::zero() {
        return Err(Error::Degenerate("degenerate target geometry: zero variance of association scores".into()));
    }
    Ok((mx - my) / sd)
}

pub fn effect_size<T: Scalar>(x: &WordSet, y: &WordSet, a: &WordSet, b: &WordSet, m: &EmbeddingModel<T>) -> Result<T> {
    let (sx, sy) = target_scores(x, y, a, b, m)?;
    effect_size_from_scores(&sx, &sy)
}

fn tie_tolerance(observed: f64) -> f64 {
    1e-12 * observed.abs().max(1.0)
}

fn check_perm_sizes(nx: usize, ny: usize) -> Result<()> {
    if nx == 0 || ny == 0 || nx + ny < 4 {
        return Err(Error::invalid(format!(
            "permutation test needs at least 4 target words, got {}",
            nx + ny
        )));
    }
    Ok(())
}

/// Monte-Carlo one-sided p-value: `(1 + #{perm ≥ observed}) / (n_perm + 1)`,
/// where permutations re-split the pooled scores into sets of the original sizes.
pub fn permutation_pvalue_from_scores<T: Scalar>(sx: &[T], sy: &[T], n_perm: usize, seed: u64) -> Result<f64> {
    check_perm_sizes(sx.len(), sy.len())?;
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::invalid(format!("n_perm must be at least {MIN_PERMUTATIONS}")));
    }
    let mut pooled: Vec<f64> = sx.iter().chain(sy).map(|v| v.to_f64_lossy()).collect();
    let total: f64 = pooled.iter().sum();
    let observed = statistic_from_scores(sx, sy).to_f64_lossy();
    let tol = tie_tolerance(observed);
    let nx = sx.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_perm {
        pooled.shuffle(&mut rng);
        let sum_x: f64 = pooled[..nx].iter().sum();
        if 2.0 * sum_x - total >= observed - tol {
            hits += 1;
        }
    }
    Ok((1 + hits) as f64 / (n_perm + 1) as f64)
}

/// Exact one-sided p-value over every split of the pooled targets into sets of the original sizes.
pub fn exact_pvalue_from_scores<T: Scalar>(sx: &[T], sy: &[T]) -> Result<f64> {
    check_perm_sizes(sx.len(), sy.len())?;
    let pooled: Vec<f64> = sx.iter().chain(sy).map(|v| v.to_f64_lossy()).collect();
    let n = pooled.len();
    if n > 30 {
        return Err(Error::invalid("exact enumeration is limited to 30 target words"));
    }
    let total: f64 = pooled.iter().sum();
    let observed = statistic_from_scores(sx, sy).to_f64_lossy();
    let tol = tie_tolerance(observed);
    let mut idx: Vec<usize> = (0..sx.len()).collect();
    let (mut hits, mut all) = (0u64, 0u64);
    loop {
        let sum_x: f64 = idx.iter().map(|&i| pooled[i]).sum();
        all += 1;
        if 2.0 * sum_x - total >= observed - tol {
            hits += 1;
        }
        // next combination in lexicographic order
        let k = idx.len();
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else { break };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(hits as f64 / all as f64)
}

pub fn permutation_pvalue<T: Scalar>(
    x: &WordSet,
    y: &WordSet,
    a: &WordSet,
    b: &WordSet,
    m: &EmbeddingModel<T>,
    n_perm: usize,
    seed: u64,
) -> Result<f64> {
    let (sx, sy) = target_scores(x, y, a, b, m)?;
    permutation_pvalue_from_scores(&sx, &sy, n_perm, seed)
}

/// Words dropped from each set because the model cannot represent them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Dropped {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub x: Vec<String>,
    pub y: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeatResult<T> {
    pub attributes: (String, String),
    pub targets: (String, String),
    pub s_statistic: T,
    pub effect_size_d: T,
    pub p_value: f64,
    pub dropped_words: Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatOptions {
    pub n_perm: usize,
    pub seed: u64,
    /// A set losing more than this fraction of its words fails the test.
    pub max_drop_fraction: f64,
    /// Use exact enumeration when it needs no more evaluations than `n_perm`.
    pub exact_when_feasible: bool,
}

impl Default for WeatOptions {
    fn default() -> Self {
        WeatOptions {
            n_perm: DEFAULT_N_PERM,
            seed: 7,
            max_drop_fraction: DEFAULT_MAX_DROP,
            exact_when_feasible: true,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn keep_representable<T: Scalar>(m: &EmbeddingModel<T>, set: &WordSet, max_drop: f64) -> Result<(WordSet, Vec<String>)> {
    let (found, missing): (Vec<&String>, Vec<&String>) = set.words.iter().partition(|w| m.contains(w));
    if found.is_empty() || missing.len() as f64 > max_drop * set.len() as f64 {
        return Err(Error::Lookup(format!(
            "set {:?} lost {} of {} words: {}",
            set.name,
            missing.len(),
            set.len(),
            missing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        )));
    }
    Ok((
        WordSet {
            name: set.name.clone(),
            words: found.into_iter().cloned().collect(),
        },
        missing.into_iter().cloned().collect(),
    ))
}

/// Full test with the drop-and-report policy for unrepresentable words.
pub fn run_test<T: Scalar>(test: &WeatTest, m: &EmbeddingModel<T>, opts: &WeatOptions) -> Result<WeatResult<T>> {
    let (a, da) = keep_representable(m, &test.a, opts.max_drop_fraction)?;
    let (b, db) = keep_representable(m, &test.b, opts.max_drop_fraction)?;
    let (x, dx) = keep_representable(m, &test.x, opts.max_drop_fraction)?;
    let (y, dy) = keep_representable(m, &test.y, opts.max_drop_fraction)?;
    let (sx, sy) = target_scores(&x, &y, &a, &b, m)?;
    let n = sx.len() + sy.len();
    let p_value = if opts.exact_when_feasible && n <= 30 && binomial(n, sx.len()) <= opts.n_perm as f64 {
        exact_pvalue_from_scores(&sx, &sy)?
    } else {
        permutation_pvalue_from_scores(&sx, &sy, opts.n_perm, opts.seed)?
    };
    Ok(WeatResult {
        attributes: (test.a.name.clone(), test.b.name.clone()),
        targets: (test.x.name.clone(), test.y.name.clone()),
        s_statistic: statistic_from_scores(&sx, &sy),
        effect_size_d: effect_size_from_scores(&sx, &sy)?,
        p_value,
        dropped_words: Dropped {
            a: da,
            b: db,
            x: dx,
            y: dy,
        },
    })
}

/// One cell of a temporal table; failed cells carry the error message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalRow<T> {
    pub period: String,
    pub attr_pair: String,
    pub target_pair: String,
    pub outcome: std::result::Result<WeatResult<T>, String>,
}

/// Every test against every period model; per-cell failures do not stop the run.
pub fn weat_temporal<T: Scalar>(
    period_models: &BTreeMap<String, Option<EmbeddingModel<T>>>,
    tests: &[WeatTest],
    opts: &WeatOptions,
) -> Vec<TemporalRow<T>> {
    let cells: Vec<(&String, &Option<EmbeddingModel<T>>, &WeatTest)> = period_models
        .iter()
        .flat_map(|(p, m)| tests.iter().map(move |t| (p, m, t)))
        .collect();
    cells
        .par_iter()
        .map(|(period, model, test)| TemporalRow {
            period: period.to_string(),
            attr_pair: test.attr_pair(),
            target_pair: test.target_pair(),
            outcome: match model {
                Some(m) => run_test(test, m, opts).map_err(|e| e.to_string()),
                None => Err("no model for period".to_string()),
            },
        })
        .collect()
}

pub const CSV_HEADER: [&str; 10] = [
    "period",
    "attr_pair",
    "target_pair",
    "s",
    "d",
    "p",
    "dropped_A",
    "dropped_B",
    "dropped_X",
    "dropped_Y",
];

/// Rows in the order given. Failed cells have empty numeric fields and the error in `dropped_A`.
pub fn write_csv<T: Scalar, W: std::io::Write>(rows: &[TemporalRow<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let record = match &r.outcome {
            Ok(res) => [
                r.period.clone(),
                r.attr_pair.clone(),
                r.target_pair.clone(),
                res.s_statistic.to_string(),
                res.effect_size_d.to_string(),
                res.p_value.to_string(),
                res.dropped_words.a.join(";"),
                res.dropped_words.b.join(";"),
                res.dropped_words.x.join(";"),
                res.dropped_words.y.join(";"),
            ],
            Err(e) => [
                r.period.clone(),
                r.attr_pair.clone(),
                r.target_pair.clone(),
                String::new(),
                String::new(),
                String::new(),
                format!("failed: {e}"),
                String::new(),
                String::new(),
                String::new(),
            ],
        };
        w.write_record(record)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
