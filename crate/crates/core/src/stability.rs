//! Retraining stability (neighbour-set Jaccard) and misspelling recovery.

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{build_vocab, train_sgns, EmbeddingModel, TrainConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tokenize::{bpe_corpus, strip_marker, BpeModel, TokenizerKind, DEFAULT_VOCAB_SIZE, END_OF_WORD};

pub const DEFAULT_JACCARD_K: usize = 20;
pub const DEFAULT_MISSPELL_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisspellPair {
    pub misspelt: String,
    pub correct: String,
}

impl MisspellPair {
    pub fn new(misspelt: &str, correct: &str) -> Result<Self> {
        let (m, c) = (misspelt.trim().to_lowercase(), correct.trim().to_lowercase());
        if m.is_empty() || c.is_empty() || m == c {
            return Err(Error::invalid(format!("bad misspelling pair {misspelt:?} / {correct:?}")));
        }
        Ok(MisspellPair {
            misspelt: m,
            correct: c,
        })
    }
}

/// Parse `misspelt<TAB>correct` lines; `#` starts a comment line.
pub fn parse_pairs(text: &str) -> Result<Vec<MisspellPair>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let pair = match (cols.next(), cols.next(), cols.next()) {
            (Some(m), Some(c), None) => MisspellPair::new(m, c),
            _ => Err(Error::invalid("expected two tab-separated columns")),
        };
        out.push(pair.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn load_pairs(path: &Path) -> Result<Vec<MisspellPair>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pairs(&text)
}

/// The bundled misspelt/correct pair list.
pub fn bundled_pairs() -> Vec<MisspellPair> {
    parse_pairs(include_str!("../data/misspellings.tsv")).expect("bundled misspellings parse")
}

fn neighbor_set<T: Scalar>(m: &EmbeddingModel<T>, word: &str, k: usize) -> Result<HashSet<String>> {
    Ok(m.nearest_neighbors(word, k)?.into_iter().map(|(t, _)| t).collect())
}

fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Mean Jaccard similarity of top-`k` neighbour sets over all unordered model
/// pairs and every word present in all models.
pub fn jaccard_neighbors<T: Scalar>(models: &[EmbeddingModel<T>], k: usize) -> Result<f64> {
    if models.len() < 2 {
        return Err(Error::invalid("jaccard stability needs at least two models"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut shared: Vec<&str> = models[0]
        .vocab()
        .tokens()
        .iter()
        .map(String::as_str)
        .filter(|w| models[1..].iter().all(|m| m.contains(w)))
        .collect();
    if shared.is_empty() {
        return Err(Error::Degenerate("models share no vocabulary".into()));
    }
    shared.sort_unstable();
    let per_word: Vec<f64> = shared
        .par_iter()
        .map(|w| {
            let sets = models.iter().map(|m| neighbor_set(m, w, k)).collect::<Result<Vec<_>>>()?;
            let mut sum = 0.0;
            let mut n = 0usize;
            for i in 0..sets.len() {
                for j in i + 1..sets.len() {
                    sum += jaccard(&sets[i], &sets[j]);
                    n += 1;
                }
            }
            Ok(sum / n as f64)
        })
        .collect::<Result<_>>()?;
    Ok(per_word.iter().sum::<f64>() / per_word.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recovery {
    /// Share of representable pairs whose correct word is among the misspelt word's top-k, in percent.
    pub pct_top_k: f64,
    /// Share of all pairs whose misspelt word is representable, in percent.
    pub pct_in_vocab: f64,
    /// Same as `pct_top_k` with the query direction reversed.
    pub pct_reverse_top_k: f64,
    pub representable: usize,
    pub total: usize,
}

pub fn misspelling_recovery<T: Scalar>(m: &EmbeddingModel<T>, pairs: &[MisspellPair], k: usize) -> Result<Recovery> {
    if pairs.is_empty() {
        return Err(Error::invalid("no misspelling pairs given"));
    }
    let mut hits = 0usize;
    let mut representable = 0usize;
    let mut reverse_hits = 0usize;
    let mut reverse_total = 0usize;
    for p in pairs {
        if m.contains(&p.misspelt) {
            representable += 1;
            if m.nearest_neighbors(&p.misspelt, k)?.iter().any(|(t, _)| *t == p.correct) {
                hits += 1;
            }
        }
        if m.contains(&p.correct) && m.contains(&p.misspelt) {
            reverse_total += 1;
            if m.nearest_neighbors(&p.correct, k)?.iter().any(|(t, _)| *t == p.misspelt) {
                reverse_hits += 1;
            }
        }
    }
    let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
    Ok(Recovery {
        pct_top_k: pct(hits, representable),
        pct_in_vocab: pct(representable, pairs.len()),
        pct_reverse_top_k: pct(reverse_hits, reverse_total),
        representable,
        total: pairs.len(),
    })
}

/// Cartesian training grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub tokenizers: Vec<TokenizerKind>,
    pub dims: Vec<usize>,
    pub min_counts: Vec<u64>,
    pub bpe_vocab_size: usize,
    /// Remaining hyperparameters; `dim`, `min_count` and `seed` are overridden per cell.
    pub train: TrainConfig,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            tokenizers: vec![TokenizerKind::Word, TokenizerKind::Bpe],
            dims: vec![100, 300],
            min_counts: vec![20, 100],
            bpe_vocab_size: DEFAULT_VOCAB_SIZE,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridCell {
    pub tokenizer: TokenizerKind,
    pub dim: usize,
    pub min_count: u64,
}

impl GridSpec {
    pub fn load(path: &Path) -> Result<Self> {
        crate::jsonl::read_json(path)
    }

    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &tokenizer in &self.tokenizers {
            for &dim in &self.dims {
                for &min_count in &self.min_counts {
                    out.push(GridCell {
                        tokenizer,
                        dim,
                        min_count,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDetail {
    pub seed: u64,
    pub vocab_size: usize,
    pub recovery: Recovery,
}

/// Metrics computed on whole-word symbols of a subword model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WholeWordMetrics {
    pub mean_jaccard: f64,
    pub pct_correct_in_top_k: f64,
    pub pct_misspelling_in_vocab: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport<T> {
    pub cell: GridCell,
    pub runs: usize,
    pub k: usize,
    pub mean_jaccard: T,
    pub pct_correct_in_top5: T,
    pub pct_misspelling_in_vocab: T,
    pub pct_reverse_in_top5: T,
    pub whole_word: Option<WholeWordMetrics>,
    pub per_run: Vec<RunDetail>,
}

/// Rows of `m` whose symbol is a complete word (`word</w>`), renamed to the bare word.
pub fn whole_word_view<T: Scalar>(m: &EmbeddingModel<T>) -> Result<EmbeddingModel<T>> {
    let mut entries = Vec::new();
    let mut matrix = Vec::new();
    for (i, sym) in m.vocab().tokens().iter().enumerate() {
        if sym.ends_with(END_OF_WORD) {
            entries.push((strip_marker(sym).to_string(), m.vocab().count(i)));
            matrix.extend_from_slice(m.row(i));
        }
    }
    if entries.is_empty() {
        return Err(Error::Degenerate("subword model has no whole-word symbols".into()));
    }
    EmbeddingModel::new(crate::embed::Vocab::from_ordered(entries)?, matrix, m.dim(), m.min_count(), m.seed())
}

struct Prepared {
    bpe: Option<BpeModel>,
    bpe_corpus: Vec<Vec<String>>,
}

/// Train `runs` models per grid cell (seeds `base_seed + run`) and report
/// stability and misspelling recovery for each cell.
///
/// Subword models are evaluated at word level through the mean-of-subwords
/// view over words kept at the cell's `min_count`; whole-word symbol metrics
/// are reported alongside.
pub fn run_grid<T: Scalar>(
    corpus: &[Vec<String>],
    grid: &GridSpec,
    runs: usize,
    k: usize,
    pairs: &[MisspellPair],
    base_seed: u64,
) -> Result<Vec<StabilityReport<T>>> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::Config("stability grid is empty".into()));
    }
    if runs < 2 {
        return Err(Error::Config("jaccard stability needs at least two runs".into()));
    }
    let prepared = if grid.tokenizers.contains(&TokenizerKind::Bpe) {
        let bpe = BpeModel::train(corpus.iter().flatten(), grid.bpe_vocab_size)?;
        let encoded = bpe_corpus(corpus, &bpe);
        Prepared {
            bpe: Some(bpe),
            bpe_corpus: encoded,
        }
    } else {
        Prepared {
            bpe: None,
            bpe_corpus: Vec::new(),
        }
    };

    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..runs as u64).map(move |r| (c, base_seed + r)))
        .collect();
    let trained: Vec<EmbeddingModel<T>> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let cell = cells[c];
            let cfg = TrainConfig {
                dim: cell.dim,
                min_count: cell.min_count,
                seed,
                ..grid.train.clone()
            };
            match cell.tokenizer {
                TokenizerKind::Word => train_sgns(corpus, &cfg),
                TokenizerKind::Bpe => train_sgns(&prepared.bpe_corpus, &cfg),
            }
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let models = &trained[c * runs..(c + 1) * runs];
        let (views, whole_word) = match (cell.tokenizer, &prepared.bpe) {
            (TokenizerKind::Bpe, Some(bpe)) => {
                let words = build_vocab(corpus, cell.min_count)?;
                let entries: Vec<(&str, u64)> = words
                    .tokens()
                    .iter()
                    .map(String::as_str)
                    .zip(words.counts().iter().copied())
                    .collect();
                let views = models
                    .iter()
                    .map(|m| m.word_view(bpe, entries.iter().copied()))
                    .collect::<Result<Vec<_>>>()?;
                let whole = models.iter().map(whole_word_view).collect::<Result<Vec<_>>>()?;
                let mut top = 0.0;
                let mut inv = 0.0;
                for m in &whole {
                    let r = misspelling_recovery(m, pairs, DEFAULT_MISSPELL_K)?;
                    top += r.pct_top_k;
                    inv += r.pct_in_vocab;
                }
                let ww = WholeWordMetrics {
                    mean_jaccard: jaccard_neighbors(&whole, k)?,
                    pct_correct_in_top_k: top / runs as f64,
                    pct_misspelling_in_vocab: inv / runs as f64,
                };
                (views, Some(ww))
            }
            _ => (models.to_vec(), None),
        };
        let mean_jaccard = jaccard_neighbors(&views, k)?;
        let per_run = views
            .iter()
            .zip(models)
            .map(|(v, m)| {
                Ok(RunDetail {
                    seed: m.seed(),
                    vocab_size: m.len(),
                    recovery: misspelling_recovery(v, pairs, DEFAULT_MISSPELL_K)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let avg = |f: fn(&Recovery) -> f64| T::of(per_run.iter().map(|r| f(&r.recovery)).sum::<f64>() / runs as f64);
        reports.push(StabilityReport {
            cell: *cell,
            runs,
            k,
            mean_jaccard: T::of(mean_jaccard),
            pct_correct_in_top5: avg(|r| r.pct_top_k),
            pct_misspelling_in_vocab: avg(|r| r.pct_in_vocab),
            pct_reverse_in_top5: avg(|r| r.pct_reverse_top_k),
            whole_word,
            per_run,
        });
    }
    Ok(reports)
}

/// One CSV row per report.
pub fn write_reports_csv<T: Scalar, W: std::io::Write>(reports: &[StabilityReport<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "tokenizer",
        "dim",
        "min_count",
        "runs",
        "topk",
        "mean_jaccard",
        "pct_correct_in_top5",
        "pct_misspelling_in_vocab",
        "pct_reverse_in_top5",
        "whole_word_mean_jaccard",
        "whole_word_pct_correct_in_top5",
        "whole_word_pct_misspelling_in_vocab",
    ])?;
    for r in reports {
        let ww = |f: fn(&WholeWordMetrics) -> f64| r.whole_word.as_ref().map(|m| f(m).to_string()).unwrap_or_default();
        w.write_record([
            r.cell.tokenizer.to_string(),
            r.cell.dim.to_string(),
            r.cell.min_count.to_string(),
            r.runs.to_string(),
            r.k.to_string(),
            r.mean_jaccard.to_string(),
            r.pct_correct_in_top5.to_string(),
            r.pct_misspelling_in_vocab.to_string(),
            r.pct_reverse_in_top5.to_string(),
            ww(|m| m.mean_jaccard),
            ww(|m| m.pct_correct_in_top_k),
            ww(|m| m.pct_misspelling_in_vocab),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::Vocab;

    fn model(rows: &[(&str, [f64; 2])]) -> EmbeddingModel<f64> {
        let vocab = Vocab::from_ordered(rows.iter().map(|(t, _)| (t.to_string(), 1)).collect()).unwrap();
        EmbeddingModel::new(vocab, rows.iter().flat_map(|(_, v)| *v).collect(), 2, 1, 0).unwrap()
    }

    #[test]
    fn pair_parsing() {
        let p = parse_pairs("# header\nHoufe\thouse\n\nmajetty\tmajesty\n").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].misspelt, "houfe");
        assert!(matches!(parse_pairs("same\tsame\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_pairs("one column\n").is_err());
        assert!(bundled_pairs().len() >= 100);
    }

    #[test]
    fn identical_models_have_unit_jaccard() {
        let m = model(&[("a", [1.0, 0.0]), ("b", [0.9, 0.1]), ("c", [0.0, 1.0]), ("d", [-1.0, 0.2])]);
        assert_eq!(jaccard_neighbors(&[m.clone(), m.clone()], 2).unwrap(), 1.0);
        assert!(jaccard_neighbors(&[m.clone()], 2).is_err());
    }

    #[test]
    fn recovery_counts_unrepresentable() {
        let m = model(&[("houfe", [1.0, 0.0]), ("house", [1.0, 0.0]), ("x", [0.0, 1.0])]);
        let pairs = vec![MisspellPair::new("houfe", "house").unwrap(), MisspellPair::new("majetty", "majesty").unwrap()];
        let r = misspelling_recovery(&m, &pairs, 1).unwrap();
        assert_eq!(r.pct_top_k, 100.0);
        assert_eq!(r.pct_in_vocab, 50.0);
        assert_eq!(r.pct_reverse_top_k, 100.0);
    }

    #[test]
    fn grid_needs_two_runs() {
        let corpus = vec![vec!["a".to_string(); 10]];
        assert!(run_grid::<f64>(&corpus, &GridSpec::default(), 1, 20, &bundled_pairs(), 1).is_err());
        assert_eq!(GridSpec::default().cells().len(), 8);
    }
}
