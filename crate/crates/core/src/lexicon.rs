//! Lexicon-weighted association of descriptor lists with valence, arousal
//! and dominance.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Valence,
    Arousal,
    Dominance,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Valence, Dimension::Arousal, Dimension::Dominance];

    pub fn file_name(self) -> String {
        format!("{self}.tsv")
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Valence => "valence",
            Dimension::Arousal => "arousal",
            Dimension::Dominance => "dominance",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueLexicon {
    pub dimension: Dimension,
    pub entries: HashMap<String, f64>,
}

impl ValueLexicon {
    /// Parse `word<TAB>value` lines; `#` lines are comments.
    pub fn parse(dimension: Dimension, text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let parse_err = |m: String| Error::Parse { line: i + 1, message: m };
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, value) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(format!("expected word<TAB>value, got {line:?}")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad value {value:?}")))?;
            if !(0.0..=1.0).contains(&value) {
                return Err(parse_err(format!("value {value} outside [0,1]")));
            }
            entries.insert(word.trim().to_lowercase(), value);
        }
        Ok(ValueLexicon { dimension, entries })
    }

    pub fn load(dimension: Dimension, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(dimension, &text)
    }

    /// `valence.tsv`, `arousal.tsv` and `dominance.tsv` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Vec<Self>> {
        Dimension::ALL.iter().map(|&d| Self::load(d, &dir.join(d.file_name()))).collect()
    }

    /// The shipped sample lexicon.
    pub fn bundled() -> Vec<Self> {
        [
            (Dimension::Valence, include_str!("../data/lexicon/valence.tsv")),
            (Dimension::Arousal, include_str!("../data/lexicon/arousal.tsv")),
            (Dimension::Dominance, include_str!("../data/lexicon/dominance.tsv")),
        ]
        .into_iter()
        .map(|(d, t)| Self::parse(d, t).expect("bundled lexicon parses"))
        .collect()
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Association<T> {
    pub value: T,
    /// Matched descriptor occurrences over all descriptor occurrences.
    pub coverage: f64,
    pub matched: usize,
    pub total: usize,
}

/// Occurrence-weighted mean lexicon value over descriptors found in the lexicon.
///
/// Computed as `Σ value(w)·count(w) / Σ count(w)` over distinct words in
/// lexicographic order, so the result does not depend on descriptor order.
pub fn association<T: Scalar, S: AsRef<str>>(lex: &ValueLexicon, group: &str, descriptors: &[S]) -> Result<Association<T>> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in descriptors {
        *counts.entry(d.as_ref()).or_insert(0) += 1;
    }
    let mut sum = T::zero();
    let mut matched = 0usize;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (w, c) in counts {
        if let Some(v) = lex.get(w) {
            sum += T::of(v) * T::of(c as f64);
            matched += c;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if matched == 0 {
        return Err(Error::Degenerate(format!(
            "no descriptor of group {group:?} is in the {} lexicon",
            lex.dimension
        )));
    }
    // rounding can step outside the matched range, the exact mean cannot
    let value = (sum / T::of(matched as f64)).max(T::of(lo)).min(T::of(hi));
    Ok(Association {
        value,
        coverage: matched as f64 / descriptors.len() as f64,
        matched,
        total: descriptors.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow<T> {
    pub group: String,
    pub dimension: Dimension,
    pub period: Option<String>,
    pub outcome: std::result::Result<Association<T>, String>,
}

/// One cell per (group, dimension); failing cells are kept with their error.
pub fn association_grid<T: Scalar>(
    groups: &BTreeMap<String, Vec<String>>,
    lexica: &[ValueLexicon],
    period: Option<&str>,
) -> Vec<GridRow<T>> {
    let mut out = Vec::new();
    for (g, ds) in groups {
        for lex in lexica {
            out.push(GridRow {
                group: g.clone(),
                dimension: lex.dimension,
                period: period.map(str::to_string),
                outcome: association(lex, g, ds).map_err(|e| e.to_string()),
            });
        }
    }
    out
}

pub fn write_grid_csv<T: Scalar, W: std::io::Write>(rows: &[GridRow<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "dimension", "value", "coverage", "matched", "total", "period", "missing"])?;
    for r in rows {
        let period = r.period.clone().unwrap_or_default();
        match &r.outcome {
            Ok(a) => w.write_record([
                r.group.clone(),
                r.dimension.to_string(),
                a.value.to_string(),
                a.coverage.to_string(),
                a.matched.to_string(),
                a.total.to_string(),
                period,
                "false".into(),
            ])?,
            Err(_) => w.write_record([
                r.group.clone(),
                r.dimension.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                period,
                "true".into(),
            ])?,
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
