//! Pointwise mutual information between attribute groups and descriptors,
//! and the derived gender/race plane coordinates.
//!
//! The event space is (group, descriptor occurrence) pairs: an occurrence
//! attached to a known-gender entity appears once under its gender group and
//! once under its race group. Probabilities are raw count ratios, logs are
//! natural.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::entities::EntityRecord;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_MIN_SUPPORT: u64 = 10;
pub const MALE: &str = "male";
pub const FEMALE: &str = "female";
pub const WHITE: &str = "white";
pub const NON_WHITE: &str = "non_white";
pub const AXIS_GROUPS: [&str; 4] = [MALE, FEMALE, WHITE, NON_WHITE];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CountTable {
    cells: BTreeMap<(String, String), u64>,
    group_totals: BTreeMap<String, u64>,
    descriptor_totals: BTreeMap<String, u64>,
    n: u64,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, group: &str, descriptor: &str) {
        self.add_n(group, descriptor, 1);
    }

    pub fn add_n(&mut self, group: &str, descriptor: &str, k: u64) {
        if k == 0 {
            return;
        }
        *self.cells.entry((group.to_string(), descriptor.to_string())).or_insert(0) += k;
        *self.group_totals.entry(group.to_string()).or_insert(0) += k;
        *self.descriptor_totals.entry(descriptor.to_string()).or_insert(0) += k;
        self.n += k;
    }

    /// Add every cell of `other`.
    pub fn merge(&mut self, other: &CountTable) {
        for ((g, d), &c) in &other.cells {
            self.add_n(g, d, c);
        }
    }

    pub fn count(&self, group: &str, descriptor: &str) -> u64 {
        self.cells.get(&(group.to_string(), descriptor.to_string())).copied().unwrap_or(0)
    }

    pub fn group_total(&self, group: &str) -> u64 {
        self.group_totals.get(group).copied().unwrap_or(0)
    }

    pub fn descriptor_total(&self, descriptor: &str) -> u64 {
        self.descriptor_totals.get(descriptor).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn groups(&self) -> impl Iterator<Item = &str> {
        self.group_totals.keys().map(String::as_str)
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &str> {
        self.descriptor_totals.keys().map(String::as_str)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.cells.iter().map(|((g, d), &c)| (g.as_str(), d.as_str(), c))
    }
}

/// Count table from group → descriptor multiset.
pub fn build_counts<S: AsRef<str>>(lists: &BTreeMap<String, Vec<S>>) -> Result<CountTable> {
    let mut t = CountTable::new();
    for (g, ds) in lists {
        for d in ds {
            t.add(g, d.as_ref());
        }
    }
    if t.is_empty() {
        return Err(Error::Degenerate("no descriptors to count".into()));
    }
    Ok(t)
}

/// Axis-group table from classified person entities.
pub fn counts_from_records(records: &[EntityRecord]) -> Result<CountTable> {
    let mut lists: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_person) {
        for g in r.assignment().groups() {
            if AXIS_GROUPS.contains(&g.as_str()) {
                lists.entry(g).or_default().extend(r.descriptors.iter().map(String::as_str));
            }
        }
    }
    build_counts(&lists)
}

/// `ln(count(a,w)·N / (count(a)·count(w)))`, or `None` when the joint count is below `min_support`.
pub fn pmi<T: Scalar>(a: &str, w: &str, t: &CountTable, min_support: u64) -> Option<T> {
    let c = t.count(a, w);
    if c == 0 || c < min_support {
        return None;
    }
    let (ca, cw) = (t.group_total(a), t.descriptor_total(w));
    let num = T::of(c as f64) * T::of(t.total() as f64);
    let den = T::of(ca as f64) * T::of(cw as f64);
    Some((num / den).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneCoordinate<T> {
    pub descriptor: String,
    /// PMI(female) − PMI(male).
    pub gender_axis: T,
    /// PMI(non_white) − PMI(white).
    pub race_axis: T,
    /// Occurrences of the descriptor (each counted once).
    pub support: u64,
}

fn coordinate<T: Scalar>(t: &CountTable, w: &str, min_support: u64) -> Option<PlaneCoordinate<T>> {
    let f = pmi::<T>(FEMALE, w, t, min_support)?;
    let m = pmi::<T>(MALE, w, t, min_support)?;
    let nw = pmi::<T>(NON_WHITE, w, t, min_support)?;
    let wh = pmi::<T>(WHITE, w, t, min_support)?;
    Some(PlaneCoordinate {
        descriptor: w.to_string(),
        gender_axis: f - m,
        race_axis: nw - wh,
        support: t.count(WHITE, w) + t.count(NON_WHITE, w),
    })
}

/// Coordinates for every descriptor meeting `min_support` in all four axis groups,
/// sorted by descriptor, plus the number excluded.
pub fn plane_coordinates<T: Scalar>(t: &CountTable, min_support: u64) -> (Vec<PlaneCoordinate<T>>, usize) {
    let mut out = Vec::new();
    let mut excluded = 0;
    for w in t.descriptors() {
        match coordinate(t, w, min_support) {
            Some(c) => out.push(c),
            None => excluded += 1,
        }
    }
    (out, excluded)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint<T> {
    pub word: String,
    pub period: String,
    /// `None` marks a period where the word lacks support.
    pub coordinate: Option<PlaneCoordinate<T>>,
}

/// Per-word, per-period coordinates in word-then-period order.
pub fn pmi_temporal<T: Scalar>(
    period_tables: &BTreeMap<String, CountTable>,
    words: &[String],
    min_support: u64,
) -> Vec<TrajectoryPoint<T>> {
    let mut out = Vec::new();
    for w in words {
        for (p, t) in period_tables {
            out.push(TrajectoryPoint {
                word: w.clone(),
                period: p.clone(),
                coordinate: coordinate(t, w, min_support),
            });
        }
    }
    out
}

pub const CSV_HEADER: [&str; 5] = ["descriptor", "gender_axis", "race_axis", "support", "period"];

/// Write plane rows; `period` is empty for the all-data run.
pub fn write_plane_csv<T: Scalar, W: std::io::Write>(
    rows: &[(Option<String>, Vec<PlaneCoordinate<T>>)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for (period, coords) in rows {
        for c in coords {
            w.write_record([
                c.descriptor.clone(),
                c.gender_axis.to_string(),
                c.race_axis.to_string(),
                c.support.to_string(),
                period.clone().unwrap_or_default(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_trajectory_csv<T: Scalar, W: std::io::Write>(points: &[TrajectoryPoint<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["word", "period", "gender_axis", "race_axis", "support", "missing"])?;
    for p in points {
        match &p.coordinate {
            Some(c) => w.write_record([
                p.word.clone(),
                p.period.clone(),
                c.gender_axis.to_string(),
                c.race_axis.to_string(),
                c.support.to_string(),
                "false".into(),
            ])?,
            None => w.write_record([p.word.clone(), p.period.clone(), String::new(), String::new(), String::new(), "true".into()])?,
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Distinct descriptors across all tables, sorted.
pub fn all_descriptors<'a>(tables: impl IntoIterator<Item = &'a CountTable>) -> BTreeSet<String> {
    tables.into_iter().flat_map(|t| t.descriptors().map(str::to_string)).collect()
}
