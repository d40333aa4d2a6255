use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RawDocument;
use crate::error::{Error, Result};

pub const UNASSIGNED: &str = "unassigned";

/// A named, inclusive range of years.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub name: String,
    pub start_year: i32,
    pub end_year: i32,
}

impl PeriodSpec {
    pub fn new(name: impl Into<String>, start_year: i32, end_year: i32) -> Self {
        PeriodSpec {
            name: name.into(),
            start_year,
            end_year,
        }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start_year..=self.end_year).contains(&year)
    }
}

/// Check ordering within each period, pairwise disjointness and name uniqueness.
pub fn validate_periods(periods: &[PeriodSpec]) -> Result<()> {
    for p in periods {
        if p.start_year > p.end_year {
            return Err(Error::Config(format!("period {:?} ends before it starts", p.name)));
        }
        if p.name == UNASSIGNED || p.name.is_empty() {
            return Err(Error::Config(format!("reserved or empty period name {:?}", p.name)));
        }
    }
    for (i, a) in periods.iter().enumerate() {
        for b in &periods[i + 1..] {
            if a.name == b.name {
                return Err(Error::Config(format!("duplicate period name {:?}", a.name)));
            }
            if a.start_year <= b.end_year && b.start_year <= a.end_year {
                return Err(Error::Config(format!("periods {:?} and {:?} overlap", a.name, b.name)));
            }
        }
    }
    Ok(())
}

pub fn load_periods(path: &Path) -> Result<Vec<PeriodSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let periods: Vec<PeriodSpec> = serde_json::from_str(&text)?;
    validate_periods(&periods)?;
    Ok(periods)
}

/// Documents grouped by period, in the order the periods were given.
#[derive(Debug, Clone, Default)]
pub struct PeriodBuckets {
    pub buckets: Vec<(String, Vec<RawDocument>)>,
    pub unassigned: Vec<RawDocument>,
}

impl PeriodBuckets {
    pub fn get(&self, name: &str) -> Option<&[RawDocument]> {
        if name == UNASSIGNED {
            return Some(&self.unassigned);
        }
        self.buckets.iter().find(|(n, _)| n == name).map(|(_, d)| d.as_slice())
    }

    pub fn total(&self) -> usize {
        self.buckets.iter().map(|(_, d)| d.len()).sum::<usize>() + self.unassigned.len()
    }

    /// Period name → document ids; the unassigned bucket is included when non-empty.
    pub fn manifest(&self) -> PeriodManifest {
        let mut periods: BTreeMap<String, Vec<String>> = self
            .buckets
            .iter()
            .map(|(n, docs)| (n.clone(), docs.iter().map(|d| d.id.clone()).collect()))
            .collect();
        if !self.unassigned.is_empty() {
            periods.insert(
                UNASSIGNED.to_string(),
                self.unassigned.iter().map(|d| d.id.clone()).collect(),
            );
        }
        for ids in periods.values_mut() {
            ids.sort();
        }
        PeriodManifest(periods)
    }
}

pub fn bucket_by_period(docs: Vec<RawDocument>, periods: &[PeriodSpec]) -> Result<PeriodBuckets> {
    validate_periods(periods)?;
    let mut buckets: Vec<(String, Vec<RawDocument>)> = periods.iter().map(|p| (p.name.clone(), Vec::new())).collect();
    let mut unassigned = Vec::new();
    for doc in docs {
        match periods.iter().position(|p| p.contains(doc.year)) {
            Some(i) => buckets[i].1.push(doc),
            None => unassigned.push(doc),
        }
    }
    if !unassigned.is_empty() {
        log::warn!("{} documents fall outside every period", unassigned.len());
    }
    Ok(PeriodBuckets { buckets, unassigned })
}

/// Serialized period → document id map.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PeriodManifest(pub BTreeMap<String, Vec<String>>);

impl PeriodManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Reverse lookup: document id → period name.
    pub fn period_of(&self) -> BTreeMap<&str, &str> {
        self.0
            .iter()
            .flat_map(|(p, ids)| ids.iter().map(move |id| (id.as_str(), p.as_str())))
            .collect()
    }

    /// Period names excluding the unassigned bucket.
    pub fn periods(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str).filter(|p| *p != UNASSIGNED)
    }
}
