use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{LEXICON_FILE, PLANE_FILE, TRAJECTORY_FILE, WEAT_FILE};
use crate::error::{Error, Result};
use crate::jsonl;

pub const GENDER_AXIS_LABEL: &str = "female↔male";
pub const RACE_AXIS_LABEL: &str = "non-white↔white";

/// One figure family's data, ready for any plotting tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotBundle {
    pub figure: String,
    pub kind: String,
    pub x_label: Option<String>,
    pub y_label: Option<String>,
    pub data: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlotSummary {
    pub written: Vec<String>,
    /// `(bundle, reason)` for every bundle that could not be built.
    pub skipped: Vec<(String, String)>,
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Deserialize)]
struct PlaneRow {
    descriptor: String,
    gender_axis: f64,
    race_axis: f64,
    support: u64,
    period: String,
}

fn plane(results: &Path) -> Result<PlotBundle> {
    let rows: Vec<PlaneRow> = read_rows(&results.join(PLANE_FILE))?;
    let mut series: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for r in rows {
        let key = if r.period.is_empty() { "all".to_string() } else { r.period };
        series.entry(key).or_default().push(json!({
            "label": r.descriptor,
            "x": r.gender_axis,
            "y": r.race_axis,
            "support": r.support,
        }));
    }
    Ok(PlotBundle {
        figure: "plane".into(),
        kind: "scatter".into(),
        x_label: Some(GENDER_AXIS_LABEL.into()),
        y_label: Some(RACE_AXIS_LABEL.into()),
        data: json!({ "x_positive": "female", "y_positive": "non-white", "series": series }),
    })
}

#[derive(Deserialize)]
struct WeatRow {
    period: String,
    attr_pair: String,
    target_pair: String,
    s: Option<f64>,
    d: Option<f64>,
    p: Option<f64>,
    #[serde(rename = "dropped_A")]
    dropped_a: String,
}

fn weat_bars(results: &Path) -> Result<PlotBundle> {
    let rows: Vec<WeatRow> = read_rows(&results.join(WEAT_FILE))?;
    let mut groups: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for r in rows {
        let key = format!("{} vs {}", r.target_pair, r.attr_pair);
        let bar = match (r.s, r.d, r.p) {
            (Some(s), Some(d), Some(p)) => json!({ "period": r.period, "d": d, "s": s, "p": p }),
            _ => json!({ "period": r.period, "d": null, "error": r.dropped_a }),
        };
        groups.entry(key).or_default().push(bar);
    }
    Ok(PlotBundle {
        figure: "weat".into(),
        kind: "grouped_bar".into(),
        x_label: Some("period".into()),
        y_label: Some("effect size d".into()),
        data: json!({ "groups": groups }),
    })
}

#[derive(Deserialize)]
struct TrajectoryRow {
    word: String,
    period: String,
    gender_axis: Option<f64>,
    race_axis: Option<f64>,
}

fn trajectories(results: &Path) -> Result<PlotBundle> {
    let rows: Vec<TrajectoryRow> = read_rows(&results.join(TRAJECTORY_FILE))?;
    let mut words: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for r in rows {
        words
            .entry(r.word)
            .or_default()
            .push(json!({ "period": r.period, "x": r.gender_axis, "y": r.race_axis }));
    }
    Ok(PlotBundle {
        figure: "trajectories".into(),
        kind: "path".into(),
        x_label: Some(GENDER_AXIS_LABEL.into()),
        y_label: Some(RACE_AXIS_LABEL.into()),
        data: json!({ "words": words }),
    })
}

#[derive(Deserialize)]
struct LexiconRow {
    group: String,
    dimension: String,
    value: Option<f64>,
    coverage: Option<f64>,
    period: String,
}

fn lexicon_bars(results: &Path) -> Result<PlotBundle> {
    let rows: Vec<LexiconRow> = read_rows(&results.join(LEXICON_FILE))?;
    let mut dims: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for r in rows {
        let period = if r.period.is_empty() { "all".to_string() } else { r.period };
        dims.entry(r.dimension).or_default().push(json!({
            "group": r.group,
            "period": period,
            "value": r.value,
            "coverage": r.coverage,
        }));
    }
    Ok(PlotBundle {
        figure: "lexicon".into(),
        kind: "grouped_bar".into(),
        x_label: Some("group".into()),
        y_label: Some("mean lexicon value".into()),
        data: json!({ "dimensions": dims }),
    })
}

type Builder = fn(&Path) -> Result<PlotBundle>;

/// Build one JSON bundle per figure family from a results directory.
///
/// A bundle whose source CSV is missing or unreadable is skipped with a
/// logged notice rather than failing the whole call.
pub fn emit_plotdata(results: &Path, out_dir: &Path) -> Result<PlotSummary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let builders: [(&str, &str, Builder); 4] = [
        ("plane.json", PLANE_FILE, plane),
        ("weat_bars.json", WEAT_FILE, weat_bars),
        ("trajectories.json", TRAJECTORY_FILE, trajectories),
        ("lexicon_bars.json", LEXICON_FILE, lexicon_bars),
    ];
    let mut summary = PlotSummary::default();
    for (name, source, build) in builders {
        if !results.join(source).exists() {
            log::warn!("skipping {name}: {source} not found");
            summary.skipped.push((name.to_string(), format!("{source} not found")));
            continue;
        }
        match build(results) {
            Ok(bundle) => {
                jsonl::write_json(&out_dir.join(name), &bundle)?;
                summary.written.push(name.to_string());
            }
            Err(e) => {
                log::warn!("skipping {name}: {e}");
                summary.skipped.push((name.to_string(), e.to_string()));
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dir_skips_everything() {
        let dir = tempfile::tempdir().unwrap();
        let s = emit_plotdata(dir.path(), &dir.path().join("plots")).unwrap();
        assert!(s.written.is_empty());
        assert_eq!(s.skipped.len(), 4);
    }

    #[test]
    fn plane_bundle_has_axis_labels() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join(PLANE_FILE),
            "descriptor,gender_axis,race_axis,support,period\nbrave,-1.5,0.25,40,\n",
        )
        .unwrap();
        let s = emit_plotdata(dir.path(), dir.path()).unwrap();
        assert_eq!(s.written, vec!["plane.json"]);
        let b: PlotBundle = jsonl::read_json(&dir.path().join("plane.json")).unwrap();
        assert_eq!(b.x_label.as_deref(), Some("female↔male"));
        assert_eq!(b.y_label.as_deref(), Some("non-white↔white"));
        assert_eq!(b.data["series"]["all"][0]["x"], -1.5);
    }
}
