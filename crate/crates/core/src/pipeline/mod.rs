//! End-to-end orchestration from one configuration file, with a run manifest
//! and plot-ready data bundles.

mod config;
mod plotdata;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{config_hash, EntityStage, LexiconStage, PipelineConfig, PmiStage, StabilityStage, WeatStage};
pub use plotdata::{emit_plotdata, PlotBundle, PlotSummary};

use crate::embed::{save_model, train_sgns, EmbeddingModel};
use crate::entities::{
    classify_documents, descriptor_lists, eval_classification, read_annotations, read_gold, write_accuracy_csv,
    AnnotatedDocument, EntityRecord, HeuristicAnnotator, KeywordSets, PersonLexicon,
};
use crate::error::{Error, Result};
use crate::ingest::{
    ingest, read_documents, CleanSentence, Dictionary, IngestOptions, LanguageProfiles, OcrRules, PeriodSpec,
    DEFAULT_ORDER,
};
use crate::jsonl;
use crate::lexicon::{association_grid, write_grid_csv, ValueLexicon};
use crate::pmi::{counts_from_records, plane_coordinates, pmi_temporal, write_plane_csv, write_trajectory_csv, CountTable};
use crate::stability::{bundled_pairs, load_pairs, run_grid, write_reports_csv};
use crate::tokenize::word_corpus;
use crate::weat::{bundled_tests, load_tests, weat_temporal, write_csv as write_weat_csv};

/// Period name used when no periods are configured.
pub const ALL_PERIODS: &str = "all";

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PLANE_FILE: &str = "pmi_plane.csv";
pub const TRAJECTORY_FILE: &str = "pmi_trajectories.csv";
pub const WEAT_FILE: &str = "weat.csv";
pub const LEXICON_FILE: &str = "lexicon.csv";
pub const STABILITY_FILE: &str = "stability.csv";
pub const ACCURACY_FILE: &str = "accuracy.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub wall_ms: u128,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub base: u64,
    pub embedding: u64,
    pub stability_base: u64,
    pub weat_permutation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
    pub seeds: Seeds,
    pub workers: usize,
    pub stages: Vec<StageRecord>,
    pub complete: bool,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        jsonl::read_json(path)
    }
}

fn seeds(cfg: &PipelineConfig) -> Seeds {
    Seeds {
        base: cfg.seed,
        embedding: cfg.seed,
        stability_base: cfg.seed,
        weat_permutation: cfg.seed,
    }
}

fn versions() -> BTreeMap<String, String> {
    [
        ("histbias".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("manifest_format".to_string(), "1".to_string()),
    ]
    .into_iter()
    .collect()
}

fn stage_err(stage: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Stage {
        stage: stage.to_string(),
        source: Box::new(e),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn timed<T>(name: &str, f: impl FnOnce(&mut StageRecord) -> Result<T>) -> Result<(T, StageRecord)> {
    let start = Instant::now();
    let mut rec = StageRecord {
        name: name.to_string(),
        wall_ms: 0,
        outputs: Vec::new(),
        notes: Vec::new(),
    };
    let out = f(&mut rec).map_err(stage_err(name))?;
    rec.wall_ms = start.elapsed().as_millis();
    Ok((out, rec))
}

struct Ingested {
    sentences: Vec<CleanSentence>,
    /// Period name → document ids, in configured order.
    periods: Vec<(String, HashSet<String>)>,
}

fn run_ingest(cfg: &PipelineConfig, rec: &mut StageRecord) -> Result<Ingested> {
    let docs = read_documents(&cfg.corpus)?;
    let dictionary = match &cfg.dictionary {
        Some(p) => Dictionary::load(p)?,
        None => Dictionary::bundled().clone(),
    };
    let rules = match &cfg.ocr_rules {
        Some(p) => OcrRules::load(p, dictionary)?,
        None => OcrRules::bundled(),
    };
    let profiles = match &cfg.langid_dir {
        Some(d) => LanguageProfiles::load_dir(d, DEFAULT_ORDER)?,
        None => LanguageProfiles::bundled(),
    };
    let periods: Vec<PeriodSpec> = match &cfg.periods {
        Some(p) => crate::ingest::load_periods(p)?,
        None => Vec::new(),
    };
    let out = ingest(
        docs,
        &IngestOptions {
            rules: &rules,
            profiles: &profiles,
            english_threshold: cfg.english_threshold,
            periods: &periods,
        },
    )?;
    if out.sentences.is_empty() {
        return Err(Error::Degenerate("no sentence survived cleaning and language filtering".into()));
    }
    rec.notes.push(format!(
        "{} sentences kept, {} non-English dropped",
        out.sentences.len(),
        out.dropped_non_english
    ));
    let sentences_path = cfg.output_dir.join("sentences.jsonl");
    jsonl::write_jsonl(&sentences_path, &out.sentences)?;
    let periods_path = cfg.output_dir.join("periods.json");
    jsonl::write_json(&periods_path, &out.buckets.manifest())?;
    rec.outputs.extend(["sentences.jsonl".to_string(), "periods.json".to_string()]);
    let period_ids = if periods.is_empty() {
        vec![(ALL_PERIODS.to_string(), out.buckets.unassigned.iter().map(|d| d.id.clone()).collect())]
    } else {
        out.buckets
            .buckets
            .iter()
            .map(|(n, docs)| (n.clone(), docs.iter().map(|d| d.id.clone()).collect()))
            .collect()
    };
    Ok(Ingested {
        sentences: out.sentences,
        periods: period_ids,
    })
}

struct Tokenized {
    all: Vec<Vec<String>>,
    per_period: Vec<(String, Vec<Vec<String>>)>,
}

fn run_tokenize(cfg: &PipelineConfig, ing: &Ingested) -> Tokenized {
    let texts: Vec<&str> = ing.sentences.iter().map(|s| s.text.as_str()).collect();
    let all: Vec<Vec<String>> = word_corpus(&texts, &cfg.tokenizer)
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();
    let per_period = ing
        .periods
        .iter()
        .map(|(name, ids)| {
            let texts: Vec<&str> = ing
                .sentences
                .iter()
                .filter(|s| ids.contains(&s.doc_id))
                .map(|s| s.text.as_str())
                .collect();
            (name.clone(), word_corpus(&texts, &cfg.tokenizer))
        })
        .collect();
    Tokenized { all, per_period }
}

type PeriodModels = BTreeMap<String, Option<EmbeddingModel<f64>>>;

fn run_embed(cfg: &PipelineConfig, tok: &Tokenized, rec: &mut StageRecord) -> Result<PeriodModels> {
    let dir = cfg.output_dir.join("models");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut train = cfg.embedding.clone();
    train.seed = cfg.seed;
    train.workers = cfg.workers;
    let mut models = BTreeMap::new();
    for (period, corpus) in &tok.per_period {
        match train_sgns::<f64, _>(corpus, &train) {
            Ok(m) => {
                let name = format!("models/{period}.vec");
                save_model(&m, &cfg.output_dir.join(&name))?;
                rec.outputs.push(name);
                models.insert(period.clone(), Some(m));
            }
            Err(e) => {
                rec.notes.push(format!("period {period}: no model ({e})"));
                models.insert(period.clone(), None);
            }
        }
    }
    if models.values().all(Option::is_none) {
        return Err(Error::Degenerate("no period produced a model".into()));
    }
    Ok(models)
}

fn run_stability(cfg: &PipelineConfig, tok: &Tokenized, rec: &mut StageRecord) -> Result<()> {
    let s = &cfg.stability;
    let pairs = match &s.misspell_pairs {
        Some(p) => load_pairs(p)?,
        None => bundled_pairs(),
    };
    let mut grid = s.grid.clone();
    grid.train.workers = cfg.workers;
    let reports = run_grid::<f64>(&tok.all, &grid, s.runs, s.k, &pairs, cfg.seed)?;
    write_reports_csv(&reports, create(&cfg.output_dir.join(STABILITY_FILE))?)?;
    rec.outputs.push(STABILITY_FILE.into());
    Ok(())
}

fn run_weat(cfg: &PipelineConfig, models: &PeriodModels, rec: &mut StageRecord) -> Result<()> {
    let tests = match &cfg.weat.tests {
        Some(p) => load_tests(p)?,
        None => bundled_tests()?,
    };
    let mut opts = cfg.weat.options.clone();
    opts.seed = cfg.seed;
    let rows = weat_temporal(models, &tests, &opts);
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        rec.notes.push(format!("{failed} of {} WEAT cells failed", rows.len()));
    }
    write_weat_csv(&rows, create(&cfg.output_dir.join(WEAT_FILE))?)?;
    rec.outputs.push(WEAT_FILE.into());
    Ok(())
}

fn run_entities(cfg: &PipelineConfig, ing: &Ingested, rec: &mut StageRecord) -> Result<Vec<EntityRecord>> {
    let e = &cfg.entities;
    let keywords = match &e.keywords_dir {
        Some(d) => KeywordSets::load_dir(d)?,
        None => KeywordSets::bundled(),
    };
    let lex = match &e.person_lexicon_dir {
        Some(d) => PersonLexicon::load_dir(d)?,
        None => PersonLexicon::bundled(),
    };
    let docs: Vec<AnnotatedDocument> = match &e.annotations {
        Some(p) => {
            let known: HashSet<&str> = ing.sentences.iter().map(|s| s.doc_id.as_str()).collect();
            let all = read_annotations(p)?;
            let n = all.len();
            let kept: Vec<_> = all.into_iter().filter(|d| known.contains(d.doc_id.as_str())).collect();
            if kept.len() < n {
                rec.notes.push(format!("{} annotated documents are not in the corpus", n - kept.len()));
            }
            kept
        }
        None => HeuristicAnnotator::with_lexicon(lex.clone()).annotate(&ing.sentences),
    };
    let (records, stats) = classify_documents(&docs, &keywords, &lex, &e.options, e.gold.is_some())?;
    rec.notes.push(format!("{} chains, {} persons", stats.chains, stats.persons));
    jsonl::write_jsonl(&cfg.output_dir.join("entities.jsonl"), &records)?;
    rec.outputs.push("entities.jsonl".into());
    if let Some(g) = &e.gold {
        let rows = eval_classification(&records, &read_gold(g)?)?;
        write_accuracy_csv(&rows, create(&cfg.output_dir.join(ACCURACY_FILE))?)?;
        rec.outputs.push(ACCURACY_FILE.into());
    }
    Ok(records.into_iter().filter(|r| r.is_person).collect())
}

fn records_per_period(ing: &Ingested, records: &[EntityRecord]) -> Vec<(String, Vec<EntityRecord>)> {
    ing.periods
        .iter()
        .map(|(name, ids)| {
            let rs: Vec<EntityRecord> = records.iter().filter(|r| ids.contains(&r.doc_id)).cloned().collect();
            (name.clone(), rs)
        })
        .collect()
}

fn run_pmi(cfg: &PipelineConfig, ing: &Ingested, records: &[EntityRecord], rec: &mut StageRecord) -> Result<()> {
    let min = cfg.pmi.min_support;
    let all = counts_from_records(records)?;
    let (coords, excluded) = plane_coordinates::<f64>(&all, min);
    rec.notes.push(format!("{} descriptors on the plane, {excluded} below support", coords.len()));
    let mut rows = vec![(None, coords.clone())];
    let mut tables: BTreeMap<String, CountTable> = BTreeMap::new();
    for (period, rs) in records_per_period(ing, records) {
        let table = counts_from_records(&rs).unwrap_or_default();
        rows.push((Some(period.clone()), plane_coordinates::<f64>(&table, min).0));
        tables.insert(period, table);
    }
    write_plane_csv(&rows, create(&cfg.output_dir.join(PLANE_FILE))?)?;
    rec.outputs.push(PLANE_FILE.into());
    let words: Vec<String> = if cfg.pmi.trajectory_words.is_empty() {
        coords.iter().map(|c| c.descriptor.clone()).collect()
    } else {
        cfg.pmi.trajectory_words.clone()
    };
    let points = pmi_temporal::<f64>(&tables, &words, min);
    write_trajectory_csv(&points, create(&cfg.output_dir.join(TRAJECTORY_FILE))?)?;
    rec.outputs.push(TRAJECTORY_FILE.into());
    Ok(())
}

fn run_lexicon(cfg: &PipelineConfig, ing: &Ingested, records: &[EntityRecord], rec: &mut StageRecord) -> Result<()> {
    let lexica = match &cfg.lexicon.dir {
        Some(d) => ValueLexicon::load_dir(d)?,
        None => ValueLexicon::bundled(),
    };
    let mut rows = association_grid::<f64>(&descriptor_lists(records), &lexica, None);
    for (period, rs) in records_per_period(ing, records) {
        rows.extend(association_grid::<f64>(&descriptor_lists(&rs), &lexica, Some(&period)));
    }
    let missing = rows.iter().filter(|r| r.outcome.is_err()).count();
    if missing > 0 {
        rec.notes.push(format!("{missing} group/dimension cells without lexicon coverage"));
    }
    write_grid_csv(&rows, create(&cfg.output_dir.join(LEXICON_FILE))?)?;
    rec.outputs.push(LEXICON_FILE.into());
    Ok(())
}

/// Records from the entity branch, in stage order.
fn entity_branch(cfg: &PipelineConfig, ing: &Ingested) -> Result<Vec<StageRecord>> {
    let mut out = Vec::new();
    if !cfg.entities.enabled {
        return Ok(out);
    }
    let (records, r) = timed("entities", |rec| run_entities(cfg, ing, rec))?;
    out.push(r);
    if cfg.pmi.enabled {
        out.push(timed("pmi", |rec| run_pmi(cfg, ing, &records, rec))?.1);
    }
    if cfg.lexicon.enabled {
        out.push(timed("lexicon", |rec| run_lexicon(cfg, ing, &records, rec))?.1);
    }
    Ok(out)
}

fn execute(cfg: &PipelineConfig, stages: &mut Vec<StageRecord>) -> Result<()> {
    let (ing, r) = timed("ingest", |rec| run_ingest(cfg, rec))?;
    stages.push(r);
    let (tok, r) = timed("tokenize", |_| Ok(run_tokenize(cfg, &ing)))?;
    stages.push(r);
    let need_models = cfg.weat.enabled;
    let models = if need_models {
        let (m, r) = timed("embed", |rec| run_embed(cfg, &tok, rec))?;
        stages.push(r);
        m
    } else {
        BTreeMap::new()
    };

    // independent measure branches; results are merged in a fixed order
    let ((stab, weat), ents) = rayon::join(
        || {
            rayon::join(
                || cfg.stability.enabled.then(|| timed("stability", |rec| run_stability(cfg, &tok, rec))),
                || need_models.then(|| timed("weat", |rec| run_weat(cfg, &models, rec))),
            )
        },
        || entity_branch(cfg, &ing),
    );
    let mut first_err = None;
    for r in [stab, weat].into_iter().flatten() {
        match r {
            Ok(((), rec)) => stages.push(rec),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match ents {
        Ok(recs) => stages.extend(recs),
        Err(e) => {
            first_err.get_or_insert(e);
        }
    }
    first_err.map_or(Ok(()), Err)
}

/// Run every enabled stage and write the manifest, which is marked incomplete on failure.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut stages = Vec::new();
    let result = pool.install(|| execute(cfg, &mut stages));
    let (failed_stage, error) = match &result {
        Ok(()) => (None, None),
        Err(Error::Stage { stage, source }) => (Some(stage.clone()), Some(source.to_string())),
        Err(e) => (None, Some(e.to_string())),
    };
    let manifest = RunManifest {
        config_hash: cfg.hash(),
        versions: versions(),
        seeds: seeds(cfg),
        workers: cfg.workers,
        stages,
        complete: result.is_ok(),
        failed_stage,
        error,
    };
    jsonl::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    result.map(|()| manifest)
}

/// Measure outputs a complete run is expected to write, relative to the output directory.
pub fn measure_outputs(cfg: &PipelineConfig) -> Vec<PathBuf> {
    let mut out = Vec::new();
    if cfg.stability.enabled {
        out.push(PathBuf::from(STABILITY_FILE));
    }
    if cfg.weat.enabled {
        out.push(PathBuf::from(WEAT_FILE));
    }
    if cfg.entities.enabled && cfg.entities.gold.is_some() {
        out.push(PathBuf::from(ACCURACY_FILE));
    }
    if cfg.pmi.enabled {
        out.push(PathBuf::from(PLANE_FILE));
        out.push(PathBuf::from(TRAJECTORY_FILE));
    }
    if cfg.lexicon.enabled {
        out.push(PathBuf::from(LEXICON_FILE));
    }
    out
}
