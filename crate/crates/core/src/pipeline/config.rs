use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embed::TrainConfig;
use crate::entities::ClassifyOptions;
use crate::error::{Error, Result};
use crate::ingest::DEFAULT_ENGLISH_THRESHOLD;
use crate::pmi::DEFAULT_MIN_SUPPORT;
use crate::stability::{GridSpec, DEFAULT_JACCARD_K};
use crate::tokenize::RuleTokenizer;
use crate::weat::WeatOptions;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityStage {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Tab-separated misspelling pairs; the bundled list when absent.
    #[serde(default)]
    pub misspell_pairs: Option<PathBuf>,
}

fn default_runs() -> usize {
    5
}

fn default_k() -> usize {
    DEFAULT_JACCARD_K
}

impl Default for StabilityStage {
    fn default() -> Self {
        StabilityStage {
            enabled: true,
            grid: GridSpec::default(),
            runs: default_runs(),
            k: default_k(),
            misspell_pairs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatStage {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Test file; the bundled tests when absent.
    #[serde(default)]
    pub tests: Option<PathBuf>,
    #[serde(default)]
    pub options: WeatOptions,
}

impl Default for WeatStage {
    fn default() -> Self {
        WeatStage {
            enabled: true,
            tests: None,
            options: WeatOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityStage {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Annotation JSONL; the heuristic annotator runs when absent.
    #[serde(default)]
    pub annotations: Option<PathBuf>,
    #[serde(default)]
    pub keywords_dir: Option<PathBuf>,
    #[serde(default)]
    pub person_lexicon_dir: Option<PathBuf>,
    /// Gold labels for the accuracy report.
    #[serde(default)]
    pub gold: Option<PathBuf>,
    #[serde(default)]
    pub options: ClassifyOptions,
}

impl Default for EntityStage {
    fn default() -> Self {
        EntityStage {
            enabled: true,
            annotations: None,
            keywords_dir: None,
            person_lexicon_dir: None,
            gold: None,
            options: ClassifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmiStage {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_min_support")]
    pub min_support: u64,
    /// Words to trace across periods; every all-data plane word when empty.
    #[serde(default)]
    pub trajectory_words: Vec<String>,
}

fn default_min_support() -> u64 {
    DEFAULT_MIN_SUPPORT
}

impl Default for PmiStage {
    fn default() -> Self {
        PmiStage {
            enabled: true,
            min_support: DEFAULT_MIN_SUPPORT,
            trajectory_words: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconStage {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Directory with `valence.tsv`, `arousal.tsv`, `dominance.tsv`; the bundled sample when absent.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

impl Default for LexiconStage {
    fn default() -> Self {
        LexiconStage { enabled: true, dir: None }
    }
}

/// Whole-run configuration. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    /// Base seed for every stochastic stage.
    pub seed: u64,
    #[serde(default = "one_worker")]
    pub workers: usize,
    #[serde(default)]
    pub periods: Option<PathBuf>,
    #[serde(default)]
    pub ocr_rules: Option<PathBuf>,
    #[serde(default)]
    pub dictionary: Option<PathBuf>,
    #[serde(default)]
    pub langid_dir: Option<PathBuf>,
    #[serde(default = "default_threshold")]
    pub english_threshold: f64,
    #[serde(default)]
    pub tokenizer: RuleTokenizer,
    /// Per-period model hyperparameters; `seed` and `workers` are overridden.
    #[serde(default)]
    pub embedding: TrainConfig,
    #[serde(default)]
    pub stability: StabilityStage,
    #[serde(default)]
    pub weat: WeatStage,
    #[serde(default)]
    pub entities: EntityStage,
    #[serde(default)]
    pub pmi: PmiStage,
    #[serde(default)]
    pub lexicon: LexiconStage,
    #[serde(skip)]
    source_hash: Option<String>,
}

fn one_worker() -> usize {
    1
}

fn default_threshold() -> f64 {
    DEFAULT_ENGLISH_THRESHOLD
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("pipeline config: {e}")))
    }

    /// Parse, resolve relative paths against the file's directory and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read pipeline config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.source_hash = Some(cfg.hash());
        cfg.resolve(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.output_dir);
        for p in self.input_paths_mut() {
            fix(p);
        }
    }

    fn input_paths_mut(&mut self) -> Vec<&mut PathBuf> {
        [
            self.periods.as_mut(),
            self.ocr_rules.as_mut(),
            self.dictionary.as_mut(),
            self.langid_dir.as_mut(),
            self.stability.misspell_pairs.as_mut(),
            self.weat.tests.as_mut(),
            self.entities.annotations.as_mut(),
            self.entities.keywords_dir.as_mut(),
            self.entities.person_lexicon_dir.as_mut(),
            self.entities.gold.as_mut(),
            self.lexicon.dir.as_mut(),
        ]
        .into_iter()
        .flatten()
        .collect()
    }

    /// Every file or directory the run may read.
    pub fn declared_inputs(&self) -> Vec<&Path> {
        let mut out = vec![self.corpus.as_path()];
        out.extend(
            [
                &self.periods,
                &self.ocr_rules,
                &self.dictionary,
                &self.langid_dir,
                &self.stability.misspell_pairs,
                &self.weat.tests,
                &self.entities.annotations,
                &self.entities.keywords_dir,
                &self.entities.person_lexicon_dir,
                &self.entities.gold,
                &self.lexicon.dir,
            ]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path),
        );
        out
    }

    /// Checks that need no stage to run: inputs exist, parameters are in range.
    pub fn validate(&self) -> Result<()> {
        for p in self.declared_inputs() {
            if !p.exists() {
                return Err(Error::Config(format!("declared input {} does not exist", p.display())));
            }
        }
        if let Some(dir) = &self.lexicon.dir {
            for d in crate::lexicon::Dimension::ALL {
                let f = dir.join(d.file_name());
                if !f.exists() {
                    return Err(Error::Config(format!("lexicon file {} does not exist", f.display())));
                }
            }
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.english_threshold) {
            return Err(Error::Config("english_threshold must lie in [0,1]".into()));
        }
        self.embedding.validate()?;
        if self.stability.enabled {
            if self.stability.runs < 2 {
                return Err(Error::Config("stability needs at least two runs".into()));
            }
            if self.stability.k == 0 || self.stability.grid.cells().is_empty() {
                return Err(Error::Config("stability grid is empty or k is zero".into()));
            }
        }
        if self.weat.enabled && self.weat.options.n_perm == 0 {
            return Err(Error::Config("weat n_perm must be positive".into()));
        }
        if (self.pmi.enabled || self.lexicon.enabled) && !self.entities.enabled {
            return Err(Error::Config("pmi and lexicon stages need the entities stage".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical serialization of the configuration as written,
    /// before relative paths were resolved.
    pub fn hash(&self) -> String {
        if let Some(h) = &self.source_hash {
            return h.clone();
        }
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }
}

/// Hash of a config file's parsed content, independent of formatting and location.
pub fn config_hash(text: &str) -> Result<String> {
    Ok(PipelineConfig::parse(text)?.hash())
}
