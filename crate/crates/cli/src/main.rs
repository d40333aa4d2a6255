use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use histbias::embed::{load_model, save_model, train_sgns, TrainConfig};
use histbias::entities::{
    classify_documents, descriptor_lists, eval_classification, read_annotations, read_gold, read_records,
    write_accuracy_csv, ClassifyOptions, EntityRecord, HeuristicAnnotator, KeywordSets, PersonLexicon,
};
use histbias::ingest::{
    ingest, load_periods, read_documents, CleanSentence, Dictionary, IngestOptions, LanguageProfiles, OcrRules,
    PeriodManifest, DEFAULT_ENGLISH_THRESHOLD, DEFAULT_ORDER,
};
use histbias::lexicon::{association_grid, write_grid_csv, ValueLexicon};
use histbias::pipeline::{emit_plotdata, run_pipeline, PipelineConfig};
use histbias::pmi::{counts_from_records, plane_coordinates, pmi_temporal, write_plane_csv, write_trajectory_csv, CountTable};
use histbias::stability::{bundled_pairs, load_pairs, run_grid, write_reports_csv, GridSpec};
use histbias::synth::{generate, PlantSpec};
use histbias::tokenize::{bpe_corpus, word_corpus, BpeModel, RuleTokenizer, DEFAULT_VOCAB_SIZE};
use histbias::weat::{bundled_tests, load_tests, weat_temporal, write_csv as write_weat_csv, WeatOptions};
use histbias::{jsonl, Error};

const EXIT_VALIDATION: u8 = 2;
const EXIT_STAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "histbias", version, about = "Bias measurement for noisy historical corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, segment, language-filter and bucket documents by period.
    Ingest(IngestArgs),
    #[command(subcommand)]
    Tokenize(TokenizeCmd),
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Train a grid of models and report neighbor stability and misspelling recovery.
    Stability(StabilityArgs),
    /// Run WEAT tests against one or more period models.
    Weat(WeatArgs),
    #[command(subcommand)]
    Entities(EntitiesCmd),
    /// Gender/race plane coordinates from classified entities.
    Pmi(PmiArgs),
    /// Valence, arousal and dominance scores per group.
    Lexicon(LexiconArgs),
    /// Generate a corpus with planted associations.
    Synth(SynthArgs),
    /// Run the whole pipeline from one configuration file.
    Run(RunArgs),
    /// Turn a results directory into plot-ready bundles.
    Plotdata(PlotdataArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    dictionary: Option<PathBuf>,
    #[arg(long)]
    periods: Option<PathBuf>,
    #[arg(long)]
    langid_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ENGLISH_THRESHOLD)]
    lang_threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum TokenizeCmd {
    /// Learn BPE merges from sentences.
    TrainBpe {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VOCAB_SIZE)]
        vocab_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one space-separated token line per sentence.
    Apply {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Word)]
        mode: Mode,
        #[arg(long)]
        bpe: Option<PathBuf>,
        #[arg(long)]
        keep_case: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Word,
    Bpe,
}

#[derive(Subcommand)]
enum EmbedCmd {
    /// Train skip-gram negative-sampling embeddings on a token file.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        min_count: u64,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        neg: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 20)]
    topk: usize,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WeatArgs {
    /// `path` or `period=path`; repeat for several periods.
    #[arg(long = "model", required = true)]
    models: Vec<String>,
    #[arg(long)]
    tests: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    nperm: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EntitiesCmd {
    /// Rule-based annotation of cleaned sentences.
    Annotate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter persons, assign groups and collect descriptors.
    Classify {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        keywords: Option<PathBuf>,
        #[arg(long)]
        person_lexicon: Option<PathBuf>,
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Accuracy table path when `--gold` is given.
        #[arg(long)]
        accuracy_out: Option<PathBuf>,
        #[arg(long)]
        no_pronoun_person_evidence: bool,
        #[arg(long)]
        head_only_descriptors: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct PmiArgs {
    #[arg(long)]
    entities: PathBuf,
    #[arg(long, default_value_t = 10)]
    min_support: u64,
    /// Period manifest (period → document ids).
    #[arg(long)]
    periods: Option<PathBuf>,
    /// Comma-separated words to trace across periods.
    #[arg(long, value_delimiter = ',')]
    words: Vec<String>,
    #[arg(long)]
    trajectories_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LexiconArgs {
    #[arg(long)]
    entities: PathBuf,
    #[arg(long)]
    lexdir: Option<PathBuf>,
    #[arg(long)]
    periods: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    sentences: usize,
    /// Overrides the seed in the plant spec file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct PlotdataArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn read_sentences(path: &Path) -> anyhow::Result<Vec<CleanSentence>> {
    Ok(jsonl::read_jsonl(path)?)
}

fn read_token_file(path: &Path) -> anyhow::Result<Vec<Vec<String>>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let tokens: Vec<String> = line?.split_whitespace().map(str::to_string).collect();
        if !tokens.is_empty() {
            out.push(tokens);
        }
    }
    Ok(out)
}

fn cmd_ingest(a: IngestArgs) -> anyhow::Result<()> {
    let docs = read_documents(&a.input)?;
    let dictionary = match &a.dictionary {
        Some(p) => Dictionary::load(p)?,
        None => Dictionary::bundled().clone(),
    };
    let rules = match &a.rules {
        Some(p) => OcrRules::load(p, dictionary)?,
        None => OcrRules::bundled(),
    };
    let profiles = match &a.langid_dir {
        Some(d) => LanguageProfiles::load_dir(d, DEFAULT_ORDER)?,
        None => LanguageProfiles::bundled(),
    };
    let periods = match &a.periods {
        Some(p) => load_periods(p)?,
        None => Vec::new(),
    };
    let out = ingest(
        docs,
        &IngestOptions {
            rules: &rules,
            profiles: &profiles,
            english_threshold: a.lang_threshold,
            periods: &periods,
        },
    )?;
    std::fs::create_dir_all(&a.out)?;
    jsonl::write_jsonl(&a.out.join("sentences.jsonl"), &out.sentences)?;
    jsonl::write_json(&a.out.join("periods.json"), &out.buckets.manifest())?;
    log::info!(
        "{} sentences kept, {} dropped as non-English",
        out.sentences.len(),
        out.dropped_non_english
    );
    Ok(())
}

fn cmd_tokenize(c: TokenizeCmd) -> anyhow::Result<()> {
    match c {
        TokenizeCmd::TrainBpe { input, vocab_size, out } => {
            let sentences = read_sentences(&input)?;
            let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
            let words = word_corpus(&texts, &RuleTokenizer::default());
            let model = BpeModel::train(words.iter().flatten(), vocab_size)?;
            model.save(&out)?;
        }
        TokenizeCmd::Apply {
            input,
            mode,
            bpe,
            keep_case,
            out,
        } => {
            let sentences = read_sentences(&input)?;
            let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
            let t = RuleTokenizer {
                lowercase: !keep_case,
                ..RuleTokenizer::default()
            };
            let mut corpus = word_corpus(&texts, &t);
            if let Mode::Bpe = mode {
                let Some(path) = bpe else {
                    return Err(Error::Config("--mode bpe needs --bpe <model>".into()).into());
                };
                corpus = bpe_corpus(&corpus, &BpeModel::load(&path)?);
            }
            let mut w = create(&out)?;
            for s in corpus.iter().filter(|s| !s.is_empty()) {
                writeln!(w, "{}", s.join(" "))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_embed(c: EmbedCmd) -> anyhow::Result<()> {
    let EmbedCmd::Train {
        input,
        dim,
        min_count,
        window,
        neg,
        epochs,
        seed,
        workers,
        out,
    } = c;
    let cfg = TrainConfig {
        dim,
        min_count,
        window,
        negatives: neg,
        epochs,
        seed,
        workers,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let corpus = read_token_file(&input)?;
    let model = train_sgns::<f64, _>(&corpus, &cfg)?;
    save_model(&model, &out)?;
    log::info!("{} vectors of dimension {}", model.len(), model.dim());
    Ok(())
}

fn cmd_stability(a: StabilityArgs) -> anyhow::Result<()> {
    let grid = match &a.grid {
        Some(p) => GridSpec::load(p)?,
        None => GridSpec::default(),
    };
    let pairs = match &a.pairs {
        Some(p) => load_pairs(p)?,
        None => bundled_pairs(),
    };
    let corpus = read_token_file(&a.input)?;
    let reports = run_grid::<f64>(&corpus, &grid, a.runs, a.topk, &pairs, a.seed)?;
    write_reports_csv(&reports, create(&a.out)?)?;
    Ok(())
}

fn cmd_weat(a: WeatArgs) -> anyhow::Result<()> {
    let tests = match &a.tests {
        Some(p) => load_tests(p)?,
        None => bundled_tests()?,
    };
    let mut models = BTreeMap::new();
    for spec in &a.models {
        let (period, path) = match spec.split_once('=') {
            Some((p, path)) => (p.to_string(), PathBuf::from(path)),
            None => {
                let path = PathBuf::from(spec);
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (stem, path)
            }
        };
        if models.insert(period.clone(), Some(load_model::<f64>(&path)?)).is_some() {
            bail!(Error::Config(format!("period {period:?} given twice")));
        }
    }
    let opts = WeatOptions {
        n_perm: a.nperm,
        seed: a.seed,
        ..WeatOptions::default()
    };
    let rows = weat_temporal(&models, &tests, &opts);
    match &a.out {
        Some(p) => write_weat_csv(&rows, create(p)?)?,
        None => write_weat_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_entities(c: EntitiesCmd) -> anyhow::Result<()> {
    match c {
        EntitiesCmd::Annotate { input, out } => {
            let sentences = read_sentences(&input)?;
            let docs = HeuristicAnnotator::default().annotate(&sentences);
            jsonl::write_jsonl(&out, &docs)?;
        }
        EntitiesCmd::Classify {
            annotations,
            keywords,
            person_lexicon,
            gold,
            accuracy_out,
            no_pronoun_person_evidence,
            head_only_descriptors,
            out,
        } => {
            let docs = read_annotations(&annotations)?;
            let keywords = match &keywords {
                Some(d) => KeywordSets::load_dir(d)?,
                None => KeywordSets::bundled(),
            };
            let lex = match &person_lexicon {
                Some(d) => PersonLexicon::load_dir(d)?,
                None => PersonLexicon::bundled(),
            };
            let opts = ClassifyOptions {
                pronoun_person_evidence: !no_pronoun_person_evidence,
                head_only_descriptors,
                ..ClassifyOptions::default()
            };
            let (records, stats) = classify_documents(&docs, &keywords, &lex, &opts, gold.is_some())?;
            log::info!("{} chains, {} persons", stats.chains, stats.persons);
            if let Some(g) = &gold {
                let rows = eval_classification(&records, &read_gold(g)?)?;
                match &accuracy_out {
                    Some(p) => write_accuracy_csv(&rows, create(p)?)?,
                    None => write_accuracy_csv(&rows, std::io::stdout().lock())?,
                }
            }
            jsonl::write_jsonl(&out, &records)?;
        }
    }
    Ok(())
}

fn persons(path: &Path) -> anyhow::Result<Vec<EntityRecord>> {
    Ok(read_records(path)?.into_iter().filter(|r| r.is_person).collect())
}

fn split_by_period(records: &[EntityRecord], manifest: &PeriodManifest) -> BTreeMap<String, Vec<EntityRecord>> {
    let lookup = manifest.period_of();
    let mut out: BTreeMap<String, Vec<EntityRecord>> =
        manifest.0.keys().map(|p| (p.clone(), Vec::new())).collect();
    for r in records {
        if let Some(p) = lookup.get(r.doc_id.as_str()) {
            out.entry(p.to_string()).or_default().push(r.clone());
        }
    }
    out
}

fn cmd_pmi(a: PmiArgs) -> anyhow::Result<()> {
    let records = persons(&a.entities)?;
    let all = counts_from_records(&records)?;
    let (coords, excluded) = plane_coordinates::<f64>(&all, a.min_support);
    log::info!("{} descriptors placed, {excluded} below support", coords.len());
    let mut rows = vec![(None, coords)];
    let mut tables: BTreeMap<String, CountTable> = BTreeMap::new();
    if let Some(p) = &a.periods {
        for (period, rs) in split_by_period(&records, &PeriodManifest::load(p)?) {
            let t = counts_from_records(&rs).unwrap_or_default();
            rows.push((Some(period.clone()), plane_coordinates::<f64>(&t, a.min_support).0));
            tables.insert(period, t);
        }
    }
    write_plane_csv(&rows, create(&a.out)?)?;
    if let Some(out) = &a.trajectories_out {
        if tables.is_empty() {
            bail!(Error::Config("--trajectories-out needs --periods".into()));
        }
        let words = if a.words.is_empty() {
            rows[0].1.iter().map(|c| c.descriptor.clone()).collect()
        } else {
            a.words.clone()
        };
        write_trajectory_csv(&pmi_temporal::<f64>(&tables, &words, a.min_support), create(out)?)?;
    }
    Ok(())
}

fn cmd_lexicon(a: LexiconArgs) -> anyhow::Result<()> {
    let lexica = match &a.lexdir {
        Some(d) => ValueLexicon::load_dir(d)?,
        None => ValueLexicon::bundled(),
    };
    let records = persons(&a.entities)?;
    let mut rows = association_grid::<f64>(&descriptor_lists(&records), &lexica, None);
    if let Some(p) = &a.periods {
        for (period, rs) in split_by_period(&records, &PeriodManifest::load(p)?) {
            rows.extend(association_grid::<f64>(&descriptor_lists(&rs), &lexica, Some(&period)));
        }
    }
    write_grid_csv(&rows, create(&a.out)?)?;
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<()> {
    let mut spec = PlantSpec::load(&a.spec)?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let corpus = generate(&spec, a.sentences)?;
    corpus.write_to_dir(&a.out)?;
    jsonl::write_json(&a.out.join("spec.json"), &spec)?;
    Ok(())
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let cfg = PipelineConfig::load(&a.config)?;
    if a.dry_run {
        println!("configuration valid (hash {})", cfg.hash());
        return Ok(());
    }
    let manifest = run_pipeline(&cfg)?;
    for s in &manifest.stages {
        log::info!("{}: {} ms", s.name, s.wall_ms);
    }
    println!("{}", cfg.output_dir.join(histbias::pipeline::MANIFEST_FILE).display());
    Ok(())
}

fn cmd_plotdata(a: PlotdataArgs) -> anyhow::Result<()> {
    let summary = emit_plotdata(&a.results, &a.out)?;
    for (name, why) in &summary.skipped {
        eprintln!("skipped {name}: {why}");
    }
    for name in &summary.written {
        println!("{}", a.out.join(name).display());
    }
    Ok(())
}

/// 2 for unusable input or configuration, 3 for failures while computing.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Config(_) | Error::InvalidRule { .. } | Error::Parse { .. } | Error::InvalidInput(_) | Error::Json(_),
        ) => EXIT_VALIDATION,
        _ => EXIT_STAGE,
    }
}

/// The error chain, skipping causes whose text the outer message already carries.
fn report(err: &anyhow::Error) -> String {
    let mut msg = err.to_string();
    for cause in err.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg = format!("{msg}: {c}");
        }
    }
    msg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Tokenize(c) => cmd_tokenize(c),
        Command::Embed(c) => cmd_embed(c),
        Command::Stability(a) => cmd_stability(a),
        Command::Weat(a) => cmd_weat(a),
        Command::Entities(c) => cmd_entities(c),
        Command::Pmi(a) => cmd_pmi(a),
        Command::Lexicon(a) => cmd_lexicon(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Run(a) => cmd_run(a),
        Command::Plotdata(a) => cmd_plotdata(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", report(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
