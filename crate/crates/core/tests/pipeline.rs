use std::path::{Path, PathBuf};

use histbias::pipeline::{config_hash, emit_plotdata, measure_outputs, run_pipeline, PipelineConfig, RunManifest, MANIFEST_FILE};
use histbias::synth::{generate, PlantSpec};
use histbias::Error;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let p = e.unwrap().path();
        let dest = to.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_dir(&p, &dest);
        } else {
            std::fs::copy(&p, &dest).unwrap();
        }
    }
}

/// Fixture config next to a freshly generated synthetic corpus.
fn workspace(sentences: usize) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixtures().join("pipeline"), dir.path());
    let spec = PlantSpec::load(&fixtures().join("synth/standard.json")).unwrap();
    generate(&spec, sentences).unwrap().write_to_dir(dir.path()).unwrap();
    dir
}

#[test]
fn full_run_is_deterministic_and_complete() {
    let dir = workspace(3_000);
    let cfg = PipelineConfig::load(&dir.path().join("config.json")).unwrap();
    let first = run_pipeline(&cfg).unwrap();
    assert!(first.complete && first.failed_stage.is_none());
    let names: Vec<&str> = first.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["ingest", "tokenize", "embed", "stability", "weat", "entities", "pmi", "lexicon"]);
    let outputs = measure_outputs(&cfg);
    assert_eq!(outputs.len(), 6);
    let listed: Vec<&String> = first.stages.iter().flat_map(|s| &s.outputs).collect();
    let read_all = || -> Vec<Vec<u8>> { outputs.iter().map(|p| std::fs::read(cfg.output_dir.join(p)).unwrap()).collect() };
    for p in &outputs {
        let name = p.to_string_lossy();
        assert!(listed.iter().any(|l| l.ends_with(name.as_ref())), "{name} missing from manifest");
    }
    let bytes = read_all();
    let second = run_pipeline(&cfg).unwrap();
    assert_eq!(read_all(), bytes);
    assert_eq!(first.seeds, second.seeds);
    assert_eq!(first.config_hash, second.config_hash);
    let on_disk = RunManifest::load(&cfg.output_dir.join(MANIFEST_FILE)).unwrap();
    assert_eq!(on_disk.stages.len(), second.stages.len());

    let plots = dir.path().join("plots");
    let summary = emit_plotdata(&cfg.output_dir, &plots).unwrap();
    assert!(!summary.written.is_empty());
}

#[test]
fn missing_lexicon_directory_fails_before_work() {
    let dir = workspace(50);
    let path = dir.path().join("config.json");
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    json["lexicon"] = serde_json::json!({ "dir": "no_such_lexicon" });
    std::fs::write(&path, serde_json::to_string_pretty(&json).unwrap()).unwrap();
    match PipelineConfig::load(&path) {
        Err(Error::Config(m)) => assert!(m.contains("no_such_lexicon"), "{m}"),
        other => panic!("{other:?}"),
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn hash_ignores_formatting_and_location() {
    let text = std::fs::read_to_string(fixtures().join("pipeline/config.json")).unwrap();
    let compact = serde_json::to_string(&serde_json::from_str::<serde_json::Value>(&text).unwrap()).unwrap();
    assert_eq!(config_hash(&text).unwrap(), config_hash(&compact).unwrap());
    let changed = text.replace("\"seed\": 3", "\"seed\": 4");
    assert_ne!(config_hash(&text).unwrap(), config_hash(&changed).unwrap());
    let a = workspace(10);
    let b = workspace(10);
    let ha = PipelineConfig::load(&a.path().join("config.json")).unwrap().hash();
    let hb = PipelineConfig::load(&b.path().join("config.json")).unwrap().hash();
    assert_eq!(ha, hb);
    assert_eq!(ha, config_hash(&text).unwrap());
}

#[test]
fn bad_configs_are_rejected() {
    assert!(matches!(PipelineConfig::parse("{\"corpus\": 1}"), Err(Error::Config(_))));
    assert!(matches!(
        PipelineConfig::parse("{\"corpus\": \"a\", \"output_dir\": \"b\", \"seed\": 1, \"typo\": 2}"),
        Err(Error::Config(_))
    ));
    let dir = workspace(10);
    let path = dir.path().join("config.json");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("\"workers\": 1", "\"workers\": 0")).unwrap();
    assert!(PipelineConfig::load(&path).is_err());
    std::fs::write(&path, text.replace("\"runs\": 2", "\"runs\": 1")).unwrap();
    assert!(PipelineConfig::load(&path).is_err());
}
