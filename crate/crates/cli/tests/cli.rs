use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn histbias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_histbias"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn core_fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&histbias(&["bogus"])), 2);
    assert_eq!(code(&histbias(&["weat"])), 2);
    assert_eq!(code(&histbias(&["run", "--config", "/definitely/not/here.json"])), 2);
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let docs = dir.path().join("docs.jsonl");
    std::fs::write(&docs, "{\"id\": \"a\", \"source\": \"s\", \"year\": 1800, \"text\": \"ok\"}\nnot json\n").unwrap();
    let o = histbias(&["ingest", "--in", s(&docs), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn computation_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let tokens = dir.path().join("t.txt");
    std::fs::write(&tokens, "a b c\n").unwrap();
    let o = histbias(&["embed", "train", "--in", s(&tokens), "--out", s(&dir.path().join("m.vec"))]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error: degenerate input"), "{err}");
}

fn run_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for name in ["config.json", "periods.json"] {
        std::fs::copy(core_fixtures().join("pipeline").join(name), dir.path().join(name)).unwrap();
    }
    let weat = dir.path().join("weat");
    std::fs::create_dir(&weat).unwrap();
    for e in std::fs::read_dir(core_fixtures().join("pipeline/weat")).unwrap() {
        let p = e.unwrap().path();
        std::fs::copy(&p, weat.join(p.file_name().unwrap())).unwrap();
    }
    let spec = core_fixtures().join("synth/standard.json");
    let o = histbias(&["synth", "--spec", s(&spec), "--sentences", "2000", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir
}

#[test]
fn dry_run_validates_without_writing() {
    let dir = run_dir();
    let config = dir.path().join("config.json");
    let o = histbias(&["run", "--config", s(&config), "--dry-run"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("configuration valid (hash "));
    assert!(!dir.path().join("out").exists());
    std::fs::remove_file(dir.path().join("annotations.jsonl")).unwrap();
    assert_eq!(code(&histbias(&["run", "--config", s(&config), "--dry-run"])), 2);
}

#[test]
fn run_then_plotdata() {
    let dir = run_dir();
    let o = histbias(&["run", "--config", s(&dir.path().join("config.json"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = dir.path().join("out/manifest.json");
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), manifest.to_str().unwrap());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["complete"], true);
    let plots = dir.path().join("plots");
    let o = histbias(&["plotdata", "--results", s(&dir.path().join("out")), "--out", s(&plots)]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_dir(&plots).unwrap().count() > 0);
}
