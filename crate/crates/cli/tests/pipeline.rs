//! End-to-end runs of the `isrl` binary on generated fixtures.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_isrl");

fn isrl(cwd: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(cwd: &Path, args: &[&str]) -> String {
    let out = isrl(cwd, args);
    assert!(
        out.status.success(),
        "isrl {args:?} failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(cwd: &Path, args: &[&str]) -> String {
    let out = isrl(cwd, args);
    assert!(!out.status.success(), "isrl {args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&read(path)).unwrap()
}

/// A synthetic fixture, ingested, in a fresh directory.
fn fixture(frames: usize, documents: usize) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let (f, d) = (frames.to_string(), documents.to_string());
    ok(
        dir.path(),
        &["synth", "--out-dir", ".", "--frames", &f, "--documents", &d],
    );
    ok(dir.path(), &["--config", "pipeline.toml", "ingest"]);
    dir
}

const SMALL_SEPARATE: &[&str] = &[
    "--mode",
    "separate",
    "--word-dim",
    "8",
    "--label-dim",
    "4",
    "--epochs",
    "15",
];

fn train_small(dir: &Path, extra: &[&str]) {
    let mut args = vec!["--config", "pipeline.toml", "train"];
    args.extend_from_slice(SMALL_SEPARATE);
    args.extend_from_slice(extra);
    ok(dir, &args);
}

fn metric(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .parse()
        .unwrap()
}

#[test]
fn full_pipeline_resolves_the_synthetic_discourse() {
    let dir = fixture(300, 15);
    let d = dir.path();
    train_small(d, &[]);
    ok(d, &["--config", "pipeline.toml", "resolve"]);
    ok(
        d,
        &[
            "--config",
            "pipeline.toml",
            "evaluate",
            "--out",
            "metrics.txt",
            "--table",
            "table.txt",
        ],
    );

    let predictions = read(d.join("predictions.tsv"));
    assert_eq!(predictions.lines().count(), 15);
    assert!(predictions.lines().any(|l| l.ends_with("\tmodel")));
    assert!(predictions.lines().any(|l| l.ends_with("\tfallback")));
    let metrics = read(d.join("metrics.txt"));
    assert!(metric(&metrics, "overall.f1") > 0.5, "{metrics}");
    assert!(read(d.join("table.txt")).contains("overall"));

    let report = json(d.join("model.bin.report.json"));
    assert_eq!(report["epoch_mean_nll"].as_array().unwrap().len(), 15);

    for name in ["ingested.tsv", "model.bin", "predictions.tsv", "metrics.txt"] {
        let m = json(d.join(format!("{name}.manifest.json")));
        assert_eq!(m["tool"], "isrl");
        let outputs = m["outputs"].as_array().unwrap();
        assert!(outputs.iter().all(|o| o["sha256"].as_str().unwrap().len() == 64));
        let text = read(d.join(format!("{name}.manifest.json")));
        assert!(
            !text.contains("timestamp") && !text.contains("wall_time"),
            "{name} manifest is not reproducible"
        );
    }
}

#[test]
fn config_paths_resolve_against_the_config_directory() {
    let dir = fixture(120, 4);
    let elsewhere = tempfile::tempdir().unwrap();
    let config = dir.path().join("pipeline.toml");
    let mut args = vec!["--config", config.to_str().unwrap(), "train"];
    args.extend_from_slice(SMALL_SEPARATE);
    ok(elsewhere.path(), &args);
    assert!(dir.path().join("model.bin").exists());
    assert!(!elsewhere.path().join("model.bin").exists());
}

#[test]
fn same_seed_gives_identical_models() {
    let dir = fixture(150, 4);
    let d = dir.path();
    train_small(d, &["--model", "a.bin", "--seed", "5"]);
    train_small(d, &["--model", "b.bin", "--seed", "5"]);
    train_small(d, &["--model", "c.bin", "--seed", "6"]);
    let bytes = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(bytes("a.bin"), bytes("b.bin"));
    assert_ne!(bytes("a.bin"), bytes("c.bin"));
    let sha = |n: &str| json(d.join(format!("{n}.manifest.json")))["outputs"][0]["sha256"].clone();
    assert_eq!(sha("a.bin"), sha("b.bin"));
}

#[test]
fn joint_mode_trains_and_resolves() {
    let dir = fixture(150, 6);
    let d = dir.path();
    ok(
        d,
        &[
            "--config",
            "pipeline.toml",
            "train",
            "--mode",
            "joint",
            "--joint-dim",
            "8",
            "--epochs",
            "5",
        ],
    );
    let out = ok(d, &["--config", "pipeline.toml", "resolve", "--threads", "2"]);
    assert!(out.contains("queries     6"), "{out}");
}

/// A copy of the committed fixture, so runs never write into the source tree.
fn bundled() -> TempDir {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic");
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(&src).unwrap() {
        let path = entry.unwrap().path();
        std::fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
    }
    dir
}

#[test]
fn bundled_fixture_runs_end_to_end_with_defaults() {
    let dir = bundled();
    let d = dir.path();
    for step in [
        &["ingest"][..],
        &["train"],
        &["resolve"],
        &["evaluate", "--out", "metrics.txt"],
    ] {
        ok(d, &[&["--config", "pipeline.toml"][..], step].concat());
    }
    let report = json(d.join("model.bin.report.json"));
    let nll: Vec<f64> = report["epoch_mean_nll"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(nll.len(), 120);
    assert!(nll[119] < nll[0]);
    let manifest = json(d.join("model.bin.manifest.json"));
    assert_eq!(manifest["config"]["model"]["word_dim"], 50);
    assert_eq!(manifest["config"]["model"]["label_dim"], 16);
    let metrics = read(d.join("metrics.txt"));
    assert!(metric(&metrics, "overall.f1") >= 0.9, "{metrics}");
}

#[test]
fn synth_reproduces_the_bundled_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "synth",
            "--out-dir",
            "synthetic",
            "--frames",
            "200",
            "--documents",
            "20",
        ],
    );
    let committed = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic");
    for name in [
        "frames.tsv",
        "documents.jsonl",
        "queries.tsv",
        "gold.tsv",
        "lexicon.tsv",
        "triples.tsv",
        "pipeline.toml",
    ] {
        assert_eq!(
            read(d.join("synthetic").join(name)),
            read(committed.join(name)),
            "{name}"
        );
    }
    assert_eq!(
        read(d.join("synthetic/frames.tsv.manifest.json")),
        read(committed.join("frames.tsv.manifest.json"))
    );
}

#[test]
fn selpref_keeps_lines_and_wider_beams_never_lose_mass() {
    let dir = fixture(200, 2);
    let d = dir.path();
    train_small(d, &[]);
    ok(d, &["--config", "pipeline.toml", "selpref", "--out", "k1.tsv"]);
    ok(
        d,
        &["--config", "pipeline.toml", "selpref", "--out", "k3.tsv", "--k", "3"],
    );
    let triples = read(d.join("triples.tsv"));
    let (k1, k3) = (read(d.join("k1.tsv")), read(d.join("k3.tsv")));
    assert_eq!(k1.lines().count(), triples.lines().count());
    for ((t, a), b) in triples.lines().zip(k1.lines()).zip(k3.lines()) {
        assert!(a.starts_with(t) && b.starts_with(t));
        let score = |l: &str| l.rsplit('\t').next().unwrap().parse::<f64>().unwrap();
        assert!(score(b) >= score(a) - 1e-12, "{a} vs {b}");
    }
}

#[test]
fn selpref_oracle_column_on_a_small_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("frames.tsv"),
        "#form=surface\nf1\teat\tkid:A0:1\tapple:A1:2\nf2\teat\tkid:A0:1\tpear:A1:2\nf3\tdrive\tman:A0:1\tcar:A1:2\n",
    )
    .unwrap();
    std::fs::write(
        d.join("triples.tsv"),
        "eat\tkid\tA0\neat\tpear\tA1\ndrive\tcar\tA1\nfly\tkid\tA0\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "train",
            "--frames",
            "frames.tsv",
            "--model",
            "m.bin",
            "--min-count",
            "1",
            "--mode",
            "joint",
            "--joint-dim",
            "6",
            "--epochs",
            "3",
        ],
    );
    let common = [
        "selpref",
        "--model",
        "m.bin",
        "--triples",
        "triples.tsv",
        "--depth",
        "3",
    ];
    ok(d, &[&common[..], &["--out", "o.tsv", "--oracle", "--k", "8"]].concat());
    for line in read(d.join("o.tsv")).lines() {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 5, "{line}");
        let (pruned, exhaustive): (f64, f64) = (cols[3].parse().unwrap(), cols[4].parse().unwrap());
        assert!((pruned - exhaustive).abs() < 1e-9, "{line}");
    }
    let last = read(d.join("o.tsv")).lines().last().unwrap().to_owned();
    assert!(
        last.ends_with("\t0.0000000000\t0.0000000000"),
        "unknown predicate scores 0: {last}"
    );
}

#[test]
fn baseline_only_needs_no_model() {
    let dir = fixture(50, 10);
    let d = dir.path();
    ok(d, &["--config", "pipeline.toml", "resolve", "--baseline-only"]);
    let predictions = read(d.join("predictions.tsv"));
    assert_eq!(predictions.lines().count(), 10);
    for line in predictions.lines() {
        assert!(line.ends_with("\tfallback") || line.ends_with("\tnone"), "{line}");
    }
    assert!(predictions.lines().any(|l| l.ends_with("\tfallback")));
}

#[test]
fn resolve_without_a_model_is_an_error() {
    let dir = fixture(50, 3);
    let d = dir.path();
    let err = fails(d, &["--config", "pipeline.toml", "resolve"]);
    assert!(err.starts_with("error: kind=input message="), "{err}");
    let err = fails(
        d,
        &[
            "resolve",
            "--documents",
            "documents.jsonl",
            "--queries",
            "queries.tsv",
            "--out",
            "p.tsv",
        ],
    );
    assert!(err.starts_with("error: kind=usage message="), "{err}");
}

#[test]
fn evaluate_perfect_and_half_credit_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("gold.tsv"),
        "d:1:1:sale:A1\t0:7\nd:2:1:sale:A0\t1:4\nd:3:2:trip:A0\t2:1\nd:4:2:trip:A1\t3:0;3:5\nd:5:1:sale:A0\t\n",
    )
    .unwrap();
    std::fs::write(
        d.join("perfect.tsv"),
        "d:1:1:sale:A1\td:0:7\nd:2:1:sale:A0\td:1:4\nd:3:2:trip:A0\td:2:1\nd:4:2:trip:A1\td:3:5\nd:5:1:sale:A0\tUNFILLED\n",
    )
    .unwrap();
    // One hit and one miss against four filled gold positions.
    std::fs::write(
        d.join("half.tsv"),
        "d:1:1:sale:A1\td:0:7\nd:2:1:sale:A0\td:1:5\nd:3:2:trip:A0\tUNFILLED\n",
    )
    .unwrap();

    let table = ok(
        d,
        &[
            "evaluate",
            "--gold",
            "gold.tsv",
            "--predictions",
            "perfect.tsv",
            "--out",
            "m.txt",
        ],
    );
    assert!(table.contains("overall") && table.contains("trip"), "{table}");
    let m = read(d.join("m.txt"));
    for key in ["overall.precision", "overall.recall", "overall.f1"] {
        assert_eq!(metric(&m, key), 1.0, "{key}");
    }

    ok(
        d,
        &[
            "evaluate",
            "--gold",
            "gold.tsv",
            "--predictions",
            "half.tsv",
            "--out",
            "m.txt",
        ],
    );
    let m = read(d.join("m.txt"));
    assert_eq!(metric(&m, "overall.precision"), 0.5);
    assert_eq!(metric(&m, "overall.recall"), 0.25);
    assert_eq!(metric(&m, "overall.f1"), 0.3333);
}

#[test]
fn evaluate_rejects_duplicate_gold_keys() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("gold.tsv"), "k:0:0:x:A0\t0:1\nk:0:0:x:A0\t0:2\n").unwrap();
    std::fs::write(d.join("pred.tsv"), "k:0:0:x:A0\td:0:1\n").unwrap();
    let err = fails(
        d,
        &[
            "evaluate",
            "--gold",
            "gold.tsv",
            "--predictions",
            "pred.tsv",
            "--out",
            "m.txt",
        ],
    );
    assert!(err.starts_with("error: kind=evaluate message="), "{err}");
}

#[test]
fn verify_passes_and_catches_an_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let quick = ["verify", "--models", "2", "--dim", "4", "--oracle-models", "6"];
    let out = ok(d, &[&quick[..], &["--out", "good.json"]].concat());
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 2, "{out}");
    assert_eq!(json(d.join("good.json"))["gradient_pass"], true);

    let err = fails(
        d,
        &[&quick[..], &["--out", "bad.json", "--inject-gradient-fault"]].concat(),
    );
    assert!(err.contains("kind=verification"), "{err}");
    let report = json(d.join("bad.json"));
    assert_eq!(report["gradient_pass"], false);
    assert!(report["max_relative_error"].as_f64().unwrap() > 1e-3);
}

#[test]
fn empty_corpus_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("empty.conll"), "").unwrap();
    let err = fails(
        d,
        &[
            "ingest",
            "--corpus",
            "empty.conll",
            "--frames",
            "f.tsv",
            "--vocab",
            "v.txt",
        ],
    );
    assert!(err.starts_with("error: kind=input message="), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.toml"), "[model]\nhidden = 3\n").unwrap();
    let err = fails(d, &["--config", "bad.toml", "verify"]);
    assert!(err.starts_with("error: kind=config message="), "{err}");
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = isrl(dir.path(), &["train", "--epochs", "many"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: kind=usage message="));
}

#[test]
fn help_documents_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let train = ok(dir.path(), &["train", "--help"]);
    for needle in ["default: 120", "default: 50", "default: 16", "default: separate"] {
        assert!(train.contains(needle), "train --help lacks {needle:?}\n{train}");
    }
    let resolve = ok(dir.path(), &["resolve", "--help"]);
    for needle in ["default: 0.0003", "default: 3", "default: 1"] {
        assert!(resolve.contains(needle), "resolve --help lacks {needle:?}\n{resolve}");
    }
}
