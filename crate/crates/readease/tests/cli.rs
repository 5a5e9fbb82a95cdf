//! End-to-end behavior of the `readease` binary: exit codes, stage
//! composition, degenerate corpora, and byte-level reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn readease(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_readease"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn pipeline_without_centroids_skips_geo_and_regression() {
    let dir = tempfile::tempdir().unwrap();
    let out = readease(&[
        "pipeline",
        "--input",
        fixture("messages.jsonl").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("scores.csv").exists());
    assert!(dir.path().join("histogram.csv").exists());
    assert!(!dir.path().join("zcta_aggregates.csv").exists());
    assert!(!dir.path().join("regression.json").exists());
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["regression"], "skipped: no centroid table");
    assert!(summary["geo"].is_null());
}

#[test]
fn pipeline_with_no_geo_tagged_messages_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(
        &corpus,
        "{\"id\":\"a\",\"text\":\"plain words here\",\"lang\":\"en\"}\n\
         {\"id\":\"b\",\"text\":\"more plain words\",\"lang\":\"en\"}\n",
    )
    .unwrap();
    let out = readease(&[
        "pipeline",
        "--input",
        corpus.to_str().unwrap(),
        "--centroids",
        fixture("centroids.csv").to_str().unwrap(),
        "--education",
        fixture("education.csv").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(summary["regression"], "skipped: no ZCTA groups");
    assert_eq!(summary["counts"]["geo_scored"].as_u64(), Some(0));
    // aggregates file exists with just the header
    let aggregates = std::fs::read_to_string(dir.path().join("out/zcta_aggregates.csv")).unwrap();
    assert_eq!(aggregates, "zcta_id,lat,lon,n,mean_re,se\n");
    assert!(!dir.path().join("out/regression.json").exists());
}

#[test]
fn missing_input_exits_1_and_bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = readease(&[
        "score",
        "--input",
        "/nonexistent/corpus.jsonl",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "missing input should be exit 1");

    let out = readease(&["score", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2), "unknown flag should be exit 2");

    let out = readease(&[
        "pipeline",
        "--input",
        fixture("messages.jsonl").to_str().unwrap(),
        "--geo-threshold",
        "-5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "negative threshold should be exit 2");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("threshold"), "stderr should name the bad option: {err}");
}

#[test]
fn fatal_table_errors_leave_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("centroids.csv");
    std::fs::write(
        &bad,
        "GEOID,INTPTLAT,INTPTLONG\n10001,40.75,-74.0\n10001,41.0,-74.5\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = readease(&[
        "pipeline",
        "--input",
        fixture("messages.jsonl").to_str().unwrap(),
        "--centroids",
        bad.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("duplicate"), "stderr: {err}");
    assert!(err.contains("row 3"), "stderr should pinpoint the row: {err}");
    assert!(
        !out_dir.join("scores.csv").exists(),
        "no output files should be created when a table fails to load"
    );
}

#[test]
fn lang_none_disables_filtering() {
    let dir = tempfile::tempdir().unwrap();
    let out = readease(&[
        "score",
        "--input",
        fixture("messages.jsonl").to_str().unwrap(),
        "--lang",
        "none",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("0 filtered by lang"),
        "expected no language filtering: {stdout}"
    );
}

#[test]
fn lines_format_numbers_messages_and_has_no_language() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    std::fs::write(&corpus, "first line here\nsecond one\n\nfourth line\n").unwrap();

    // Plain lines carry no language tag, so the default filter drops all.
    let out = readease(&[
        "score",
        "--input",
        corpus.to_str().unwrap(),
        "--format",
        "lines",
        "--out",
        dir.path().join("filtered").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("4 filtered by lang"));

    let out = readease(&[
        "score",
        "--input",
        corpus.to_str().unwrap(),
        "--format",
        "lines",
        "--lang",
        "none",
        "--out",
        dir.path().join("all").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let scores = std::fs::read_to_string(dir.path().join("all/scores.csv")).unwrap();
    let ids: Vec<&str> = scores
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    // line 3 is empty (no countable words), so it scores as null
    assert_eq!(ids, vec!["1", "2", "4"]);
}

#[test]
fn standalone_stages_compose_like_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    let staged = dir.path().join("staged");
    let run = |args: &[&str]| {
        let out = readease(args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&[
        "pipeline",
        "--input",
        fixture("messages.jsonl").to_str().unwrap(),
        "--centroids",
        fixture("centroids.csv").to_str().unwrap(),
        "--education",
        fixture("education.csv").to_str().unwrap(),
        "--out",
        full.to_str().unwrap(),
    ]);

    run(&[
        "score",
        "--input",
        fixture("messages.jsonl").to_str().unwrap(),
        "--out",
        staged.to_str().unwrap(),
    ]);
    run(&[
        "histogram",
        "--scores",
        staged.join("scores.csv").to_str().unwrap(),
        "--out",
        staged.to_str().unwrap(),
    ]);
    run(&[
        "hashtag-delta",
        "--input",
        fixture("messages.jsonl").to_str().unwrap(),
        "--out",
        staged.to_str().unwrap(),
    ]);
    run(&[
        "geo-aggregate",
        "--input",
        fixture("messages.jsonl").to_str().unwrap(),
        "--centroids",
        fixture("centroids.csv").to_str().unwrap(),
        "--out",
        staged.to_str().unwrap(),
    ]);
    run(&[
        "regress",
        "--aggregates",
        staged.join("zcta_aggregates.csv").to_str().unwrap(),
        "--education",
        fixture("education.csv").to_str().unwrap(),
        "--out",
        staged.to_str().unwrap(),
    ]);

    // Stage outputs produced from files equal the single-pass outputs,
    // except the regression, which re-reads display-rounded aggregates.
    for name in [
        "scores.csv",
        "histogram.csv",
        "hashtag_delta.csv",
        "hashtag_delta_histogram.csv",
        "zcta_aggregates.csv",
    ] {
        let a = std::fs::read(full.join(name)).unwrap();
        let b = std::fs::read(staged.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between pipeline and staged runs");
    }
    let full_fit = read_json(&full.join("regression.json"));
    let staged_fit = read_json(&staged.join("regression.json"));
    assert_eq!(full_fit["fit"]["n_zcta"], staged_fit["fit"]["n_zcta"]);
    let (a, b) = (
        full_fit["fit"]["slope"].as_f64().unwrap(),
        staged_fit["fit"]["slope"].as_f64().unwrap(),
    );
    assert!(
        (a - b).abs() < 1e-2,
        "staged slope {b} too far from pipeline slope {a} for 3-decimal inputs"
    );
}

#[test]
fn reruns_are_byte_identical_except_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let (first, second) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&first, &second] {
        let out = readease(&[
            "pipeline",
            "--input",
            fixture("messages.jsonl").to_str().unwrap(),
            "--centroids",
            fixture("centroids.csv").to_str().unwrap(),
            "--education",
            fixture("education.csv").to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for name in [
        "scores.csv",
        "hashtag_delta.csv",
        "histogram.csv",
        "hashtag_delta_histogram.csv",
        "zcta_aggregates.csv",
        "binned_medians.csv",
        "density_grid.csv",
        "regression.json",
    ] {
        let a = std::fs::read(first.join(name)).unwrap();
        let b = std::fs::read(second.join(name)).unwrap();
        assert_eq!(a, b, "{name} not reproducible");
    }
    let (mut a, mut b) = (
        read_json(&first.join("summary.json")),
        read_json(&second.join("summary.json")),
    );
    for v in [&mut a, &mut b] {
        let obj = v.as_object_mut().unwrap();
        obj.remove("unix_timestamp");
        obj.remove("elapsed_seconds");
        obj.remove("messages_per_second");
    }
    assert_eq!(a, b, "summaries differ beyond timing");
}
