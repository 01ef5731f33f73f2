//! End-to-end checks of the `corrfuse` binary: exit codes, file formats,
//! and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/sample")
        .join(name)
}

fn corrfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrfuse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn run_estimate(dir: &Path, output: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(output);
    let mut args = vec![
        "estimate".to_string(),
        "--observations".into(),
        path_str(&sample("observations.csv")),
        "--labels".into(),
        path_str(&sample("labels.csv")),
        "--output".into(),
        path_str(&out),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let result = corrfuse(&argv);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    out
}

#[test]
fn estimate_reproduces_worked_profile_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let profile_path = run_estimate(dir.path(), "profile.json", &[]);
    let text = std::fs::read_to_string(&profile_path).unwrap();
    let profile: serde_json::Value = serde_json::from_str(&text).unwrap();
    let s1 = &profile["sources"][0];
    assert_eq!(s1["id"], "S1");
    assert!((s1["precision"].as_f64().unwrap() - 4.0 / 7.0).abs() < 1e-9);
    assert!((s1["recall"].as_f64().unwrap() - 4.0 / 6.0).abs() < 1e-9);
    assert!((s1["fpr"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    // The config echo sits alongside the profile.
    assert!(profile_path.with_extension("json.run.json").exists());

    let second = run_estimate(dir.path(), "profile2.json", &[]);
    assert_eq!(
        std::fs::read(&profile_path).unwrap(),
        std::fs::read(second).unwrap()
    );
}

#[test]
fn estimate_rejects_labels_for_unknown_triples() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.csv");
    std::fs::write(&labels, "triple_id,truth\nghost,true\n").unwrap();
    let out = corrfuse(&[
        "estimate",
        "--observations",
        &path_str(&sample("observations.csv")),
        "--labels",
        &path_str(&labels),
        "--output",
        &path_str(&dir.path().join("p.json")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn outcome_lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn fuse_independent_reproduces_worked_posterior() {
    let dir = tempfile::tempdir().unwrap();
    let profile = run_estimate(dir.path(), "profile.json", &[]);
    let outcomes = dir.path().join("outcomes.jsonl");
    let out = corrfuse(&[
        "fuse",
        "--observations",
        &path_str(&sample("observations.csv")),
        "--profile",
        &path_str(&profile),
        "--output",
        &path_str(&outcomes),
        "--engine",
        "independent",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines = outcome_lines(&outcomes);
    assert_eq!(lines.len(), 10);
    let t2 = lines.iter().find(|l| l["triple"] == "t2").unwrap();
    let p = t2["probability"].as_f64().unwrap();
    assert!((p - 0.09).abs() <= 0.01, "t2 probability {p}");
    assert_eq!(t2["label"], "false");
    assert_eq!(t2["engine"], "independent");
}

#[test]
fn fuse_elastic_level_zero_on_correlated_profile() {
    let dir = tempfile::tempdir().unwrap();
    let outcomes = dir.path().join("outcomes.jsonl");
    let out = corrfuse(&[
        "fuse",
        "--observations",
        &path_str(&sample("observations.csv")),
        "--profile",
        &path_str(&sample("profile_correlated.json")),
        "--output",
        &path_str(&outcomes),
        "--engine",
        "elastic",
        "--level",
        "0",
    ]);
    // Triples whose derived weights exceed 1 are reported and skipped; the
    // run still succeeds.
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines = outcome_lines(&outcomes);
    let t8 = lines.iter().find(|l| l["triple"] == "t8").unwrap();
    let mu = t8["mu"].as_f64().unwrap();
    assert!((mu - 0.60).abs() <= 0.02, "t8 mu {mu}");
}

#[test]
fn fuse_exact_cap_refusal_and_elastic_fallback() {
    let dir = tempfile::tempdir().unwrap();
    // Profile without joint entries: independent world, safe weights.
    let profile = run_estimate(dir.path(), "profile.json", &["--joints", "up-to-size=1"]);
    let outcomes = dir.path().join("outcomes.jsonl");
    let refuse = corrfuse(&[
        "fuse",
        "--observations",
        &path_str(&sample("observations.csv")),
        "--profile",
        &path_str(&profile),
        "--output",
        &path_str(&outcomes),
        "--engine",
        "exact",
        "--cap",
        "2",
    ]);
    assert_eq!(refuse.status.code(), Some(4));

    let fallback = corrfuse(&[
        "fuse",
        "--observations",
        &path_str(&sample("observations.csv")),
        "--profile",
        &path_str(&profile),
        "--output",
        &path_str(&outcomes),
        "--engine",
        "exact",
        "--cap",
        "2",
        "--allow-elastic-fallback",
    ]);
    assert!(
        fallback.status.success(),
        "{}",
        String::from_utf8_lossy(&fallback.stderr)
    );
    assert_eq!(outcome_lines(&outcomes).len(), 10);
}

#[test]
fn fuse_empty_observations_yields_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "triple_id,source_id\n").unwrap();
    let outcomes = dir.path().join("outcomes.jsonl");
    let out = corrfuse(&[
        "fuse",
        "--observations",
        &path_str(&empty),
        "--profile",
        &path_str(&sample("profile_correlated.json")),
        "--output",
        &path_str(&outcomes),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(std::fs::read_to_string(&outcomes).unwrap(), "");
}

#[test]
fn fuse_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let profile = run_estimate(dir.path(), "profile.json", &[]);
    let single = dir.path().join("single.jsonl");
    let multi = dir.path().join("multi.jsonl");
    for (path, threads) in [(&single, "1"), (&multi, "4")] {
        let out = corrfuse(&[
            "fuse",
            "--observations",
            &path_str(&sample("observations.csv")),
            "--profile",
            &path_str(&profile),
            "--output",
            &path_str(path),
            "--threads",
            threads,
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read(&single).unwrap(),
        std::fs::read(&multi).unwrap()
    );

    // CORRFUSE_THREADS is the fallback for --threads.
    let via_env = dir.path().join("env.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_corrfuse"))
        .env("CORRFUSE_THREADS", "2")
        .args([
            "fuse",
            "--observations",
            &path_str(&sample("observations.csv")),
            "--profile",
            &path_str(&profile),
            "--output",
            &path_str(&via_env),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(&single).unwrap(),
        std::fs::read(&via_env).unwrap()
    );
}

#[test]
fn synth_is_reproducible_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "synth".to_string(),
            "--output-dir".into(),
            path_str(out),
            "--sources".into(),
            "5".into(),
            "--triples".into(),
            "1000".into(),
            "--tf".into(),
            "0.5".into(),
            "--fr".into(),
            "0.75".into(),
            "--fp1".into(),
            "0.75".into(),
            "--fp2".into(),
            "0.25".into(),
            "--seed".into(),
            "7".into(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let argv = args(out);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        let result = corrfuse(&argv);
        assert!(
            result.status.success(),
            "{}",
            String::from_utf8_lossy(&result.stderr)
        );
    }
    for file in ["observations.csv", "labels.csv", "params.json"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file} differs"
        );
    }

    // Replica scenario: the three group columns are identical.
    let rep = dir.path().join("rep");
    let out = corrfuse(&[
        "synth",
        "--output-dir",
        &path_str(&rep),
        "--sources",
        "5",
        "--triples",
        "500",
        "--seed",
        "3",
        "--scenario",
        "replica:3",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(rep.join("observations.csv")).unwrap();
    let mut columns: std::collections::HashMap<&str, Vec<&str>> = Default::default();
    for line in text.lines().skip(1) {
        let (t, s) = line.split_once(',').unwrap();
        columns.entry(s).or_default().push(t);
    }
    assert_eq!(columns["S1"], columns["S2"]);
    assert_eq!(columns["S1"], columns["S3"]);

    // Zero triples is a validation failure.
    let bad = corrfuse(&[
        "synth",
        "--output-dir",
        &path_str(&dir.path().join("bad")),
        "--sources",
        "3",
        "--triples",
        "0",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn eval_scores_pipeline_and_flags_missing_labels() {
    let dir = tempfile::tempdir().unwrap();
    let profile = run_estimate(dir.path(), "profile.json", &[]);
    let outcomes = dir.path().join("outcomes.jsonl");
    let fuse = corrfuse(&[
        "fuse",
        "--observations",
        &path_str(&sample("observations.csv")),
        "--profile",
        &path_str(&profile),
        "--output",
        &path_str(&outcomes),
    ]);
    assert!(fuse.status.success());

    let metrics_path = dir.path().join("metrics.json");
    let eval = corrfuse(&[
        "eval",
        "--outcomes",
        &path_str(&outcomes),
        "--labels",
        &path_str(&sample("labels.csv")),
        "--output",
        &path_str(&metrics_path),
    ]);
    assert!(
        eval.status.success(),
        "{}",
        String::from_utf8_lossy(&eval.stderr)
    );
    let stdout = String::from_utf8_lossy(&eval.stdout);
    assert!(stdout.contains("precision"));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&metrics_path).unwrap()).unwrap();
    let f1 = metrics["f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));

    let missing = dir.path().join("missing.csv");
    std::fs::write(&missing, "triple_id,truth\nt1,true\n").unwrap();
    let fail = corrfuse(&[
        "eval",
        "--outcomes",
        &path_str(&outcomes),
        "--labels",
        &path_str(&missing),
    ]);
    assert_eq!(fail.status.code(), Some(3));
}

#[test]
fn rerun_reproduces_results_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let profile = run_estimate(dir.path(), "profile.json", &["--joints", "up-to-size=1"]);
    let outcomes = dir.path().join("outcomes.jsonl");
    let fuse = corrfuse(&[
        "fuse",
        "--observations",
        &path_str(&sample("observations.csv")),
        "--profile",
        &path_str(&profile),
        "--output",
        &path_str(&outcomes),
        "--engine",
        "aggressive",
    ]);
    assert!(
        fuse.status.success(),
        "{}",
        String::from_utf8_lossy(&fuse.stderr)
    );
    let first = std::fs::read(&outcomes).unwrap();

    let echo = dir.path().join("outcomes.jsonl.run.json");
    assert!(echo.exists());
    std::fs::remove_file(&outcomes).unwrap();
    let rerun = corrfuse(&["rerun", "--config", &path_str(&echo)]);
    assert!(
        rerun.status.success(),
        "{}",
        String::from_utf8_lossy(&rerun.stderr)
    );
    assert_eq!(std::fs::read(&outcomes).unwrap(), first);
}

#[test]
fn parse_errors_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "triple_id,source_id\nt1\n").unwrap();
    let out = corrfuse(&[
        "estimate",
        "--observations",
        &path_str(&bad),
        "--labels",
        &path_str(&sample("labels.csv")),
        "--output",
        &path_str(&dir.path().join("p.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.csv"), "stderr: {stderr}");
}
