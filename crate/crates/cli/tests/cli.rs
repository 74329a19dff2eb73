//! End-to-end tests driving the relprep binary: the full pipeline on a
//! small synthetic dataset, plus the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn relprep(out_root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relprep"))
        .arg("--out")
        .arg(out_root)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output, context: &str) {
    assert!(
        output.status.success(),
        "{context} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    assert_ok(
        &relprep(out, &["synth", "--n", "40", "--seed", "7", "--split", "train", "--image-size", "64"]),
        "synth train",
    );
    assert_ok(
        &relprep(out, &["synth", "--n", "16", "--seed", "8", "--split", "test", "--image-size", "64"]),
        "synth test",
    );
    assert!(out.join("datasets/train/annotations.json").is_file());

    for split in ["train", "test"] {
        for method in ["UnionWBB", "Union"] {
            assert_ok(
                &relprep(out, &["preprocess", "--method", method, "--split", split]),
                "preprocess",
            );
        }
    }
    assert!(out.join("datasets/train/Union-WB-B/manifest.csv").is_file());

    assert_ok(&relprep(out, &["train", "--method", "UnionWBB"]), "train");
    assert!(out.join("models/Union-WB-B.ckpt").is_file());

    assert_ok(
        &relprep(out, &["predict", "--method", "UnionWBB", "--split", "test"]),
        "predict",
    );
    let scores_path = out.join("scores/Union-WB-B-test.csv");
    assert!(scores_path.is_file());

    let evaluate = relprep(
        out,
        &["evaluate", "--method", "UnionWBB", "--split", "test", "--k", "1,2,3"],
    );
    assert_ok(&evaluate, "evaluate");
    let stdout = String::from_utf8_lossy(&evaluate.stdout);
    assert!(stdout.contains("R@1"), "evaluate output: {stdout}");
    assert!(out.join("reports/eval-Union-WB-B-test.csv").is_file());

    // Zero-shot is derived on the fly from train and test.
    assert_ok(
        &relprep(out, &["preprocess", "--method", "UnionWBB", "--split", "zero_shot"]),
        "preprocess zero_shot",
    );

    assert_ok(&relprep(out, &["report"]), "report");
    assert!(out.join("reports/report_methods.txt").is_file());
    assert!(out.join("reports/report_recall_grid.txt").is_file());

    // Tukey over a small synthetic runs file.
    let runs = out.join("runs.csv");
    fs::write(
        &runs,
        "architecture,method,run_index,recall\n\
         softmax32,Union-WB-B,0,98.0\n\
         softmax32,Union-WB-B,1,97.5\n\
         softmax32,Union-WB-B,2,98.5\n\
         softmax32,Union,0,35.0\n\
         softmax32,Union,1,36.0\n\
         softmax32,Union,2,34.5\n",
    )
    .unwrap();
    let tukey = relprep(out, &["tukey", "--runs", runs.to_str().unwrap()]);
    assert_ok(&tukey, "tukey");
    let table = String::from_utf8_lossy(&tukey.stdout);
    assert!(table.contains("Union-WB-B"), "{table}");
    assert!(out.join("reports/tukey.csv").is_file());

    // Error-tag taxonomy report.
    let tags = out.join("tags.csv");
    fs::write(
        &tags,
        "instance_id,category\n\
         a,AlternativePredicates\n\
         b,AlternativePredicates\n\
         c,Synonyms\n\
         d,DifferentPOV\n",
    )
    .unwrap();
    let report = relprep(out, &["report", "--error-tags", tags.to_str().unwrap()]);
    assert_ok(&report, "report with tags");
    assert!(String::from_utf8_lossy(&report.stdout).contains("50%"));

    // One manifest per artifact-producing invocation.
    let manifests = fs::read_dir(out.join("manifests")).unwrap().count();
    assert!(manifests >= 10, "expected >= 10 run manifests, got {manifests}");
}

#[test]
fn identical_invocations_produce_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        assert_ok(
            &relprep(&out, &["synth", "--n", "12", "--seed", "5", "--split", "train", "--image-size", "48"]),
            "synth",
        );
        assert_ok(
            &relprep(&out, &["preprocess", "--method", "BlurSigma3", "--split", "train"]),
            "preprocess",
        );
        assert_ok(&relprep(&out, &["train", "--method", "BlurSigma3"]), "train");
        digests.push((
            fs::read(out.join("datasets/train/annotations.json")).unwrap(),
            fs::read(out.join("datasets/train/Blur-Sigma3/manifest.csv")).unwrap(),
            fs::read(out.join("models/Blur-Sigma3.ckpt")).unwrap(),
        ));
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    let unknown_flag = relprep(out, &["synth", "--frobnicate"]);
    assert_eq!(unknown_flag.status.code(), Some(2));

    let bad_method = relprep(out, &["preprocess", "--method", "UnionXXL", "--split", "train"]);
    assert_eq!(bad_method.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_method.stderr).starts_with("error: "));

    let missing_input = relprep(out, &["train", "--method", "Union"]);
    assert_eq!(missing_input.status.code(), Some(2));

    let synth_zero_shot = relprep(out, &["synth", "--n", "4", "--split", "zero_shot"]);
    assert_eq!(synth_zero_shot.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_1_with_single_line_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_ok(
        &relprep(out, &["synth", "--n", "8", "--seed", "3", "--split", "test", "--image-size", "48"]),
        "synth",
    );
    assert_ok(
        &relprep(out, &["synth", "--n", "8", "--seed", "4", "--split", "train", "--image-size", "48"]),
        "synth",
    );

    // A scores file missing one instance: evaluate must exit 1 and name it.
    let scores = out.join("scores.csv");
    let mut text = String::from("instance_id,s0,s1,s2,s3\n");
    for i in 0..7 {
        text.push_str(&format!("synth_{i:05}.png#0,0.25,0.25,0.25,0.25\n"));
    }
    fs::write(&scores, text).unwrap();
    let evaluate = relprep(
        out,
        &["evaluate", "--method", "Union", "--split", "test", "--scores", scores.to_str().unwrap()],
    );
    assert_eq!(evaluate.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&evaluate.stderr);
    let error_lines: Vec<&str> = stderr.lines().filter(|l| l.starts_with("error: ")).collect();
    assert_eq!(error_lines.len(), 1, "stderr: {stderr}");
    assert!(
        error_lines[0].contains("synth_00007.png#0"),
        "error should name the missing instance: {stderr}"
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let config = out.join("relprep.conf");
    fs::write(&config, "n = 6\nseed = 9\nsplit = train\nimage-size = 48\n").unwrap();

    let from_config = Command::new(env!("CARGO_BIN_EXE_relprep"))
        .args(["--out"])
        .arg(out)
        .args(["--config"])
        .arg(&config)
        .args(["synth"])
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(from_config.status.success());
    let annotations = fs::read_to_string(out.join("datasets/train/annotations.json")).unwrap();
    assert_eq!(annotations.matches("predicate").count(), 6);

    // Flag overrides the config's n.
    let with_flag = Command::new(env!("CARGO_BIN_EXE_relprep"))
        .args(["--out"])
        .arg(out)
        .args(["--config"])
        .arg(&config)
        .args(["synth", "--n", "10"])
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(with_flag.status.success());
    let annotations = fs::read_to_string(out.join("datasets/train/annotations.json")).unwrap();
    assert_eq!(annotations.matches("predicate").count(), 10);
}
