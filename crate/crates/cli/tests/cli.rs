use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic_50x40.csv")
}

fn bmfpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmfpp"))
        .args(args)
        .env_remove("BMFPP_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A short chain keeps the integration tests quick.
fn train_args<'a>(data: &'a str, out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "train",
        "--data",
        data,
        "--out",
        out,
        "--k",
        "3",
        "--tau",
        "50",
        "--burn-in",
        "10",
        "--samples",
        "20",
        "--seed",
        "4",
        "--grid",
        "2x2",
    ];
    args.extend_from_slice(extra);
    args
}

#[test]
fn train_writes_checkpoint_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let data = fixture();
    let result = bmfpp(&train_args(s(&data), s(&out), &[]));
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    for f in ["manifest.json", "metrics.json", "report.json", "blocks.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    for f in ["grid.json", "block_0_0.json", "block_1_1.json"] {
        assert!(out.join("checkpoint").join(f).exists(), "{f}");
    }
    let manifest = json(&out.join("manifest.json"));
    let metrics = json(&out.join("metrics.json"));
    let report = json(&out.join("report.json"));
    let hash = manifest["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    for v in [&metrics, &report] {
        assert_eq!(v["config_hash"], hash);
        assert_eq!(v["seed"], 4);
    }
    assert_eq!(manifest["grid"], "2x2");
    assert_eq!(
        (manifest["n_rows"].as_u64(), manifest["n_cols"].as_u64()),
        (Some(50), Some(40))
    );
    assert_eq!(metrics["n_test"], 120);
    let rmse = metrics["rmse"].as_f64().unwrap();
    assert!(rmse.is_finite() && rmse > 0.0);
    let csv = std::fs::read_to_string(out.join("blocks.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("phase,i,j,rows,cols,nnz,sweeps,seconds")
    );
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn same_seed_gives_byte_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = bmfpp(&train_args(s(&data), s(&a), &["--workers", "1"]));
    let second = bmfpp(&train_args(s(&data), s(&b), &["--workers", "3"]));
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert_eq!(code(&second), 0, "{}", stderr(&second));
    let metrics = |d: &Path| std::fs::read(d.join("metrics.json")).unwrap();
    assert_eq!(metrics(&a), metrics(&b));

    // Rerunning into the same directory resumes every block and reproduces
    // the metrics again.
    let again = bmfpp(&train_args(s(&data), s(&a), &[]));
    assert!(stdout(&again).contains("(4 resumed)"), "{}", stdout(&again));
    assert_eq!(metrics(&a), metrics(&b));
}

#[test]
fn evaluate_reproduces_training_rmse() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    for predict in ["block", "aggregated"] {
        let out = dir.path().join(predict);
        let trained = bmfpp(&train_args(
            s(&data),
            s(&out),
            &["--predict", predict, "--clamp"],
        ));
        assert_eq!(code(&trained), 0, "{}", stderr(&trained));
        let evaluated = bmfpp(&["evaluate", "--checkpoint", s(&out)]);
        assert_eq!(code(&evaluated), 0, "{}", stderr(&evaluated));
        let metrics = json(&out.join("metrics.json"));
        let evaluation = json(&out.join("evaluation.json"));
        assert_eq!(evaluation["rmse"], metrics["rmse"], "{predict}");
        assert_eq!(evaluation["config_hash"], metrics["config_hash"]);
        assert_eq!(evaluation["summary_predictions"], 0);
        assert_eq!(evaluation["grid"], "2x2");
        let printed = format!("rmse {}", metrics["rmse"].as_f64().unwrap());
        assert!(stdout(&evaluated).contains(&printed));
    }
}

#[test]
fn evaluate_scores_other_cells_from_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let out = dir.path().join("run");
    assert_eq!(code(&bmfpp(&train_args(s(&data), s(&out), &[]))), 0);
    // The training ratings themselves were never query cells.
    let evaluated = bmfpp(&[
        "evaluate",
        "--checkpoint",
        s(&out),
        "--test",
        s(&data),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&evaluated), 0, "{}", stderr(&evaluated));
    let evaluation = json(&dir.path().join("evaluation.json"));
    assert_eq!(evaluation["n_test"], 600);
    let fallback = evaluation["summary_predictions"].as_u64().unwrap();
    assert!(fallback >= 480 && fallback < 600, "{fallback}");
}

#[test]
fn constant_ratings_with_clamping_reconstruct_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flat.csv");
    let mut text = String::from("row,col,value\n");
    for r in 0..12 {
        for c in 0..10 {
            if (r + c) % 3 != 0 {
                text.push_str(&format!("{r},{c},4\n"));
            }
        }
    }
    std::fs::write(&data, text).unwrap();
    let out = dir.path().join("run");
    let args = [
        "train",
        "--data",
        s(&data),
        "--out",
        s(&out),
        "--k",
        "2",
        "--burn-in",
        "2",
        "--samples",
        "3",
        "--clamp",
    ];
    assert_eq!(code(&bmfpp(&args)), 0);
    assert_eq!(json(&out.join("metrics.json"))["rmse"], 0.0);
}

#[test]
fn missing_data_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = dir.path().join("run");
    let result = bmfpp(&["train", "--data", s(&missing), "--out", s(&out)]);
    assert_eq!(code(&result), 2);
    assert!(stderr(&result).contains("does not exist"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn config_errors_are_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let out = dir.path().join("run");
    let bad_grid = bmfpp(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&out),
        "--grid",
        "2by2",
    ]);
    assert_eq!(code(&bad_grid), 1);
    let both = bmfpp(&[
        "train",
        "--data",
        s(&data),
        "--grid",
        "2x2",
        "--target-blocks",
        "4",
    ]);
    assert_eq!(code(&both), 1);
    let zero_k = bmfpp(&["train", "--data", s(&data), "--out", s(&out), "--k", "0"]);
    assert_eq!(code(&zero_k), 1);
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "data = \"x.csv\"\nlatent = 3\n").unwrap();
    let unknown = bmfpp(&["train", "--config", s(&config)]);
    assert_eq!(code(&unknown), 1);
    assert!(stderr(&unknown).contains("latent"));
}

#[test]
fn numerical_failure_is_exit_three_and_names_the_block() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let out = dir.path().join("run");
    let result = bmfpp(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&out),
        "--k",
        "2",
        "--tau",
        "1e308",
        "--burn-in",
        "1",
        "--samples",
        "1",
    ]);
    assert_eq!(code(&result), 3, "{}", stderr(&result));
    assert!(
        stderr(&result).contains("scheduler: block (0, 0)"),
        "{}",
        stderr(&result)
    );
}

#[test]
fn evaluate_rejects_mismatched_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let out = dir.path().join("run");
    assert_eq!(code(&bmfpp(&train_args(s(&data), s(&out), &[]))), 0);
    let other = dir.path().join("wide.mtx");
    std::fs::write(
        &other,
        "%%MatrixMarket matrix coordinate real general\n50 41 1\n1 41 2.0\n",
    )
    .unwrap();
    let result = bmfpp(&["evaluate", "--checkpoint", s(&out), "--test", s(&other)]);
    assert_eq!(code(&result), 2, "{}", stderr(&result));
    let csv_out_of_range = dir.path().join("far.csv");
    std::fs::write(&csv_out_of_range, "row,col,value\n60,1,1.0\n").unwrap();
    let result = bmfpp(&[
        "evaluate",
        "--checkpoint",
        s(&out),
        "--test",
        s(&csv_out_of_range),
    ]);
    assert_eq!(code(&result), 2, "{}", stderr(&result));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture(), dir.path().join("r.csv")).unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "data = \"r.csv\"\nout = \"from-config\"\nk = 2\nburn_in = 3\nsamples = 4\n\
         grid = \"1x2\"\nseed = 9\n",
    )
    .unwrap();
    let result = bmfpp(&["train", "--config", s(&config), "--grid", "2x1"]);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let manifest = json(&dir.path().join("from-config/manifest.json"));
    assert_eq!(manifest["grid"], "2x1");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["model"]["k"], 2);
}

#[test]
fn workers_default_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let out = dir.path().join("run");
    let result = Command::new(env!("CARGO_BIN_EXE_bmfpp"))
        .args(train_args(s(&data), s(&out), &[]))
        .env("BMFPP_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    assert_eq!(json(&out.join("report.json"))["report"]["workers"], 3);
    let bad = Command::new(env!("CARGO_BIN_EXE_bmfpp"))
        .args(train_args(s(&data), s(&out), &[]))
        .env("BMFPP_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 1);
}

#[test]
fn sweep_and_bench_emit_golden_headers() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let common = [
        "--data",
        s(&data),
        "--k",
        "2",
        "--burn-in",
        "2",
        "--samples",
        "3",
        "--seed",
        "1",
    ];
    let sweep_out = dir.path().join("sweep");
    let mut args = vec!["sweep", "--out", s(&sweep_out), "--grids", "1x1"];
    args.extend_from_slice(&common);
    let result = bmfpp(&args);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let csv = std::fs::read_to_string(sweep_out.join("sweep.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "I,J,seconds,rmse,aspect");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("1,1,"));
    assert_eq!(json(&sweep_out.join("sweep.json"))["seed"], 1);

    let bench_out = dir.path().join("bench");
    let mut args = vec![
        "bench",
        "--out",
        s(&bench_out),
        "--grid",
        "2x2",
        "--worker-counts",
        "1,2",
    ];
    args.extend_from_slice(&common);
    let result = bmfpp(&args);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let csv = std::fs::read_to_string(bench_out.join("scaling.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "workers,seconds,speedup,pareto");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,") && lines[1].split(',').nth(2) == Some("1"));
    assert!(lines[2].starts_with("2,"));
}

#[test]
fn convert_split_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture();
    let mtx = dir.path().join("r.mtx");
    let result = bmfpp(&["convert", "--data", s(&data), "--out", s(&mtx)]);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let text = std::fs::read_to_string(&mtx).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
    assert!(json(&dir.path().join("r.mtx.json"))["config_hash"].is_string());

    let split_dir = dir.path().join("split");
    let result = bmfpp(&[
        "split",
        "--data",
        s(&mtx),
        "--out",
        s(&split_dir),
        "--test-fraction",
        "0.25",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let manifest = json(&split_dir.join("split.json"));
    assert_eq!(
        (manifest["n_train"].as_u64(), manifest["n_test"].as_u64()),
        (Some(450), Some(150))
    );
    assert_eq!(manifest["seed"], 3);

    let result = bmfpp(&["stats", "--data", s(&mtx)]);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    let stats: Value = serde_json::from_str(&stdout(&result)).unwrap();
    assert_eq!(stats["n_rows"], 50);
    assert_eq!(stats["n_cols"], 40);
    assert_eq!(stats["n_ratings"], 600);

    // Train on the split files directly.
    let out = dir.path().join("run");
    let result = bmfpp(&[
        "train",
        "--data",
        s(&split_dir.join("train.csv")),
        "--test",
        s(&split_dir.join("test.csv")),
        "--out",
        s(&out),
        "--k",
        "2",
        "--burn-in",
        "2",
        "--samples",
        "3",
    ]);
    assert_eq!(code(&result), 0, "{}", stderr(&result));
    assert_eq!(json(&out.join("metrics.json"))["n_test"], 150);
}
