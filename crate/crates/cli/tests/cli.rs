use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shiftadjust")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.trim().parse().unwrap()).collect())
        .collect()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

const CLAMP_INSTANCE: &str = "class_0,class_1\n0.99,0.01\n0.10,0.90\n";

#[test]
fn additive_adjust_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", CLAMP_INSTANCE);
    let out_path = dir.path().join("a.csv");
    let out = run(&[
        "adjust", "--predictions", p.to_str().unwrap(), "--target-dist", "0.2,0.8", "--method", "additive", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let a = read_matrix(&out_path);
    let want = [[0.645, 0.355], [-0.245, 1.245]];
    for (row, w) in a.iter().zip(want) {
        for (v, w) in row.iter().zip(w) {
            assert!((v - w).abs() < 1e-12);
        }
    }
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_path.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["method"], "additive");
    assert_eq!(sidecar["bounded"], false);
}

#[test]
fn bounded_adjust_clamps_the_negative_entry() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", CLAMP_INSTANCE);
    let out_path = dir.path().join("a.csv");
    let out = run(&[
        "adjust", "--predictions", p.to_str().unwrap(), "--target-dist", "0.2,0.8", "--method", "bga", "--divergence",
        "brier", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let a = read_matrix(&out_path);
    let want = [[0.4, 0.6], [0.0, 1.0]];
    for (row, w) in a.iter().zip(want) {
        for (v, w) in row.iter().zip(w) {
            assert!((v - w).abs() < 1e-9);
        }
    }
}

#[test]
fn adjust_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", CLAMP_INSTANCE);
    let o = dir.path().join("a.csv");
    let base = ["adjust", "--predictions", p.to_str().unwrap(), "--target-dist", "0.2,0.8", "--out", o.to_str().unwrap()];
    let with = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        run(&args)
    };
    assert_eq!(code(&with(&["--method", "bga"])), 2);
    assert_eq!(code(&with(&["--method", "ppa"])), 2);
    assert_eq!(code(&with(&["--method", "nope"])), 2);
    assert_eq!(code(&with(&["--method", "ppa", "--old-dist", "0.5,0.5"])), 0);
}

#[test]
fn multiplicative_rejects_boundary_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", "class_0,class_1\n1.0,0.0\n0.5,0.5\n");
    let o = dir.path().join("a.csv");
    let out = run(&[
        "adjust", "--predictions", p.to_str().unwrap(), "--target-dist", "0.4,0.6", "--method", "multiplicative",
        "--out", o.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 5);
}

#[test]
fn evaluate_reports_mean_loss() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", "class_0,class_1\n0.8,0.2\n");
    let y = write(dir.path(), "y.csv", "label\n0\n");
    let out = run(&["evaluate", "--predictions", p.to_str().unwrap(), "--labels", y.to_str().unwrap(), "--divergence", "brier"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["mean_loss"].as_f64().unwrap() - 0.08).abs() < 1e-12);
    assert_eq!(v["n"], 1);
    assert_eq!(v["k"], 2);

    let perfect = write(dir.path(), "q.csv", "class_0,class_1\n1,0\n");
    let out = run(&["evaluate", "--predictions", perfect.to_str().unwrap(), "--labels", y.to_str().unwrap(), "--divergence", "brier"]);
    assert_eq!(stdout_json(&out)["mean_loss"].as_f64().unwrap(), 0.0);
    let out = run(&["evaluate", "--predictions", perfect.to_str().unwrap(), "--labels", y.to_str().unwrap(), "--divergence", "logloss"]);
    assert_eq!(code(&out), 5);
}

fn generate(dir: &Path, name: &str, n: &str, features: &str) -> PathBuf {
    let path = dir.join(name);
    let out = run(&["generate", "--n", n, "--k", "2", "--features", features, "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn shift_is_deterministic_and_close_to_target() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "data", "300", "2");
    let shifted = |name: &str| {
        let target = dir.path().join(name);
        let out = run(&[
            "shift", "--dataset", data.to_str().unwrap(), "--method", "prior", "--epsilon", "0.2", "--seed", "8", "--out",
            target.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (target, stdout_json(&out))
    };
    let (a, ja) = shifted("a");
    let (b, jb) = shifted("b");
    assert_eq!(ja, jb);
    for file in ["predictions.csv", "labels.csv", "features.csv"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap());
    }
    // the achieved majority share sits within one instance of the target
    let labels = std::fs::read_to_string(data.join("labels.csv")).unwrap();
    let original: Vec<usize> = labels.lines().skip(1).map(|l| l.trim().parse().unwrap()).collect();
    let ones = original.iter().filter(|&&c| c == 1).count() as f64 / original.len() as f64;
    let (maj, share) = if ones > 0.5 { (1, ones) } else { (0, 1.0 - ones) };
    let achieved = ja["class_distribution"][maj].as_f64().unwrap();
    let n = ja["n"].as_f64().unwrap();
    assert!((achieved - (share - 0.2)).abs() <= 1.0 / n);
}

#[test]
fn shift_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "data", "100", "1");
    std::fs::remove_file(data.join("features.csv")).unwrap();
    let o = dir.path().join("o");
    let out = run(&["shift", "--dataset", data.to_str().unwrap(), "--method", "covariate", "--epsilon", "0.2", "--out", o.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let out = run(&["shift", "--dataset", data.to_str().unwrap(), "--method", "prior", "--epsilon", "0.9", "--out", o.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

fn experiment_config(dir: &Path, body: serde_json::Value) -> PathBuf {
    write(dir, "config.json", &body.to_string())
}

#[test]
fn experiment_rows_cover_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "data", "300", "2");
    let cfg = experiment_config(
        dir.path(),
        serde_json::json!({
            "dataset_dir": "data",
            "adjusters": ["ppa", "bga"],
            "divergences": ["brier"],
            "shift_methods": ["prior", "concept"],
            "epsilon_range": [0.1, 0.5],
            "deltas": [0.0],
            "replicates": 3,
            "seed": 1,
            "output": "results.csv",
        }),
    );
    let out = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    for r in &rows {
        if &r[col("adjuster")] == "bga" && &r[col("status")] == "ok" {
            assert!(r[col("proportional_reduction")].parse::<f64>().unwrap() >= -1e-9);
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.csv.summary.json")).unwrap()).unwrap();
    // one cell per adjuster, divergence, tercile and delta
    assert_eq!(summary["cells"].as_array().unwrap().len(), 2 * 3);
}

#[test]
fn experiment_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "data", "50", "1");
    let cfg = experiment_config(
        dir.path(),
        serde_json::json!({
            "dataset_dir": "data", "adjusters": ["bga"], "divergences": ["brier"], "shift_methods": [],
            "epsilon_range": [0.1, 0.5], "deltas": [0.0], "replicates": 1, "seed": 0, "output": "r.csv",
        }),
    );
    assert_eq!(code(&run(&["experiment", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["experiment", "--config", "/nonexistent/config.json"])), 2);
    assert_eq!(code(&run(&["--jobs", "0", "experiment", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn oracle_agrees_with_bounded_adjustment() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", CLAMP_INSTANCE);
    let out = run(&["oracle", "--predictions", p.to_str().unwrap(), "--target-dist", "0.2,0.8", "--divergence", "brier"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    // (0.59^2 * 2 + 0.1^2 * 2) / 2
    assert!((v["objective"].as_f64().unwrap() - 0.3581).abs() < 1e-6);
}
