use std::path::Path;
use std::process::{Command, Output};

fn ridgenet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ridgenet"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_training_csv(path: &Path, rows: usize) {
    let mut s = String::from("x1,x2,y\n");
    for i in 0..rows {
        let a = -0.9 + 1.8 * i as f64 / (rows - 1) as f64;
        let b = (0.7 * i as f64).sin() * 0.8;
        s.push_str(&format!("{a},{b},{}\n", a * b + 0.5 * a));
    }
    std::fs::write(path, s).unwrap();
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn fit_then_predict_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_training_csv(&p.join("train.csv"), 10);
    let fit = ridgenet(
        &[
            "fit",
            "--input",
            "train.csv",
            "--model",
            "m.json",
            "--seed",
            "3",
        ],
        p,
    );
    assert!(fit.status.success(), "{}", stderr(&fit));
    let summary = String::from_utf8_lossy(&fit.stdout);
    assert!(summary.contains("coefficient audit   passed"), "{summary}");
    assert!(summary.contains("features J"));

    let pred = ridgenet(
        &[
            "predict",
            "--input",
            "train.csv",
            "--model",
            "m.json",
            "--output",
            "p.csv",
        ],
        p,
    );
    assert!(pred.status.success(), "{}", stderr(&pred));
    let text = std::fs::read_to_string(p.join("p.csv")).unwrap();
    assert!(text.contains("# seed=3"));
    assert!(text.contains("# model_config="));
    let rows = data_lines(&text);
    assert_eq!(rows[0], "prediction");
    assert_eq!(rows.len(), 11);

    // the reloaded model predicts exactly what a second reload predicts
    let again = ridgenet(&["predict", "--input", "train.csv", "--model", "m.json"], p);
    assert_eq!(String::from_utf8_lossy(&again.stdout), text);
}

#[test]
fn smooth_estimator_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_training_csv(&p.join("train.csv"), 12);
    std::fs::write(
        p.join("run.json"),
        r#"{"schema": 1, "estimator": "smooth", "input": "train.csv", "model": "s.json"}"#,
    )
    .unwrap();
    let fit = ridgenet(&["fit", "--config", "run.json"], p);
    assert!(fit.status.success(), "{}", stderr(&fit));
    let model = std::fs::read_to_string(p.join("s.json")).unwrap();
    assert!(model.contains("\"kind\": \"smooth\""));
}

#[test]
fn predictions_respect_truncation_and_repeat_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("t.csv"), "x1,y\n-0.5,50\n0,60\n0.5,70\n").unwrap();
    std::fs::write(
        p.join("run.json"),
        r#"{"schema": 1, "estimator": "smooth",
            "smooth": {"max_degree": 1, "resolution": 2, "scale": 1e6, "half_width": 1.0,
                       "penalty": 1e-6, "beta": 5.0}}"#,
    )
    .unwrap();
    let fit = ridgenet(
        &[
            "fit", "--config", "run.json", "--input", "t.csv", "--model", "m.json",
        ],
        p,
    );
    assert!(fit.status.success(), "{}", stderr(&fit));
    std::fs::write(p.join("q.csv"), "x1\n0.25\n0.25\n-1\n").unwrap();
    let out = ridgenet(&["predict", "--input", "q.csv", "--model", "m.json"], p);
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let vals: Vec<f64> = data_lines(&text)[1..]
        .iter()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 3);
    assert_eq!(vals[0].to_bits(), vals[1].to_bits());
    assert!(vals.iter().all(|v| v.abs() <= 5.0));
    // 17 significant digits
    assert!(data_lines(&text)[1].split('e').next().unwrap().len() >= 18);
}

#[test]
fn empty_input_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_training_csv(&p.join("train.csv"), 10);
    assert!(
        ridgenet(&["fit", "--input", "train.csv", "--model", "m.json"], p)
            .status
            .success()
    );
    std::fs::write(p.join("empty.csv"), "x1,x2\n").unwrap();
    let out = ridgenet(&["predict", "--input", "empty.csv", "--model", "m.json"], p);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        data_lines(&String::from_utf8_lossy(&out.stdout)),
        ["prediction"]
    );
}

#[test]
fn input_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("noy.csv"), "x1,x2\n1,2\n").unwrap();
    let out = ridgenet(&["fit", "--input", "noy.csv", "--model", "m.json"], p);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("\"y\""), "{}", stderr(&out));

    std::fs::write(p.join("bad.csv"), "x1,y\n0.1,1\n0.2,oops\n").unwrap();
    let out = ridgenet(&["fit", "--input", "bad.csv", "--model", "m.json"], p);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let out = ridgenet(&["fit", "--input", "bad.csv"], p);
    assert!(stderr(&out).contains("--model"));
}

#[test]
fn oversized_feature_count_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_training_csv(&p.join("train.csv"), 10);
    std::fs::write(
        p.join("run.json"),
        r#"{"schema": 1, "estimator": "smooth", "max_features": 10}"#,
    )
    .unwrap();
    let out = ridgenet(
        &[
            "fit",
            "--config",
            "run.json",
            "--input",
            "train.csv",
            "--model",
            "m.json",
        ],
        p,
    );
    assert!(!out.status.success());
    // (M+1)^2 · C(4, 2) = 25 · 6
    assert!(stderr(&out).contains("J = 150"), "{}", stderr(&out));
    assert!(!p.join("m.json").exists());
}

#[test]
fn dimension_mismatch_fails_predict() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_training_csv(&p.join("train.csv"), 10);
    assert!(
        ridgenet(&["fit", "--input", "train.csv", "--model", "m.json"], p)
            .status
            .success()
    );
    std::fs::write(p.join("q.csv"), "x1\n0.1\n").unwrap();
    let out = ridgenet(&["predict", "--input", "q.csv", "--model", "m.json"], p);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("dimension mismatch"));
}

#[test]
fn config_schema_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("run.json"), r#"{"schema": 2}"#).unwrap();
    let out = ridgenet(&["approx-check", "--config", "run.json"], p);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("schema 2"));
}

#[test]
fn quick_approx_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ridgenet(
        &["approx-check", "--quick", "--output", "a.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 16);
    assert!(rows[1..].iter().all(|r| r.ends_with(",pass")));
    for block in ["f_id", "f_sq", "f_mult", "f_relu", "f_hat"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(block)).count(), 3);
    }
}

#[test]
fn small_bench_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let bench = r#"{"schema": 1, "workers": 1, "bench": {
        "targets": ["m1"], "noises": [0.05], "methods": ["constant", "neighbor"],
        "reps": 3, "normalizer_reps": 5, "n": 30, "eval_n": 200, "seed": 1,
        "proj_neural": {"max_degree": 2, "box_half_width": 1.0, "scale": 1e6, "directions": 4,
                        "resolution_grid": [2], "trials": 2, "penalty": 1.0, "selection": "penalized"},
        "smooth_neural": {"max_degree": 2, "half_width": 1.0, "scale": 1e6,
                          "resolution_grid": [1], "penalty": 1.0, "max_features": 100}}}"#;
    std::fs::write(p.join("b.json"), bench).unwrap();
    let out = ridgenet(
        &[
            "bench", "--config", "b.json", "--seed", "9", "--output", "r.csv",
        ],
        p,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(p.join("r.csv")).unwrap();
    assert!(csv.starts_with("# seed=9\n"));
    assert!(csv.contains("# config="));
    assert_eq!(data_lines(&csv).len(), 3);
    assert!(p.join("r.md").exists());
}

#[test]
fn rate_rejects_bad_grid() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("r.json"),
        r#"{"schema": 1, "rate": {"n_grid": [10, 20], "seeds_per_n": 1, "noise_sd": 0.05,
            "direction": [0.6, 0.8], "trials": 2, "max_degree": 2, "resolution_factor": 1.0,
            "smoothness": 2.0, "scale": 1e6, "box_half_width": 1.0, "penalty": 1.0,
            "eval_n": 50, "seed": 0}}"#,
    )
    .unwrap();
    let out = ridgenet(&["rate", "--config", "r.json"], p);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("n grid"));
}

#[test]
fn zero_workers_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = ridgenet(&["approx-check", "--quick", "--workers", "0"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("workers"));
}
