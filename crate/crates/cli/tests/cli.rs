use std::path::Path;
use std::process::{Command, Output};

fn sigmavol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigmavol"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, n: &str) -> std::path::PathBuf {
    let rv = dir.join("rv.csv");
    let out = sigmavol(&[
        "simulate", "--n", n, "--omega", "0.05", "--alpha", "0.1", "--beta", "0.85",
        "--seed", "3", "--rv-noise", "0.1", "--output", p(&dir.join("path.csv")),
        "--rv-output", p(&rv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    rv
}

#[test]
fn simulate_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let rv = simulate(dir.path(), "50");
    let path = std::fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert!(path.starts_with("t,ret,sigma2\n"));
    assert_eq!(path.lines().count(), 51);
    let rv = std::fs::read_to_string(rv).unwrap();
    assert!(rv.starts_with("date,rv,ret\n"));
    assert_eq!(rv.lines().count(), 51);
}

#[test]
fn rv_from_prices() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("prices.csv");
    let mut text = String::from("timestamp,price\n");
    for day in 0..3i64 {
        for minute in 0..31i64 {
            let t = 1_600_000_000 + day * 86_400 + minute * 60;
            text.push_str(&format!("{t},{}\n", 100.0 + (day * 31 + minute) as f64 * 0.01));
        }
    }
    std::fs::write(&prices, text).unwrap();
    let out_csv = dir.path().join("rv.csv");
    let out = sigmavol(&["rv", "--input", p(&prices), "--output", p(&out_csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rv = std::fs::read_to_string(out_csv).unwrap();
    assert_eq!(rv.lines().count(), 4);
}

#[test]
fn fit_then_forecast() {
    let dir = tempfile::tempdir().unwrap();
    let rv = simulate(dir.path(), "400");
    let model = dir.path().join("har.txt");
    let out = sigmavol(&[
        "fit", "--model", "har", "--input", p(&rv), "--output", p(&model), "--seed", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fc = dir.path().join("fc.csv");
    let out = sigmavol(&[
        "forecast", "--model", p(&model), "--input", p(&rv), "--last", "50", "--output", p(&fc),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rmse"));
    let text = std::fs::read_to_string(fc).unwrap();
    assert!(text.starts_with("date,prediction,target\n"));
    assert_eq!(text.lines().count(), 51);
}

fn write_config(dir: &Path, model: &str, extra: &str) -> std::path::PathBuf {
    let cfg = dir.join("exp.toml");
    std::fs::write(
        &cfg,
        format!(
            "seed = 4\nmodel = \"{model}\"\n[data]\nsource = \"simulate\"\nn = 700\n\
             omega = 0.05\nalpha = 0.1\nbeta = 0.85\n[train]\nhidden = 2\nepochs = 2\n\
             [output]\ndir = \"out\"\n{extra}"
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sigma-lstm", "");
    let report = dir.path().join("out/report.json");
    let forecasts = dir.path().join("out/forecasts.csv");
    let mut seen = Vec::new();
    for _ in 0..2 {
        let out = sigmavol(&["run", "--config", p(&cfg)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        seen.push((std::fs::read(&report).unwrap(), std::fs::read(&forecasts).unwrap()));
    }
    assert_eq!(seen[0], seen[1]);
    for f in ["loss_history.csv", "model.txt", "timing.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn grid_prints_leaderboard() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "lstm",
        "[grid]\nhidden = [2, 3]\nlearning_rate = [0.003]\nepochs = [1]\n",
    );
    let out = sigmavol(&["grid", "--config", p(&cfg), "--output-dir", p(&dir.path().join("g"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("grid #").count(), 2, "{stdout}");
    assert!(dir.path().join("g/report.json").exists());
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\nmodel = \"har\"\nbogus = 3\n").unwrap();
    let out = sigmavol(&["run", "--config", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[config]"));

    let cfg = write_config(dir.path(), "har", "");
    assert_eq!(sigmavol(&["grid", "--config", p(&cfg)]).status.code(), Some(2));

    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "date,rv,ret\nnot-a-date,1,\n").unwrap();
    let out = sigmavol(&[
        "fit", "--model", "har", "--input", p(&garbage), "--output", p(&dir.path().join("m")),
        "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = sigmavol(&[
        "simulate", "--n", "10", "--omega", "0.05", "--alpha", "0.5", "--beta", "0.6",
        "--seed", "1", "--output", p(&dir.path().join("x.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2), "nonstationary parameters are a config error");
}
