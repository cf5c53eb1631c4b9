use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"version = 1
[synth]
years = 1
buildings = 12
[model]
season_window = 168
[fit]
max_outer_iterations = 5
[fit.inner]
max_iterations = 60
"#;

struct Workdir {
    dir: TempDir,
}

impl Workdir {
    fn new() -> Self {
        let w = Workdir { dir: tempfile::tempdir().unwrap() };
        fs::write(w.path("small.toml"), SMALL).unwrap();
        w
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_helios")).current_dir(self.dir.path()).args(args).output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }

    /// Small world split into 50 training days and 1500 test hours.
    fn small_split(&self, seed: &str) {
        self.ok(&["--config", "small.toml", "--seed", seed, "generate", "--out", "all.csv"]);
        let text = self.read("all.csv");
        let lines: Vec<&str> = text.lines().collect();
        let train = lines[..=1200].join("\n") + "\n";
        let test = [&lines[..1], &lines[1201..2701]].concat().join("\n") + "\n";
        fs::write(self.path("train.csv"), train).unwrap();
        fs::write(self.path("test.csv"), test).unwrap();
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn generate_counts_rows_and_repeats_itself() {
    let w = Workdir::new();
    let stdout = w.ok(&["generate", "--years", "2", "--seed", "7", "--out", "a.csv", "--labels", "labels.csv"]);
    assert!(stdout.contains("seed 7") && stdout.contains("rows 17520"), "{stdout}");
    let a = w.read("a.csv");
    assert_eq!(a.lines().count(), 17521);
    assert_eq!(w.read("labels.csv").lines().next().unwrap(), "timestamp,space,hot_water,loss,noise,active_fraction");
    w.ok(&["generate", "--years", "2", "--seed", "7", "--out", "b.csv"]);
    assert_eq!(a, w.read("b.csv"));
    w.ok(&["generate", "--years", "2", "--seed", "8", "--out", "c.csv"]);
    assert_ne!(a, w.read("c.csv"));
}

#[test]
fn config_and_usage_errors_exit_1() {
    let w = Workdir::new();
    let out = w.run(&["generate", "--years", "0", "--out", "x.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("synth.years"));
    assert_eq!(code(&w.run(&["train", "--no-such-flag"])), 1);
    assert_eq!(code(&w.run(&["train", "--variant", "other"])), 1);
    // no data path anywhere
    assert_eq!(code(&w.run(&["train", "--model", "m.json"])), 1);
    fs::write(w.path("bad.toml"), "version = 2\n").unwrap();
    let out = w.run(&["--config", "bad.toml", "config", "dump"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
    assert_eq!(code(&w.run(&["--help"])), 0);
}

#[test]
fn io_errors_exit_2() {
    let w = Workdir::new();
    assert_eq!(code(&w.run(&["train", "--data", "missing.csv", "--model", "m.json"])), 2);
    assert_eq!(code(&w.run(&["--config", "missing.toml", "config", "dump"])), 2);
    fs::write(w.path("broken.csv"), "timestamp,heat_load\n2019-01-01T00:00:00Z,1\n").unwrap();
    assert_eq!(code(&w.run(&["train", "--data", "broken.csv", "--model", "m.json"])), 2);
}

#[test]
fn train_writes_model_and_monotone_trace() {
    let w = Workdir::new();
    w.small_split("3");
    let out = w.run(&["--config", "small.toml", "train", "--data", "train.csv", "--model", "m.json"]);
    // five outer iterations are not enough to converge
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!w.path("m.json").exists());
    w.ok(&["--config", "small.toml", "train", "--data", "train.csv", "--model", "m.json", "--allow-nonconverged"]);
    assert!(w.path("m.json").exists());
    let trace = w.read("m.trace.csv");
    assert!(trace.starts_with("iteration,objective,max_delta,inner_iterations\n"));
    let values: Vec<f64> = rows(&trace).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(values.len(), 6);
    assert!(values.windows(2).all(|p| p[1] >= p[0] - 1e-6), "{values:?}");

    w.ok(&[
        "--config",
        "small.toml",
        "train",
        "--data",
        "train.csv",
        "--model",
        "nc.json",
        "--variant",
        "nc",
        "--allow-nonconverged",
    ]);
    let expert = w.read("m.json");
    let nc = w.read("nc.json");
    assert_ne!(expert, nc);
    let nc = helios_core::model::load_model(w.path("nc.json")).unwrap();
    // no contextual information: zero certainty everywhere
    for set in [&nc.contexts.setpoint, &nc.contexts.season, &nc.contexts.hot_water] {
        assert!(set.contexts.iter().all(|c| c.certainty == 0.0));
    }
}

#[test]
fn forecast_and_decompose_emit_additive_rows() {
    let w = Workdir::new();
    w.small_split("4");
    w.ok(&["--config", "small.toml", "train", "--data", "train.csv", "--model", "m.json", "--allow-nonconverged"]);
    let test = w.read("test.csv");
    let exo: Vec<&str> = test.lines().take(13).collect();
    fs::write(w.path("exo.csv"), exo.join("\n") + "\n").unwrap();

    let out =
        w.ok(&["forecast", "--model", "m.json", "--history", "train.csv", "--exogenous", "exo.csv", "--horizon", "12"]);
    assert!(out.starts_with("timestamp,total,space,hot_water,loss\n"));
    let table = rows(&out);
    assert_eq!(table.len(), 12);
    for r in &table {
        let v: Vec<f64> = r[1..].iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[0], v[1] + v[2] + v[3]);
    }
    let out = w.run(&[
        "forecast",
        "--model",
        "m.json",
        "--history",
        "train.csv",
        "--exogenous",
        "exo.csv",
        "--horizon",
        "13",
    ]);
    assert_eq!(code(&out), 1);

    w.ok(&["decompose", "--model", "m.json", "--data", "test.csv", "--mode", "recursive", "--out", "dec.csv"]);
    // rows before the season window are not predicted
    assert_eq!(rows(&w.read("dec.csv")).len(), 1500 - 168);
}

fn evaluate(w: &Workdir, out: &str, extra: &[&str]) -> (String, String) {
    let mut args = vec![
        "--config",
        "small.toml",
        "evaluate",
        "--train",
        "train.csv",
        "--test",
        "test.csv",
        "--out-dir",
        out,
        "--allow-nonconverged",
    ];
    args.extend_from_slice(extra);
    w.ok(&args);
    (w.read(&format!("{out}/results.csv")), w.read(&format!("{out}/predictions.csv")))
}

#[test]
fn evaluate_reports_every_model() {
    let w = Workdir::new();
    w.small_split("5");
    let (results, predictions) = evaluate(&w, "out", &["--period", "hourly", "--period", "monthly"]);
    assert!(results.starts_with("model,period,horizon,count,r2,rmse,mae,mape,mape_skipped\n"));
    assert!(predictions.starts_with("model,origin,step,timestamp,actual,predicted\n"));
    let table = rows(&results);
    let names: Vec<&str> = table.iter().filter(|r| r[1] == "hourly").map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["HELIOS", "HELIOS-NC", "HELIOS-WC", "LR", "Ridge", "LASSO", "ARX"]);
    assert_eq!(table.iter().filter(|r| r[1] == "monthly").count(), 7);
    assert!(table.iter().all(|r| r[2] == "12"));
}

#[test]
fn train_and_evaluate_are_byte_identical_across_runs() {
    let w = Workdir::new();
    w.small_split("6");
    let train = ["--config", "small.toml", "train", "--data", "train.csv", "--allow-nonconverged", "--model"];
    w.ok(&[&train[..], &["m1.json"]].concat());
    w.ok(&[&train[..], &["m2.json"]].concat());
    assert_eq!(w.read("m1.json"), w.read("m2.json"));
    assert_eq!(w.read("m1.trace.csv"), w.read("m2.trace.csv"));
    let first = evaluate(&w, "run1", &["--variant", "expert"]);
    let second = evaluate(&w, "run2", &["--variant", "expert"]);
    assert_eq!(first, second);
}

#[test]
fn dumped_config_reproduces_the_run() {
    let w = Workdir::new();
    fs::write(w.path("dumped.toml"), w.ok(&["--config", "small.toml", "--seed", "9", "config", "dump"])).unwrap();
    w.ok(&["--config", "small.toml", "--seed", "9", "generate", "--out", "a.csv"]);
    w.ok(&["--config", "dumped.toml", "generate", "--out", "b.csv"]);
    assert_eq!(w.read("a.csv"), w.read("b.csv"));
    let again = w.ok(&["--config", "dumped.toml", "config", "dump"]);
    assert_eq!(again, w.read("dumped.toml"));
}

fn share_of_space(csv: &str) -> f64 {
    let (mut space, mut total) = (0.0, 0.0);
    for r in rows(csv) {
        total += r[1].parse::<f64>().unwrap();
        space += r[2].parse::<f64>().unwrap();
    }
    space / total
}

#[test]
fn default_run_puts_winter_load_on_space_heating() {
    let w = Workdir::new();
    w.ok(&["generate", "--out", "all.csv"]);
    w.ok(&["split", "--data", "all.csv", "--train", "train.csv", "--test", "test.csv"]);
    w.ok(&["train", "--data", "train.csv", "--model", "m.json"]);
    // first week of the second year
    let test = w.read("test.csv");
    let week: Vec<&str> = test.lines().take(1 + 168).collect();
    fs::write(w.path("week.csv"), week.join("\n") + "\n").unwrap();
    let out = w.ok(&[
        "forecast",
        "--model",
        "m.json",
        "--history",
        "train.csv",
        "--exogenous",
        "week.csv",
        "--horizon",
        "168",
    ]);
    let share = share_of_space(&out);
    assert!(share > 0.9, "space share {share}");
}
