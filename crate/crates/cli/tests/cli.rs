use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use beamadapt::nn::Checkpoint;
use serde_json::Value;
use tempfile::TempDir;

fn beamadapt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamadapt")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = beamadapt(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(args: &[&str]) -> i32 {
    beamadapt(args).status.code().unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self { dir: tempfile::tempdir().unwrap() };
        ws.write("src.json", r#"{"preset":"rayleigh","m":4,"k":4,"p_dbm":25}"#);
        ws.write("tgt.json", r#"{"preset":"large-scale","m":4,"k":4,"p_dbm":25}"#);
        ws.write(
            "train.json",
            r#"{"train":{"max_epochs":2,"max_outer_steps":3,"inner_steps":2,"batch_size":5,"adapt_steps":4},"tasks":10,"support":5,"query":5}"#,
        );
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }

    fn write(&self, name: &str, text: &str) {
        fs::write(self.path(name), text).unwrap();
    }

    fn gen(&self, config: &str, out: &str, count: usize) {
        ok(&["gen-data", "--config", &self.s(config), "--out", &self.s(out), "--count", &count.to_string(), "--seed", "1"]);
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_count_is_a_config_error() {
    let ws = Workspace::new();
    assert_eq!(code(&["gen-data", "--config", &ws.s("src.json"), "--out", &ws.s("x"), "--count", "0", "--seed", "1"]), 2);
}

#[test]
fn missing_and_malformed_inputs_exit_2() {
    let ws = Workspace::new();
    assert_eq!(code(&["gen-data", "--config", &ws.s("nope.json"), "--out", &ws.s("x"), "--count", "3", "--seed", "1"]), 2);
    ws.write("bad.json", "{ not json");
    assert_eq!(code(&["gen-data", "--config", &ws.s("bad.json"), "--out", &ws.s("x"), "--count", "3", "--seed", "1"]), 2);
    ws.write("unknown.json", r#"{"preset":"martian","m":4,"k":4,"p_dbm":25}"#);
    assert_eq!(code(&["gen-data", "--config", &ws.s("unknown.json"), "--out", &ws.s("x"), "--count", "3", "--seed", "1"]), 2);
    assert_eq!(code(&["eval", "--checkpoint", &ws.s("none.ck"), "--test-data", &ws.s("none"), "--report", &ws.s("r")]), 2);
    assert_eq!(code(&["train", "--method", "bogus", "--data", &ws.s("x"), "--out", &ws.s("y")]), 2);
}

#[test]
fn absurd_learning_rate_exits_4() {
    let ws = Workspace::new();
    ws.gen("src.json", "src.jsonl", 30);
    ws.write("lr.json", r#"{"train":{"alpha":1e300,"max_epochs":3}}"#);
    let args = ["train", "--method", "joint", "--data", &ws.s("src.jsonl"), "--config", &ws.s("lr.json"), "--out", &ws.s("x.ck")];
    assert_eq!(code(&args), 4);
}

#[test]
fn flags_override_config_and_are_recorded() {
    let ws = Workspace::new();
    ws.gen("src.json", "src.jsonl", 30);
    let out = ok(&[
        "train", "--method", "joint", "--data", &ws.s("src.jsonl"), "--config", &ws.s("train.json"), "--out",
        &ws.s("j.ck"), "--seed", "77",
    ]);
    let header = Checkpoint::inspect(&ws.path("j.ck")).unwrap();
    assert_eq!(header.settings["config"]["train"]["seed"], 77);
    assert_eq!(header.settings["config"]["train"]["max_epochs"], 2);
    assert_eq!(header.settings["method"], "joint");
    assert!(header.settings["config"]["train"].get("workers").is_none());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"seed\": 77"));
}

#[test]
fn finetune_only_moves_the_output_layer() {
    let ws = Workspace::new();
    ws.gen("src.json", "src.jsonl", 40);
    ws.gen("tgt.json", "tgt.jsonl", 25);
    let cfg = ws.s("train.json");
    ok(&["train", "--method", "pretrain", "--data", &ws.s("src.jsonl"), "--config", &cfg, "--out", &ws.s("pre.ck")]);
    ok(&[
        "adapt", "--method", "finetune", "--checkpoint", &ws.s("pre.ck"), "--adapt-data", &ws.s("tgt.jsonl"), "--config",
        &cfg, "--out", &ws.s("ft.ck"), "--metrics", &ws.s("ft.csv"),
    ]);
    let pre = Checkpoint::read(&ws.path("pre.ck")).unwrap().model;
    let ft = Checkpoint::read(&ws.path("ft.ck")).unwrap();
    assert_eq!(ft.scenario, "large-scale");
    let fc = pre.params.fc_indices();
    for (i, (a, b)) in pre.params.tensors().iter().zip(ft.model.params.tensors()).enumerate() {
        assert_eq!(fc.contains(&i), a != b, "{}", pre.params.names()[i]);
    }
    assert_eq!(pre.running, ft.model.running);
    let csv = fs::read_to_string(ws.path("ft.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn too_few_adaptation_samples_is_rejected() {
    let ws = Workspace::new();
    ws.gen("src.json", "src.jsonl", 30);
    ws.gen("tgt.json", "tgt.jsonl", 10);
    ok(&["train", "--method", "joint", "--data", &ws.s("src.jsonl"), "--config", &ws.s("train.json"), "--out", &ws.s("j.ck")]);
    let args = ["adapt", "--method", "meta-adapt", "--checkpoint", &ws.s("j.ck"), "--adapt-data", &ws.s("tgt.jsonl"), "--out", &ws.s("a.ck")];
    assert_eq!(code(&args), 2);
}

#[test]
fn eval_report_columns_and_timing_switch() {
    let ws = Workspace::new();
    ws.gen("src.json", "src.jsonl", 30);
    ok(&["train", "--method", "joint", "--data", &ws.s("src.jsonl"), "--config", &ws.s("train.json"), "--out", &ws.s("j.ck")]);
    let eval = |report: &str, timings: bool| {
        let mut args = vec!["eval", "--checkpoint", "", "--test-data", "", "--report", ""];
        let (ck, data, rep) = (ws.s("j.ck"), ws.s("src.jsonl"), ws.s(report));
        args[2] = &ck;
        args[4] = &data;
        args[6] = &rep;
        if timings {
            args.push("--timings");
        }
        ok(&args);
        read_json(&ws.path(report))
    };
    let plain = eval("plain.json", false);
    let results = &plain["results"];
    for key in ["count", "mean_min_sinr_db", "optimal_mean_min_sinr_db", "mean_ratio_to_optimal", "min_ratio_to_optimal"] {
        assert!(results.get(key).is_some(), "missing {key}");
    }
    assert!(results.get("per_channel_ms").is_none());
    assert_eq!(results["count"], 30);
    let ratio = results["mean_ratio_to_optimal"].as_f64().unwrap();
    assert!(ratio > 0.0 && ratio <= 1.0 + 1e-9);
    assert!(eval("timed.json", true)["results"].get("per_channel_ms").is_some());
}

#[test]
fn solve_single_user_gets_full_power() {
    let ws = Workspace::new();
    ws.write("one.json", r#"{"h_re":[[0.6,0.8]],"h_im":[[0.0,0.0]],"sigma2":[0.5],"power":3.0}"#);
    let out = ok(&["solve", "--instance-json", &ws.s("one.json")]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["q"][0].as_f64().unwrap() - 3.0).abs() < 1e-12);
    // |h|² P / σ² = 6
    assert!((doc["balanced_sinr"].as_f64().unwrap() - 6.0).abs() < 1e-9);

    ws.write("both.json", r#"{"h_re":[[1.0]],"h_im":[[0.0]],"power":1.0,"p_dbm":0.0}"#);
    assert_eq!(code(&["solve", "--instance-json", &ws.s("both.json")]), 2);
    ws.write("ragged.json", r#"{"h_re":[[1.0,0.0],[1.0]],"h_im":[[0.0,0.0],[0.0]],"power":1.0}"#);
    assert_eq!(code(&["solve", "--instance-json", &ws.s("ragged.json")]), 2);
}

#[test]
fn online_single_strategy_run() {
    let ws = Workspace::new();
    ws.gen("src.json", "src.jsonl", 30);
    ok(&["train", "--method", "meta", "--data", &ws.s("src.jsonl"), "--config", &ws.s("train.json"), "--out", &ws.s("m.ck")]);
    ws.write(
        "schedule.json",
        r#"{"segments":[{"scenario":{"preset":"winner-outdoor","m":4,"k":4,"p_dbm":25},"slots":2},
            {"scenario":{"preset":"v2i-freeway","m":4,"k":4,"p_dbm":25},"slots":2}],
            "test_per_slot":3,"meta":{"outer_iters":1,"n_task":3,"n_in":1,"n_ad":1}}"#,
    );
    let args = [
        "online", "--schedule", &ws.s("schedule.json"), "--strategies", "online-meta", "--meta-checkpoint", &ws.s("m.ck"),
        "--report", &ws.s("r.csv"), "--summary", &ws.s("s.json"),
    ];
    ok(&args);
    let csv = fs::read_to_string(ws.path("r.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "slot,scenario,strategy,mean-min-SINR-dB,adaptation-ms");
    assert_eq!(lines.len(), 1 + 4);
    assert!(lines[1..].iter().all(|l| l.contains(",online-meta,") && l.ends_with(',')));
    let summary = read_json(&ws.path("s.json"));
    assert_eq!(summary["segment_means"].as_array().unwrap().len(), 2);

    let mut bad = args.map(str::to_string);
    bad[4] = "online-meta,psychic".into();
    let bad: Vec<&str> = bad.iter().map(String::as_str).collect();
    assert_eq!(code(&bad), 2);
}
