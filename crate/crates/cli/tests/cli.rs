//! End-to-end CLI checks: every command runs, reproduces its outputs byte
//! for byte under a fixed seed, and fails cleanly on malformed input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn softae() -> Command {
    Command::new(env!("CARGO_BIN_EXE_softae"))
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Tiny config: fast enough to run the whole pipeline in seconds.
fn write_tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    let gen = softae()
        .args(["gen-config", "--preset", "desk-arm", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    ok(&gen);
    let mut cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    cfg["run"]["episodes"] = 2.into();
    cfg["run"]["rollout_horizon"] = 10.into();
    cfg["model"]["hidden_layers"] = 1.into();
    cfg["model"]["hidden_width"] = 8.into();
    cfg["fit"]["epochs"] = 1.into();
    cfg["fit"]["max_gradient_steps"] = 5.into();
    cfg["planner"]["horizon"] = 3.into();
    cfg["icem"]["samples"] = 6.into();
    cfg["icem"]["elites"] = 2.into();
    cfg["icem"]["cem_iterations"] = 2.into();
    cfg["icem"]["particles_per_candidate"] = 2.into();
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn explore(config: &Path, method: &str, seed: u64, out: &Path) -> String {
    let output = softae()
        .args(["explore", "--config"])
        .arg(config)
        .args(["--method", method, "--seed", &seed.to_string(), "--out"])
        .arg(out)
        .output()
        .unwrap();
    ok(&output)
}

/// record.csv minus its measured wall-time column.
fn record_without_wall(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplitn(2, ',').last().unwrap().to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn explore_reproduces_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    for method in ["softae", "random", "pets-ae"] {
        let out_a = dir.path().join(format!("{method}-a"));
        let out_b = dir.path().join(format!("{method}-b"));
        explore(&cfg, method, 5, &out_a);
        explore(&cfg, method, 5, &out_b);
        for file in ["dataset.jsonl", "model.json"] {
            assert_eq!(
                fs::read(out_a.join(file)).unwrap(),
                fs::read(out_b.join(file)).unwrap(),
                "{method}/{file} differs between identical runs"
            );
        }
        assert_eq!(
            record_without_wall(&out_a.join("record.csv")),
            record_without_wall(&out_b.join("record.csv"))
        );
    }
}

#[test]
fn different_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    explore(&cfg, "random", 1, &out_a);
    explore(&cfg, "random", 2, &out_b);
    assert_ne!(
        fs::read(out_a.join("dataset.jsonl")).unwrap(),
        fs::read(out_b.join("dataset.jsonl")).unwrap()
    );
}

#[test]
fn seed_env_var_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let flagged = dir.path().join("flagged");
    let env_forced = dir.path().join("env-forced");
    explore(&cfg, "random", 2, &flagged);
    let output = softae()
        .args(["explore", "--config"])
        .arg(&cfg)
        .args(["--method", "random", "--seed", "1", "--out"])
        .arg(&env_forced)
        .env("SOFTAE_SEED", "2")
        .output()
        .unwrap();
    ok(&output);
    assert_eq!(
        fs::read(flagged.join("dataset.jsonl")).unwrap(),
        fs::read(env_forced.join("dataset.jsonl")).unwrap()
    );
}

#[test]
fn heldout_eval_heatmap_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let run = dir.path().join("run");
    explore(&cfg, "random", 3, &run);

    let heldout_a = dir.path().join("ho-a.jsonl");
    let heldout_b = dir.path().join("ho-b.jsonl");
    for p in [&heldout_a, &heldout_b] {
        let out = softae()
            .args([
                "heldout",
                "--env",
                "elastic-arm",
                "--targets",
                "5",
                "--steps",
                "15",
                "--seed",
                "4",
                "--out",
            ])
            .arg(p)
            .output()
            .unwrap();
        ok(&out);
    }
    assert_eq!(fs::read(&heldout_a).unwrap(), fs::read(&heldout_b).unwrap());

    let mse_a = dir.path().join("mse-a.json");
    let mse_b = dir.path().join("mse-b.json");
    for p in [&mse_a, &mse_b] {
        let out = softae()
            .args(["eval-model", "--model"])
            .arg(run.join("model.json"))
            .arg("--heldout")
            .arg(&heldout_a)
            .arg("--out")
            .arg(p)
            .output()
            .unwrap();
        ok(&out);
    }
    assert_eq!(fs::read(&mse_a).unwrap(), fs::read(&mse_b).unwrap());

    let heat_a = dir.path().join("heat-a.csv");
    let heat_b = dir.path().join("heat-b.csv");
    for p in [&heat_a, &heat_b] {
        let out = softae()
            .args(["heatmap", "--dataset"])
            .arg(run.join("dataset.jsonl"))
            .args(["--bins", "10", "--bounds", "-0.65,0.65,-0.65,0.65", "--out"])
            .arg(p)
            .output()
            .unwrap();
        ok(&out);
    }
    assert_eq!(fs::read(&heat_a).unwrap(), fs::read(&heat_b).unwrap());
}

#[test]
fn eval_tasks_writes_deterministic_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let run = dir.path().join("run");
    explore(&cfg, "random", 3, &run);
    let res_a = dir.path().join("res-a.csv");
    let res_b = dir.path().join("res-b.csv");
    for p in [&res_a, &res_b] {
        let out = softae()
            .args(["eval-tasks", "--model"])
            .arg(run.join("model.json"))
            .arg("--config")
            .arg(&cfg)
            .args(["--episodes", "1", "--seed", "6", "--out"])
            .arg(p)
            .output()
            .unwrap();
        ok(&out);
    }
    let content = fs::read_to_string(&res_a).unwrap();
    assert!(content.starts_with("task_id,seed,return\n"));
    assert!(content.contains("reach_close,6,"));
    assert_eq!(fs::read(&res_a).unwrap(), fs::read(&res_b).unwrap());
}

#[test]
fn report_aggregates_results_across_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("r1.csv");
    let b = dir.path().join("r2.csv");
    fs::write(&a, "task_id,seed,return\nreach_far,0,10\nreach_close,0,20\n").unwrap();
    fs::write(&b, "task_id,seed,return\nreach_far,1,14\nreach_close,1,20\n").unwrap();
    let agg = dir.path().join("agg.csv");
    let out = softae()
        .args(["report", "--inputs"])
        .arg(&a)
        .arg(&b)
        .arg("--out")
        .arg(&agg)
        .output()
        .unwrap();
    ok(&out);
    let content = fs::read_to_string(&agg).unwrap();
    let mut lines = content.lines();
    assert_eq!(lines.next().unwrap(), "task_id,mean_return,std_return,n");
    assert_eq!(lines.next().unwrap(), "reach_far,12,2,2");
    assert_eq!(lines.next().unwrap(), "reach_close,20,0,2");
}

#[test]
fn malformed_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.json");
    fs::write(&bad_cfg, "{ not json").unwrap();
    let out = softae()
        .args(["explore", "--config"])
        .arg(&bad_cfg)
        .args(["--method", "random", "--seed", "0", "--out"])
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert!(!out.status.success());

    // truncated dataset: parse error mentioning the line
    let cfg = write_tiny_config(dir.path());
    let run = dir.path().join("run");
    explore(&cfg, "random", 0, &run);
    let ds = fs::read_to_string(run.join("dataset.jsonl")).unwrap();
    let trunc = dir.path().join("trunc.jsonl");
    fs::write(&trunc, &ds[..ds.len() - 15]).unwrap();
    let out = softae()
        .args(["heatmap", "--dataset"])
        .arg(&trunc)
        .args(["--bins", "4", "--bounds", "-1,1,-1,1", "--out"])
        .arg(dir.path().join("h.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "error should cite the line: {err}");

    // unknown method
    let out = softae()
        .args(["explore", "--config"])
        .arg(&cfg)
        .args(["--method", "bogus", "--seed", "0", "--out"])
        .arg(dir.path().join("y"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn hucrl_method_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let run = dir.path().join("hucrl");
    let stdout = explore(&cfg, "hucrl:reach_close", 1, &run);
    assert!(stdout.contains("method=hucrl:reach_close"));
    assert!(run.join("model.json").exists());
}
