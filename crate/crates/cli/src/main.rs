//! `softae`: explore, evaluate, and report on uncertainty-aware dynamics
//! learning experiments.
//!
//! Every command is deterministic given its config and seed; re-running
//! with identical inputs reproduces the output files byte for byte (the
//! wall-time column of `record.csv` being the one measured quantity).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use softae_core::envs::{ArmParams, EnvSpec};
use softae_core::harness::{
    coverage_entropy, coverage_heatmap, evaluate_model_mse, evaluate_zero_shot,
    generate_heldout, persist, run_experiment, GridBounds,
};

/// Environment variable that overrides any configured or flagged seed.
const SEED_ENV: &str = "SOFTAE_SEED";

#[derive(Parser)]
#[command(name = "softae", version, about = "Active exploration for dynamics learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the episodic exploration loop and write dataset, model, record.
    Explore {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's method (softae | mean-ae | pets-ae |
        /// random | hucrl:<task_id>).
        #[arg(long)]
        method: Option<String>,
        /// Overrides the config's first seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the held-out evaluation set for the elastic arm.
    Heldout {
        /// Path to an experiment config whose env section is used, or the
        /// literal `elastic-arm` for the default arm.
        #[arg(long)]
        env: String,
        #[arg(long)]
        targets: usize,
        /// Steps per target rollout before trimming.
        #[arg(long, default_value_t = 40)]
        steps: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Normalized MSE of a model on a held-out dataset.
    EvalModel {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        heldout: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zero-shot task returns of a model under mean-propagation MPC.
    EvalTasks {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        episodes: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tip-position visitation heatmap of a dataset.
    Heatmap {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 30)]
        bins: usize,
        /// x_min,x_max,z_min,z_max in meters.
        #[arg(long, allow_hyphen_values = true)]
        bounds: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate per-seed CSVs (results.csv or record.csv) into mean/std.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a preset experiment config (desk-arm | full-arm | desk-cart).
    GenConfig {
        #[arg(long, default_value = "desk-arm")]
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve_seed(flag: Option<u64>, fallback: u64) -> Result<u64> {
    if let Ok(raw) = std::env::var(SEED_ENV) {
        return raw
            .parse()
            .with_context(|| format!("{SEED_ENV}='{raw}' is not a valid seed"));
    }
    Ok(flag.unwrap_or(fallback))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Explore {
            config,
            method,
            seed,
            out,
        } => explore(&config, method.as_deref(), seed, &out),
        Command::Heldout {
            env,
            targets,
            steps,
            seed,
            out,
        } => heldout(&env, targets, steps, seed, &out),
        Command::EvalModel {
            model,
            heldout,
            out,
        } => eval_model(&model, &heldout, &out),
        Command::EvalTasks {
            model,
            config,
            episodes,
            seed,
            out,
        } => eval_tasks(&model, &config, episodes, seed, &out),
        Command::Heatmap {
            dataset,
            bins,
            bounds,
            out,
        } => heatmap(&dataset, bins, &bounds, &out),
        Command::Report { inputs, out } => report(&inputs, &out),
        Command::GenConfig { preset, out } => gen_config(&preset, &out),
    }
}

fn gen_config(preset: &str, out: &Path) -> Result<()> {
    let cfg = match preset {
        "desk-arm" => softae_core::harness::ExperimentConfig::desk_arm(),
        "full-arm" => softae_core::harness::ExperimentConfig::full_arm(),
        "desk-cart" => softae_core::harness::ExperimentConfig::desk_cart(),
        other => bail!("unknown preset '{other}' (desk-arm | full-arm | desk-cart)"),
    };
    persist::save_config(out, &cfg)?;
    println!("wrote {preset} config to {}", out.display());
    Ok(())
}

fn explore(config: &Path, method: Option<&str>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = persist::load_config(config)
        .with_context(|| format!("loading config {}", config.display()))?;
    if let Some(name) = method {
        cfg.run.method = name.parse()?;
    }
    let seed = resolve_seed(seed, *cfg.run.seeds.first().unwrap_or(&0))?;

    let output = run_experiment(&cfg, seed)?;
    fs::create_dir_all(out)?;
    persist::save_dataset(&out.join("dataset.jsonl"), &output.dataset)?;
    persist::save_model(&out.join("model.json"), &output.model)?;
    persist::save_record(&out.join("record.csv"), &output.record)?;

    println!(
        "method={} seed={} episodes={} transitions={}",
        cfg.run.method,
        seed,
        output.record.rows.len(),
        output.dataset.len()
    );
    if let Some(last) = output.record.rows.last() {
        println!(
            "final episode: exploration_return={} train_loss={}",
            last.exploration_return, last.train_loss
        );
    }
    Ok(())
}

fn env_from_arg(arg: &str) -> Result<EnvSpec> {
    if arg == "elastic-arm" {
        return Ok(EnvSpec::elastic_arm(ArmParams::default()));
    }
    let cfg = persist::load_config(Path::new(arg))
        .with_context(|| format!("loading config {arg} for its env section"))?;
    Ok(cfg.env)
}

fn heldout(env: &str, targets: usize, steps: usize, seed: Option<u64>, out: &Path) -> Result<()> {
    let env = env_from_arg(env)?;
    let seed = resolve_seed(seed, 0)?;
    let (dataset, report) = generate_heldout(&env, targets, steps, seed)?;
    persist::save_dataset(out, &dataset)?;
    println!(
        "targets={} transitions={} truncated_rollouts={}",
        report.total_rollouts,
        dataset.len(),
        report.truncated_rollouts
    );
    Ok(())
}

fn eval_model(model: &Path, heldout: &Path, out: &Path) -> Result<()> {
    let model = persist::load_model(model)?;
    let heldout = persist::load_dataset(heldout)?;
    let report = evaluate_model_mse(&model, &heldout)?;
    let doc = serde_json::json!({
        "schema_version": 1,
        "normalized_mse": report.normalized_mse,
        "per_dim": report.per_dim,
        "skipped_dims": report.skipped_dims,
    });
    fs::write(out, format!("{doc}\n"))?;
    println!("normalized_mse={}", report.normalized_mse);
    if !report.skipped_dims.is_empty() {
        println!("warning: skipped {} zero-variance dims", report.skipped_dims.len());
    }
    Ok(())
}

fn eval_tasks(
    model: &Path,
    config: &Path,
    episodes: usize,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let model = persist::load_model(model)?;
    let cfg = persist::load_config(config)?;
    let seed = resolve_seed(seed, *cfg.run.seeds.first().unwrap_or(&0))?;
    let icem = cfg.icem.to_config(cfg.env.action_bounds());
    let results = evaluate_zero_shot(
        &model,
        &cfg.env,
        &cfg.tasks,
        cfg.planner.horizon,
        &icem,
        episodes,
        seed,
    )?;
    let rows: Vec<persist::ResultRow> = results
        .iter()
        .map(|r| persist::ResultRow {
            task_id: r.task_id.clone(),
            seed,
            ret: r.mean_return,
        })
        .collect();
    persist::save_results(out, &rows)?;
    for r in &results {
        println!(
            "task={} mean_return={} std_return={} episodes={}",
            r.task_id,
            r.mean_return,
            r.std_return,
            r.episode_returns.len()
        );
        for (ep, msg) in &r.failures {
            eprintln!("task={} episode={ep} failed: {msg}", r.task_id);
        }
    }
    Ok(())
}

fn heatmap(dataset: &Path, bins: usize, bounds: &str, out: &Path) -> Result<()> {
    let dataset = persist::load_dataset(dataset)?;
    let parts: Vec<f64> = bounds
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bounds '{bounds}' must be x_min,x_max,z_min,z_max"))?;
    if parts.len() != 4 {
        bail!("bounds '{bounds}' must have exactly 4 comma-separated values");
    }
    let grid = coverage_heatmap(
        &dataset,
        GridBounds {
            x_min: parts[0],
            x_max: parts[1],
            z_min: parts[2],
            z_max: parts[3],
        },
        bins,
    )?;
    persist::save_heatmap(out, &grid)?;
    println!(
        "bins={bins} in_bounds={} out_of_bounds={} entropy={}",
        grid.total(),
        grid.out_of_bounds,
        coverage_entropy(&grid)
    );
    Ok(())
}

fn report(inputs: &[PathBuf], out: &Path) -> Result<()> {
    let first_line = |p: &Path| -> Result<String> {
        let content = fs::read_to_string(p)?;
        Ok(content.lines().next().unwrap_or_default().to_string())
    };
    let header = first_line(&inputs[0])?;
    for p in inputs.iter().skip(1) {
        let h = first_line(p)?;
        if h != header {
            bail!(
                "cannot aggregate mixed file types: {} has '{h}', expected '{header}'",
                p.display()
            );
        }
    }

    let stats = |values: &[f64]| -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    };

    let mut out_text = String::new();
    if header == persist::RESULTS_HEADER {
        // group returns by task across seed files, preserving first-seen order
        let mut order: Vec<String> = Vec::new();
        let mut groups: std::collections::HashMap<String, Vec<f64>> =
            std::collections::HashMap::new();
        for p in inputs {
            for row in persist::load_results(p)? {
                if !groups.contains_key(&row.task_id) {
                    order.push(row.task_id.clone());
                }
                groups.entry(row.task_id).or_default().push(row.ret);
            }
        }
        out_text.push_str("task_id,mean_return,std_return,n\n");
        for task in order {
            let values = &groups[&task];
            let (mean, std) = stats(values);
            out_text.push_str(&format!("{task},{mean},{std},{}\n", values.len()));
        }
    } else if header == persist::RECORD_HEADER {
        // group exploration return by episode across seed files
        let mut per_episode: std::collections::BTreeMap<usize, Vec<f64>> =
            std::collections::BTreeMap::new();
        for p in inputs {
            for row in persist::load_record(p)?.rows {
                per_episode.entry(row.episode).or_default().push(row.exploration_return);
            }
        }
        out_text.push_str("episode,mean_exploration_return,std_exploration_return,n\n");
        for (episode, values) in per_episode {
            let (mean, std) = stats(&values);
            out_text.push_str(&format!("{episode},{mean},{std},{}\n", values.len()));
        }
    } else {
        bail!("unrecognized header '{header}'");
    }
    fs::write(out, out_text)?;
    println!("aggregated {} files into {}", inputs.len(), out.display());
    Ok(())
}
