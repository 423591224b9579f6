//! Persistence: versioned, deterministic file formats.
//!
//! - `dataset.jsonl`: one metadata line (dims, episode boundaries), then
//!   one transition per line `{"s":[..],"a":[..],"sp":[..]}`.
//! - `model.json`: a single self-describing document; floats are written
//!   with 17 significant digits so round-trips are bit-exact.
//! - CSVs (`record.csv`, `results.csv`, `heatmap.csv`): fixed, documented
//!   column order; floats in shortest round-trip form.
//!
//! Every loader verifies `schema_version` and fails on malformed input
//! with the offending line; nothing partial is ever returned.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Transition, TransitionDataset};
use crate::ensemble::{Architecture, EnsembleModel, Normalizer};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::run::{EpisodeRow, ExperimentRecord};
use crate::nn::MlpParams;

use super::heatmap::HeatmapGrid;

pub const DATASET_SCHEMA_VERSION: u32 = 1;
pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// 17 significant digits: enough to reproduce any f64 bit pattern exactly.
fn fmt_f64_exact(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_f64_array(vs: &[f64]) -> String {
    let mut s = String::with_capacity(vs.len() * 24 + 2);
    s.push('[');
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{}", fmt_f64_exact(*v));
    }
    s.push(']');
    s
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// dataset.jsonl

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    schema_version: u32,
    d_s: usize,
    d_a: usize,
    episode_boundaries: Vec<usize>,
}

pub fn save_dataset(path: &Path, dataset: &TransitionDataset) -> Result<()> {
    let mut out = String::new();
    let header = DatasetHeader {
        schema_version: DATASET_SCHEMA_VERSION,
        d_s: dataset.state_dim(),
        d_a: dataset.action_dim(),
        episode_boundaries: dataset.episode_boundaries().to_vec(),
    };
    out.push_str(&serde_json::to_string(&header)?);
    out.push('\n');
    for rec in dataset.records() {
        out.push_str(&serde_json::to_string(rec)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<TransitionDataset> {
    let content = fs::read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty dataset file"))?;
    let header: DatasetHeader = serde_json::from_str(header_line)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    if header.schema_version != DATASET_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            expected: DATASET_SCHEMA_VERSION,
            found: header.schema_version,
        });
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let t: Transition =
            serde_json::from_str(line).map_err(|e| parse_err(path, idx + 1, e.to_string()))?;
        records.push(t);
    }
    TransitionDataset::from_parts(header.d_s, header.d_a, records, header.episode_boundaries)
}

// ---------------------------------------------------------------------------
// model.json

#[derive(Deserialize)]
struct ModelDoc {
    schema_version: u32,
    d_s: usize,
    d_a: usize,
    architecture: Architecture,
    beta: f64,
    aleatoric_std: f64,
    normalizer: Normalizer,
    particles: Vec<ParticleDoc>,
}

#[derive(Deserialize)]
struct ParticleDoc {
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

pub fn save_model(path: &Path, model: &EnsembleModel) -> Result<()> {
    use crate::ensemble::DynamicsModel as _;
    let arch = model.architecture();
    let mut out = String::new();
    let _ = write!(
        out,
        "{{\"schema_version\":{},\"d_s\":{},\"d_a\":{},\"architecture\":{},\"beta\":{},\"aleatoric_std\":{},\"normalizer\":{{\"input_mean\":{},\"input_std\":{},\"target_mean\":{},\"target_std\":{}}},\"particles\":[",
        MODEL_SCHEMA_VERSION,
        model.state_dim(),
        model.action_dim(),
        serde_json::to_string(&arch)?,
        fmt_f64_exact(model.beta()),
        fmt_f64_exact(model.aleatoric_std()),
        fmt_f64_array(&model.normalizer().input_mean),
        fmt_f64_array(&model.normalizer().input_std),
        fmt_f64_array(&model.normalizer().target_mean),
        fmt_f64_array(&model.normalizer().target_std),
    );
    for (i, particle) in model.particles().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("\n{\"dims\":");
        let _ = write!(out, "{:?}", particle.dims());
        out.push_str(",\"weights\":[");
        for (l, w) in particle.layer_weights().iter().enumerate() {
            if l > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64_array(w));
        }
        out.push_str("],\"biases\":[");
        for (l, b) in particle.layer_biases().iter().enumerate() {
            if l > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64_array(b));
        }
        out.push_str("]}");
    }
    out.push_str("]}\n");
    fs::write(path, out)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<EnsembleModel> {
    let content = fs::read_to_string(path)?;
    let doc: ModelDoc = serde_json::from_str(&content)
        .map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    if doc.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            expected: MODEL_SCHEMA_VERSION,
            found: doc.schema_version,
        });
    }
    let expected_dims = doc.architecture.dims(doc.d_s + doc.d_a, doc.d_s);
    let mut particles = Vec::with_capacity(doc.particles.len());
    for p in doc.particles {
        if p.dims != expected_dims {
            return Err(Error::InvalidConfig(format!(
                "particle dims {:?} do not match architecture dims {:?}",
                p.dims, expected_dims
            )));
        }
        particles.push(MlpParams::from_layers(
            p.dims,
            p.weights,
            p.biases,
            doc.architecture.activation,
        )?);
    }
    EnsembleModel::from_parts(
        particles,
        doc.normalizer,
        doc.beta,
        doc.aleatoric_std,
        doc.d_s,
        doc.d_a,
        doc.architecture,
    )
}

// ---------------------------------------------------------------------------
// record.csv

pub const RECORD_HEADER: &str = "episode,exploration_return,train_loss,wall_ms";

pub fn save_record(path: &Path, record: &ExperimentRecord) -> Result<()> {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for row in &record.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.episode, row.exploration_return, row.train_loss, row.wall_ms
        );
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_record(path: &Path) -> Result<ExperimentRecord> {
    let content = fs::read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RECORD_HEADER => {}
        Some((_, h)) => return Err(parse_err(path, 1, format!("unexpected header '{h}'"))),
        None => return Err(parse_err(path, 1, "empty record file")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(path, idx + 1, "expected 4 columns"));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| parse_err(path, idx + 1, format!("bad float '{s}': {e}")))
        };
        rows.push(EpisodeRow {
            episode: fields[0]
                .parse()
                .map_err(|e| parse_err(path, idx + 1, format!("bad episode: {e}")))?,
            exploration_return: parse_f(fields[1])?,
            train_loss: parse_f(fields[2])?,
            wall_ms: parse_f(fields[3])?,
        });
    }
    Ok(ExperimentRecord { rows })
}

// ---------------------------------------------------------------------------
// results.csv

pub const RESULTS_HEADER: &str = "task_id,seed,return";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub task_id: String,
    pub seed: u64,
    pub ret: f64,
}

pub fn save_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for row in rows {
        if row.task_id.contains(',') || row.task_id.contains('\n') {
            return Err(Error::InvalidConfig(format!(
                "task id '{}' cannot be written to CSV",
                row.task_id
            )));
        }
        let _ = writeln!(out, "{},{},{}", row.task_id, row.seed, row.ret);
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_results(path: &Path) -> Result<Vec<ResultRow>> {
    let content = fs::read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESULTS_HEADER => {}
        Some((_, h)) => return Err(parse_err(path, 1, format!("unexpected header '{h}'"))),
        None => return Err(parse_err(path, 1, "empty results file")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(path, idx + 1, "expected 3 columns"));
        }
        rows.push(ResultRow {
            task_id: fields[0].to_string(),
            seed: fields[1]
                .parse()
                .map_err(|e| parse_err(path, idx + 1, format!("bad seed: {e}")))?,
            ret: fields[2]
                .parse()
                .map_err(|e| parse_err(path, idx + 1, format!("bad return: {e}")))?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// heatmap.csv (all bins, row-major)

pub const HEATMAP_HEADER: &str = "bin_x,bin_z,count";

pub fn save_heatmap(path: &Path, grid: &HeatmapGrid) -> Result<()> {
    let mut out = String::from(HEATMAP_HEADER);
    out.push('\n');
    for bx in 0..grid.bins {
        for bz in 0..grid.bins {
            let _ = writeln!(out, "{},{},{}", bx, bz, grid.count(bx, bz));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// tip trace CSV

pub fn save_tip_trace(path: &Path, trace: &[(f64, [f64; 2])]) -> Result<()> {
    let mut out = String::from("t,x,z");
    out.push('\n');
    for (t, tip) in trace {
        let _ = writeln!(out, "{},{},{}", t, tip[0], tip[1]);
    }
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// experiment config

pub fn save_config(path: &Path, config: &ExperimentConfig) -> Result<()> {
    let mut out = serde_json::to_string_pretty(config)?;
    out.push('\n');
    fs::write(path, out)?;
    Ok(())
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let content = fs::read_to_string(path)?;
    let config: ExperimentConfig = serde_json::from_str(&content)
        .map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    config.validate()?;
    Ok(config)
}
