//! Workspace coverage: tip-position visitation heatmaps and their Shannon
//! entropy. Broader, more uniform exploration shows up as higher entropy.

use crate::dataset::TransitionDataset;
use crate::error::{Error, Result};

/// Axis-aligned heatmap bounds in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl GridBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !(self.z_min < self.z_max) {
            return Err(Error::InvalidConfig(format!(
                "degenerate heatmap bounds: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Visitation counts per spatial bin, row-major over `(bin_x, bin_z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub bounds: GridBounds,
    pub bins: usize,
    pub counts: Vec<u64>,
    /// Samples outside the bounds, dropped from the grid.
    pub out_of_bounds: u64,
}

impl HeatmapGrid {
    pub fn count(&self, bin_x: usize, bin_z: usize) -> u64 {
        self.counts[bin_x * self.bins + bin_z]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bins the tip positions of all visited states. The tip is read from the
/// last two state dimensions (the elastic-arm layout). Samples exactly on
/// the upper edge fall into the last bin.
pub fn coverage_heatmap(
    dataset: &TransitionDataset,
    bounds: GridBounds,
    bins: usize,
) -> Result<HeatmapGrid> {
    if bins < 1 {
        return Err(Error::InvalidConfig("heatmap needs bins >= 1".into()));
    }
    bounds.validate()?;
    if dataset.state_dim() < 2 {
        return Err(Error::Usage(
            "dataset states do not carry tip positions".into(),
        ));
    }
    let d = dataset.state_dim();
    let mut grid = HeatmapGrid {
        bounds,
        bins,
        counts: vec![0; bins * bins],
        out_of_bounds: 0,
    };
    let to_bin = |v: f64, lo: f64, hi: f64| -> Option<usize> {
        if v < lo || v > hi {
            return None;
        }
        let frac = (v - lo) / (hi - lo);
        Some(((frac * bins as f64) as usize).min(bins - 1))
    };
    for rec in dataset.records() {
        let (x, z) = (rec.state[d - 2], rec.state[d - 1]);
        match (
            to_bin(x, bounds.x_min, bounds.x_max),
            to_bin(z, bounds.z_min, bounds.z_max),
        ) {
            (Some(ix), Some(iz)) => grid.counts[ix * bins + iz] += 1,
            _ => grid.out_of_bounds += 1,
        }
    }
    Ok(grid)
}

/// Shannon entropy (nats) of the normalized count distribution, with the
/// `0 * log 0 = 0` convention. An empty grid has entropy 0.
pub fn coverage_entropy(grid: &HeatmapGrid) -> f64 {
    let total = grid.total();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    grid.counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}
