use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stablefit_core::estimators::{self, McCullochGrid};

use crate::error::{CliError, Result};
use crate::grid_cache;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSettings {
    pub alpha_axis: Vec<f64>,
    pub beta_axis: Vec<f64>,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            alpha_axis: estimators::default_alpha_axis(),
            beta_axis: estimators::default_beta_axis(),
        }
    }
}

impl GridSettings {
    /// Evenly spaced axes over α ∈ [0.5, 2] and β ∈ [0, 1]. Each step must
    /// divide its range.
    pub fn with_steps(alpha_step: f64, beta_step: f64) -> Result<Self> {
        Ok(GridSettings {
            alpha_axis: axis(0.5, 2.0, alpha_step)?,
            beta_axis: axis(0.0, 1.0, beta_step)?,
        })
    }
}

fn axis(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    let k = (hi - lo) / step;
    if !(step > 0.0) || k.is_nan() || (k - k.round()).abs() > 1e-9 || k.round() < 1.0 || k > 1000.0 {
        return Err(CliError::Config(format!("grid step {step} must divide [{lo}, {hi}]")));
    }
    let k = k.round() as usize;
    // from integer multiples so the default steps give the exact McCulloch nodes
    Ok((0..=k).map(|i| if i == k { hi } else { lo + (hi - lo) * i as f64 / k as f64 }).collect())
}

/// Builds the lookup grid and writes it to `path` in the cache format.
pub fn run_build_grid(s: &GridSettings, path: &Path) -> Result<McCullochGrid> {
    let grid = estimators::build_grid(&s.alpha_axis, &s.beta_axis)?;
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    grid_cache::write_grid(&grid, Some(&grid_cache::provenance(&grid)?), BufWriter::new(f))?;
    Ok(grid)
}
