use serde::{Deserialize, Serialize};
use stablefit_core::estimators::{self, McCullochGrid};
use stablefit_core::rng::derive_seed;
use stablefit_core::scaling::{self, StdPoint, Subsampling};
use stablefit_core::stable::StableParams;

use super::{prepare, to_value, write_rejections, Inputs, PipelineSettings, RunSummary};
use crate::error::{CliError, Result};
use crate::output::{Format, OutDir, Table};
use crate::provenance::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSettings {
    pub pipeline: PipelineSettings,
    pub min_size: usize,
    pub max_size: usize,
    /// Number of log-spaced sizes.
    pub sizes: usize,
    pub reps: usize,
    pub subsampling: Subsampling,
    /// Replicates for pinning the theory curve at the reference size.
    pub calibration_reps: usize,
    pub seed: u64,
    pub format: Format,
}

/// Output schema of `scaling.<ext>`.
pub const COLUMNS: [&str; 5] = ["n", "mean_std", "q05", "q95", "theory"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub pooled_n: usize,
    pub fitted: StableParams,
    pub theoretical_exponent: f64,
    /// Least-squares slope of log mean std on log N, two smallest sizes
    /// excluded.
    pub fitted_slope: Option<f64>,
    pub intercept: f64,
    pub curve: Vec<StdPoint>,
}

/// Standard deviation of subsamples of the pooled variable against
/// subsample size, with the `c·N^(1/α̂ − 1/2)` overlay: `scaling.<ext>`,
/// `rejections.csv`, `run.json`.
pub fn run_scaling(inputs: &Inputs, s: &ScalingSettings, grid: &McCullochGrid, out: &OutDir) -> Result<RunSummary<ScalingSettings>> {
    if s.min_size < 2 || s.max_size < s.min_size || s.sizes == 0 || s.reps == 0 || s.calibration_reps == 0 {
        return Err(CliError::Config("need 2 <= min size <= max size and positive counts".into()));
    }
    let prov = Provenance::new(&("scaling", s), &inputs.hashed(), s.seed)?;
    let prep = prepare(inputs, &s.pipeline)?;
    write_rejections(out, &prep.rejections, &prov)?;
    let pooled: Vec<f64> = prep.groups.iter().flat_map(|g| g.values.iter().copied()).collect();
    let max = s.max_size.min(pooled.len());
    if max < s.min_size {
        return Err(CliError::Data(format!("pooled sample has {} values, fewer than the minimum size {}", pooled.len(), s.min_size)));
    }
    let fitted = estimators::fit_quantile_min_n(&pooled, grid, estimators::DEFAULT_MIN_N_QUANTILE.min(s.pipeline.threshold()))?.params;
    let sizes = scaling::log_spaced_sizes(s.min_size, max, s.sizes);
    let curve = scaling::subsample_std_curve(&pooled, &sizes, s.reps, derive_seed(s.seed, 0), s.subsampling)?;
    let intercept = scaling::calibrate_intercept(&fitted, scaling::REFERENCE_N, s.calibration_reps, derive_seed(s.seed, 1))?;
    let exponent = scaling::theoretical_exponent(fitted.alpha);

    let mut table = Table::new(&COLUMNS);
    for p in &curve {
        table.push(vec![p.n.into(), p.mean.into(), p.q05.into(), p.q95.into(), (intercept * (p.n as f64).powf(exponent)).into()]);
    }
    out.write_table("scaling", &table, s.format, &prov)?;
    let result = ScalingResult {
        pooled_n: pooled.len(),
        fitted,
        theoretical_exponent: exponent,
        fitted_slope: scaling::fitted_slope(&curve, 2).ok(),
        intercept,
        curve,
    };
    let summary = RunSummary {
        provenance: prov,
        command: "scaling".into(),
        settings: s.clone(),
        ingest: Some(prep.summary),
        groups: Vec::new(),
        results: to_value(&result)?,
    };
    out.write_json("run.json", &summary)?;
    Ok(summary)
}
