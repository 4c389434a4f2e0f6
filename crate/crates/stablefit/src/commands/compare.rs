use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stablefit_core::aep;
use stablefit_core::estimators::{self, McCullochGrid};
use stablefit_core::gof::{self, AepLMomentFitter, Density, StableDensity, StableQuantileFitter};
use stablefit_core::panel::PanelGroup;

use super::{group_seed, prepare, require_some, to_value, write_rejections, GroupStatus, Inputs, PipelineSettings, RunSummary};
use crate::error::Result;
use crate::output::{Format, OutDir, Table};
use crate::provenance::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSettings {
    pub pipeline: PipelineSettings,
    pub kfold: usize,
    pub reps: usize,
    /// Histogram bins for the Soofi ID; `⌈√n⌉` clamped to [10, 500] when
    /// absent.
    pub bins: Option<usize>,
    pub seed: u64,
    pub format: Format,
}

/// One row of the comparison table. The relative likelihoods are per
/// observation and below one when the Lévy model is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub key: String,
    pub n: usize,
    pub cv_levy: f64,
    pub cv_aep: f64,
    pub soofi_levy: f64,
    pub soofi_aep: f64,
    pub aic_levy: f64,
    pub aic_aep: f64,
    /// `exp((AIC_levy − AIC_aep) / 2N)`.
    pub rel_lik_aic: f64,
    /// `exp((CV_aep − CV_levy) / N)` on summed holdout log-likelihoods.
    pub rel_lik_cv: f64,
    pub folds_skipped: usize,
}

impl CompareRow {
    pub fn levy_wins_soofi(&self) -> bool {
        self.soofi_levy > self.soofi_aep
    }

    pub fn levy_wins_aic(&self) -> bool {
        self.aic_levy < self.aic_aep
    }

    pub fn levy_wins_cv(&self) -> bool {
        self.cv_levy > self.cv_aep
    }
}

const COLUMNS: [&str; 15] = [
    "country", "part", "n", "cv_levy", "cv_aep", "soofi_levy", "soofi_aep", "aic_levy", "aic_aep", "rel_lik_aic",
    "rel_lik_cv", "winner_soofi", "winner_aic", "winner_cv", "folds_skipped",
];

fn winner(levy: bool) -> &'static str {
    if levy {
        "levy"
    } else {
        "aep"
    }
}

/// Scores both models on one sample.
pub fn compare_sample(values: &[f64], grid: &McCullochGrid, s: &CompareSettings, seed: u64) -> Result<CompareRow> {
    let n = values.len();
    let min_n = s.pipeline.threshold();
    let levy = StableDensity::for_sample(&estimators::fit_quantile_min_n(values, grid, min_n)?.params, values)?;
    let aep = aep::aep_fit_lmoments_min_n(values, min_n)?.params;
    let hist = gof::empirical_density(values, gof::DEFAULT_TRIM, s.bins.unwrap_or_else(|| gof::default_bins(n)))?;
    let cv_min = (min_n * (s.kfold.max(2) - 1) / s.kfold.max(2)).min(min_n);
    let sf = StableQuantileFitter { grid, min_n: cv_min };
    let af = AepLMomentFitter { min_n: cv_min };
    let cv = gof::kfold_cv(values, &[&sf, &af], s.kfold, s.reps, seed)?;
    let aic_levy = gof::aic(levy.log_likelihood(values), levy.n_params());
    let aic_aep = gof::aic(aep.log_likelihood(values), aep.n_params());
    Ok(CompareRow {
        key: String::new(),
        n,
        cv_levy: cv.models[0].cv_loglik,
        cv_aep: cv.models[1].cv_loglik,
        soofi_levy: gof::soofi_id(&hist, &levy).id,
        soofi_aep: gof::soofi_id(&hist, &aep).id,
        aic_levy,
        aic_aep,
        rel_lik_aic: gof::aic_relative_likelihood(aic_levy, aic_aep, n),
        rel_lik_cv: cv.relative_likelihood(0, 1),
        folds_skipped: cv.models.iter().map(|m| m.folds_skipped).sum(),
    })
}

fn compare_group(g: &PanelGroup, grid: &McCullochGrid, s: &CompareSettings) -> Result<CompareRow> {
    let mut r = compare_sample(&g.values, grid, s, group_seed(s.seed, g))?;
    r.key = g.key.to_string();
    Ok(r)
}

/// Lévy versus AEP on every group: `compare.<ext>`, `rejections.csv`,
/// `run.json`.
pub fn run_compare(inputs: &Inputs, s: &CompareSettings, grid: &McCullochGrid, out: &OutDir) -> Result<RunSummary<CompareSettings>> {
    let prov = Provenance::new(&("compare", s), &inputs.hashed(), s.seed)?;
    let prep = prepare(inputs, &s.pipeline)?;
    let results: Vec<Option<Result<CompareRow>>> = prep
        .groups
        .par_iter()
        .map(|g| (!g.below_threshold).then(|| compare_group(g, grid, s)))
        .collect();
    let threshold = s.pipeline.threshold();
    let statuses: Vec<GroupStatus> = prep.groups.iter().zip(&results).map(|(g, r)| GroupStatus::of(g, threshold, r)).collect();
    write_rejections(out, &prep.rejections, &prov)?;
    require_some(&results, threshold)?;

    let mut table = Table::new(&COLUMNS);
    let mut rows = Vec::new();
    for (g, r) in prep.groups.iter().zip(results) {
        if let Some(Ok(r)) = r {
            table.push(vec![
                g.key.country.as_str().into(),
                g.key.part.as_str().into(),
                r.n.into(),
                r.cv_levy.into(),
                r.cv_aep.into(),
                r.soofi_levy.into(),
                r.soofi_aep.into(),
                r.aic_levy.into(),
                r.aic_aep.into(),
                r.rel_lik_aic.into(),
                r.rel_lik_cv.into(),
                winner(r.levy_wins_soofi()).into(),
                winner(r.levy_wins_aic()).into(),
                winner(r.levy_wins_cv()).into(),
                r.folds_skipped.into(),
            ]);
            rows.push(r);
        }
    }
    out.write_table("compare", &table, s.format, &prov)?;
    let summary = RunSummary {
        provenance: prov,
        command: "compare".into(),
        settings: s.clone(),
        ingest: Some(prep.summary),
        groups: statuses,
        results: to_value(&rows)?,
    };
    out.write_json("run.json", &summary)?;
    Ok(summary)
}
