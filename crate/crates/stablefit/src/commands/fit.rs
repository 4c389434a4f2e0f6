use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stablefit_core::aep::{self, AepFit};
use stablefit_core::estimators::{self, FitResult, McCullochGrid};
use stablefit_core::optim::NelderMeadOptions;
use stablefit_core::panel::PanelGroup;

use super::{group_seed, prepare, require_some, write_rejections, GroupStatus, Inputs, PipelineSettings, RunSummary};
use crate::error::Result;
use crate::output::{Cell, Format, OutDir, Table};
use crate::provenance::Provenance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Levy,
    Aep,
    Both,
}

impl Model {
    pub fn levy(self) -> bool {
        self != Model::Aep
    }

    pub fn aep(self) -> bool {
        self != Model::Levy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub pipeline: PipelineSettings,
    pub model: Model,
    /// Bootstrap replicates for standard errors; 0 skips the bootstrap.
    pub bootstrap: usize,
    /// Refine the quantile estimate by maximum likelihood.
    pub mle: bool,
    pub seed: u64,
    pub format: Format,
}

/// Per-group JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub provenance: Provenance,
    pub key: String,
    pub dimension: String,
    pub variable: String,
    pub n: usize,
    pub negative_share: f64,
    pub excluded_nonpositive: usize,
    pub currency: Option<String>,
    pub seed: u64,
    pub levy: Option<FitResult>,
    pub levy_mle: Option<FitResult>,
    pub aep: Option<AepFit>,
}

const COLUMNS: [&str; 20] = [
    "country", "part", "n", "negative_share", "currency", "method", "alpha", "beta", "gamma", "delta", "se_alpha",
    "se_beta", "se_gamma", "se_delta", "converged", "aep_xi", "aep_sigma", "aep_h", "aep_kappa", "aep_method",
];

fn fit_group(g: &PanelGroup, s: &FitSettings, grid: &McCullochGrid, prov: &Provenance) -> Result<GroupFit> {
    let seed = group_seed(s.seed, g);
    let min_n = s.pipeline.threshold();
    let mut levy = None;
    let mut levy_mle = None;
    if s.model.levy() {
        let q = if s.bootstrap > 0 {
            estimators::fit_quantile_bootstrap(&g.values, grid, s.bootstrap, seed, min_n)?
        } else {
            estimators::fit_quantile_min_n(&g.values, grid, min_n)?
        };
        if s.mle {
            let opts = NelderMeadOptions {
                max_evals: 1500,
                f_tol: 1e-10,
                x_tol: 1e-6,
            };
            levy_mle = Some(estimators::fit_mle_with(&g.values, &q.params, min_n.min(estimators::DEFAULT_MIN_N_MLE), opts)?);
        }
        levy = Some(q);
    }
    let aep = if s.model.aep() {
        Some(aep::aep_fit_lmoments_min_n(&g.values, min_n)?)
    } else {
        None
    };
    Ok(GroupFit {
        provenance: prov.clone(),
        key: g.key.to_string(),
        dimension: g.dimension.as_str().to_string(),
        variable: g.variable.as_str().to_string(),
        n: g.n,
        negative_share: g.negative_share,
        excluded_nonpositive: g.excluded_nonpositive,
        currency: g.currency.clone(),
        seed,
        levy,
        levy_mle,
        aep,
    })
}

fn row(g: &PanelGroup, f: &GroupFit) -> Vec<Cell> {
    let best = f.levy_mle.as_ref().or(f.levy.as_ref());
    let p = best.map(|b| b.as_array());
    let se = f.levy.as_ref().and_then(|q| q.se);
    let a = f.aep.as_ref();
    vec![
        g.key.country.as_str().into(),
        g.key.part.as_str().into(),
        g.n.into(),
        g.negative_share.into(),
        g.currency.clone().into(),
        best.map(|b| if b.method == estimators::FitMethod::Mle { "mle" } else { "quantile" }).into(),
        p.map(|p| p[0]).into(),
        p.map(|p| p[1]).into(),
        p.map(|p| p[2]).into(),
        p.map(|p| p[3]).into(),
        se.map(|s| s[0]).into(),
        se.map(|s| s[1]).into(),
        se.map(|s| s[2]).into(),
        se.map(|s| s[3]).into(),
        best.map(|b| b.converged).into(),
        a.map(|a| a.params.xi).into(),
        a.map(|a| a.params.sigma).into(),
        a.map(|a| a.params.h).into(),
        a.map(|a| a.params.kappa).into(),
        a.map(|a| match a.method {
            aep::AepFitMethod::LMoments => "lmoments",
            aep::AepFitMethod::MaximumLikelihood => "mle",
        })
        .into(),
    ]
}

fn file_name(key: &str) -> String {
    key.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Fits every group that meets the threshold. Writes `groups/<key>.json`,
/// `fit_params.<ext>`, `rejections.csv` and `run.json`.
pub fn run_fit(inputs: &Inputs, s: &FitSettings, grid: &McCullochGrid, out: &OutDir) -> Result<RunSummary<FitSettings>> {
    let prov = Provenance::new(&("fit", s), &inputs.hashed(), s.seed)?;
    let prep = prepare(inputs, &s.pipeline)?;
    let results: Vec<Option<Result<GroupFit>>> = prep
        .groups
        .par_iter()
        .map(|g| (!g.below_threshold).then(|| fit_group(g, s, grid, &prov)))
        .collect();
    let threshold = s.pipeline.threshold();
    let statuses: Vec<GroupStatus> = prep.groups.iter().zip(&results).map(|(g, r)| GroupStatus::of(g, threshold, r)).collect();
    write_rejections(out, &prep.rejections, &prov)?;
    require_some(&results, threshold)?;

    let mut table = Table::new(&COLUMNS);
    for (g, r) in prep.groups.iter().zip(&results) {
        if let Some(Ok(f)) = r {
            out.write_json(&format!("groups/{}.json", file_name(&f.key)), f)?;
            table.push(row(g, f));
        }
    }
    out.write_table("fit_params", &table, s.format, &prov)?;
    let summary = RunSummary {
        provenance: prov,
        command: "fit".into(),
        settings: s.clone(),
        ingest: Some(prep.summary),
        groups: statuses,
        results: serde_json::json!({ "fitted": table.rows.len() }),
    };
    out.write_json("run.json", &summary)?;
    Ok(summary)
}
