use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stablefit_core::estimators::{self, McCullochGrid};
use stablefit_core::panel::{self, DispersionMetrics, PanelGroup};

use super::{prepare, to_value, write_rejections, GroupStatus, Inputs, PipelineSettings, RunSummary, Status};
use crate::error::Result;
use crate::output::{Cell, Format, OutDir, Table};
use crate::provenance::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub pipeline: PipelineSettings,
    pub seed: u64,
    pub format: Format,
}

const COLUMNS: [&str; 18] = [
    "country", "part", "n", "below_threshold", "currency", "negative_share", "excluded_nonpositive", "iqr_90_10",
    "iqr_75_25", "std", "alpha_hat", "heavy_tail_warning", "q05", "q25", "q50", "q75", "q95", "error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDispersion {
    pub key: String,
    pub alpha_hat: Option<f64>,
    pub metrics: DispersionMetrics,
}

fn describe(g: &PanelGroup, grid: &McCullochGrid, min_n: usize) -> Result<GroupDispersion> {
    let alpha_hat = if g.below_threshold {
        None
    } else {
        estimators::fit_quantile_min_n(&g.values, grid, min_n).ok().map(|f| f.params.alpha)
    };
    Ok(GroupDispersion {
        key: g.key.to_string(),
        alpha_hat,
        metrics: panel::dispersion_metrics(&g.values, alpha_hat)?,
    })
}

/// Dispersion metrics and the five-quantile summary of every group, with
/// the ingest reconciliation in `run.json`: `dispersion.<ext>`,
/// `rejections.csv`, `run.json`. Groups below threshold are reported but
/// get no tail fit.
pub fn run_report(inputs: &Inputs, s: &ReportSettings, grid: &McCullochGrid, out: &OutDir) -> Result<RunSummary<ReportSettings>> {
    let prov = Provenance::new(&("report", s), &inputs.hashed(), s.seed)?;
    let prep = prepare(inputs, &s.pipeline)?;
    write_rejections(out, &prep.rejections, &prov)?;
    let min_n = s.pipeline.threshold();
    let results: Vec<Result<GroupDispersion>> = prep.groups.par_iter().map(|g| describe(g, grid, min_n)).collect();

    let mut table = Table::new(&COLUMNS);
    let mut statuses = Vec::new();
    let mut done = Vec::new();
    for (g, r) in prep.groups.iter().zip(results) {
        let mut row: Vec<Cell> = vec![
            g.key.country.as_str().into(),
            g.key.part.as_str().into(),
            g.n.into(),
            g.below_threshold.into(),
            g.currency.clone().into(),
            g.negative_share.into(),
            g.excluded_nonpositive.into(),
        ];
        match &r {
            Ok(d) => {
                let m = &d.metrics;
                let q = &m.quantiles;
                row.extend([
                    m.iqr_90_10.into(),
                    m.iqr_75_25.into(),
                    m.std.into(),
                    d.alpha_hat.into(),
                    m.heavy_tail_warning.into(),
                    q.q05.into(),
                    q.q25.into(),
                    q.q50.into(),
                    q.q75.into(),
                    q.q95.into(),
                    Cell::Null,
                ]);
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(Cell::Null, 10));
                row.push(e.to_string().into());
            }
        }
        table.push(row);
        statuses.push(GroupStatus {
            key: g.key.to_string(),
            n: g.n,
            status: if r.is_ok() { Status::Done } else { Status::Failed },
            message: r.as_ref().err().map(ToString::to_string),
        });
        if let Ok(d) = r {
            done.push(d);
        }
    }
    out.write_table("dispersion", &table, s.format, &prov)?;
    let summary = RunSummary {
        provenance: prov,
        command: "report".into(),
        settings: s.clone(),
        ingest: Some(prep.summary),
        groups: statuses,
        results: to_value(&done)?,
    };
    out.write_json("run.json", &summary)?;
    Ok(summary)
}
