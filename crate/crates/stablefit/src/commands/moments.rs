use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stablefit_core::moment_test::{self, MomentTestConfig, MomentTestResult, UMode};
use stablefit_core::rng::derive_seed;

use super::{group_seed, prepare, require_some, to_value, write_rejections, GroupStatus, Inputs, PipelineSettings, RunSummary};
use crate::error::{CliError, Result};
use crate::output::{Cell, Format, OutDir, Table};
use crate::provenance::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSettings {
    pub pipeline: PipelineSettings,
    /// Moment orders to test.
    pub moment_p: Vec<f64>,
    pub u_mode: UMode,
    pub level: f64,
    pub seed: u64,
    pub format: Format,
}

const COLUMNS: [&str; 9] = ["country", "part", "n", "p", "statistic", "p_value", "reject", "skipped", "error"];

fn test_group(values: &[f64], s: &MomentSettings, seed: u64) -> Result<Vec<MomentTestResult>> {
    s.moment_p
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let cfg = MomentTestConfig {
                u_mode: s.u_mode,
                ..MomentTestConfig::new(p, derive_seed(seed, k as u64))
            };
            Ok(moment_test::trapani_test(values, &cfg)?)
        })
        .collect()
}

/// Statistic with its p-value in parentheses on the line below.
fn text_table(keys: &[String], results: &[Option<Result<Vec<MomentTestResult>>>], ps: &[f64]) -> String {
    let width = keys.iter().map(String::len).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}", "group");
    for p in ps {
        let _ = write!(s, " {:>12}", format!("p={p}"));
    }
    s.push('\n');
    for (key, r) in keys.iter().zip(results) {
        let _ = write!(s, "{key:<width$}");
        match r {
            Some(Ok(res)) => {
                for t in res {
                    let _ = write!(s, " {:>12.3}", t.theta);
                }
                let _ = write!(s, "\n{:<width$}", "");
                for t in res {
                    let _ = write!(s, " {:>12}", format!("({:.3})", t.p_value));
                }
            }
            Some(Err(_)) => s.push_str(" failed"),
            None => s.push_str(" skipped"),
        }
        s.push('\n');
    }
    s
}

/// Trapani's test for every group and moment order: `moments.<ext>`,
/// `moments_table.txt`, `rejections.csv`, `run.json`.
pub fn run_test_moments(inputs: &Inputs, s: &MomentSettings, out: &OutDir) -> Result<RunSummary<MomentSettings>> {
    if s.moment_p.is_empty() || s.moment_p.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(CliError::Config("moment orders must be positive".into()));
    }
    let prov = Provenance::new(&("test-moments", s), &inputs.hashed(), s.seed)?;
    let prep = prepare(inputs, &s.pipeline)?;
    let results: Vec<Option<Result<Vec<MomentTestResult>>>> = prep
        .groups
        .par_iter()
        .map(|g| (!g.below_threshold).then(|| test_group(&g.values, s, group_seed(s.seed, g))))
        .collect();
    let threshold = s.pipeline.threshold();
    let statuses: Vec<GroupStatus> = prep.groups.iter().zip(&results).map(|(g, r)| GroupStatus::of(g, threshold, r)).collect();
    write_rejections(out, &prep.rejections, &prov)?;
    require_some(&results, threshold)?;

    let mut table = Table::new(&COLUMNS);
    for (g, r) in prep.groups.iter().zip(&results) {
        for (k, &p) in s.moment_p.iter().enumerate() {
            let mut row: Vec<Cell> = vec![g.key.country.as_str().into(), g.key.part.as_str().into(), g.n.into(), p.into()];
            match r {
                Some(Ok(res)) => row.extend([
                    res[k].theta.into(),
                    res[k].p_value.into(),
                    res[k].rejects(s.level).into(),
                    false.into(),
                    Cell::Null,
                ]),
                Some(Err(e)) => row.extend([Cell::Null, Cell::Null, Cell::Null, false.into(), e.to_string().into()]),
                None => row.extend([Cell::Null, Cell::Null, Cell::Null, true.into(), Cell::Null]),
            }
            table.push(row);
        }
    }
    out.write_table("moments", &table, s.format, &prov)?;
    let keys: Vec<String> = prep.groups.iter().map(|g| g.key.to_string()).collect();
    let text = prov.comment_line() + &text_table(&keys, &results, &s.moment_p);
    out.write("moments_table.txt", text.as_bytes())?;
    let flat: Vec<(&String, &MomentTestResult)> = keys
        .iter()
        .zip(&results)
        .filter_map(|(k, r)| match r {
            Some(Ok(res)) => Some(res.iter().map(move |t| (k, t))),
            _ => None,
        })
        .flatten()
        .collect();
    let summary = RunSummary {
        provenance: prov,
        command: "test-moments".into(),
        settings: s.clone(),
        ingest: Some(prep.summary),
        groups: statuses,
        results: to_value(&flat)?,
    };
    out.write_json("run.json", &summary)?;
    Ok(summary)
}
