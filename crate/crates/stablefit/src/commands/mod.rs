//! Command implementations. Each command takes typed settings, writes its
//! files into an output directory and returns a summary.
//!
//! Every command that reads a panel runs the same pipeline: ingest, clean,
//! optionally deflate, build variables, group. It writes `rejections.csv`
//! and `run.json` (provenance, settings, ingest reconciliation and the
//! status of every group) next to its main output.

mod compare;
mod fit;
mod grid;
mod moments;
mod report;
mod scaling;
mod simulate;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stablefit_core::panel::{self, CleanConfig, DeflateStats, Dimension, PanelGroup, Rejection, Variable};
use stablefit_core::rng::seed_for_key;

use crate::csv_io;
use crate::error::{CliError, Result};
use crate::output::OutDir;
use crate::provenance::Provenance;

pub use compare::{compare_sample, run_compare, CompareRow, CompareSettings};
pub use fit::{run_fit, FitSettings, Model};
pub use grid::{run_build_grid, GridSettings};
pub use moments::{run_test_moments, MomentSettings};
pub use report::{run_report, ReportSettings};
pub use scaling::{run_scaling, ScalingSettings};
pub use simulate::run_simulate;

/// Input files of a panel command. Only their contents enter the config
/// hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inputs {
    pub panel: PathBuf,
    pub deflators: Option<PathBuf>,
    /// Grid cache; built in memory when absent.
    pub grid: Option<PathBuf>,
}

impl Inputs {
    fn hashed(&self) -> Vec<&Path> {
        let mut v = vec![self.panel.as_path()];
        v.extend(self.deflators.as_deref());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub group_by: Dimension,
    pub variable: Variable,
    /// Overrides the dimension's minimum group size.
    pub min_n: Option<usize>,
    pub first_year: i32,
    pub last_year: i32,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        let c = CleanConfig::default();
        PipelineSettings {
            group_by: Dimension::CountryYear,
            variable: Variable::Lp,
            min_n: None,
            first_year: c.first_year,
            last_year: c.last_year,
        }
    }
}

impl PipelineSettings {
    pub fn threshold(&self) -> usize {
        self.min_n.unwrap_or(self.group_by.threshold())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub rows_read: usize,
    pub records_kept: usize,
    pub rejected: usize,
    pub rejected_by_reason: BTreeMap<String, usize>,
    pub nulled_fields: usize,
    pub deflators: Option<DeflateStats>,
    pub observations: usize,
    pub groups: usize,
    pub groups_meeting_threshold: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Done,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStatus {
    pub key: String,
    pub n: usize,
    pub status: Status,
    pub message: Option<String>,
}

impl GroupStatus {
    fn of<T>(g: &PanelGroup, threshold: usize, r: &Option<Result<T>>) -> Self {
        let (status, message) = match r {
            None => (Status::Skipped, Some(format!("n < {threshold}"))),
            Some(Ok(_)) => (Status::Done, None),
            Some(Err(e)) => (Status::Failed, Some(e.to_string())),
        };
        GroupStatus {
            key: g.key.to_string(),
            n: g.n,
            status,
            message,
        }
    }
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary<S> {
    pub provenance: Provenance,
    pub command: String,
    pub settings: S,
    pub ingest: Option<IngestSummary>,
    pub groups: Vec<GroupStatus>,
    /// Command-specific results.
    pub results: serde_json::Value,
}

pub(crate) struct Prepared {
    pub summary: IngestSummary,
    pub rejections: Vec<Rejection>,
    pub groups: Vec<PanelGroup>,
}

/// Runs the panel pipeline up to grouping.
pub(crate) fn prepare(inputs: &Inputs, s: &PipelineSettings) -> Result<Prepared> {
    if s.last_year < s.first_year {
        return Err(CliError::Config("last year before first year".into()));
    }
    let cfg = CleanConfig {
        first_year: s.first_year,
        last_year: s.last_year,
    };
    let mut ing = csv_io::ingest_path(&inputs.panel, &cfg)?;
    if ing.rows_read == 0 {
        return Err(CliError::Data(format!("{}: empty input, no data rows", inputs.panel.display())));
    }
    let deflators = match &inputs.deflators {
        Some(p) => Some(panel::deflate(&mut ing.records, &csv_io::read_deflators_path(p)?)),
        None => None,
    };
    let obs = panel::observations(&ing.records);
    let groups = panel::group(&obs, s.group_by, s.variable, s.min_n);
    let mut by_reason = BTreeMap::new();
    for r in &ing.rejections {
        *by_reason.entry(r.reason.code().to_string()).or_insert(0) += 1;
    }
    let summary = IngestSummary {
        rows_read: ing.rows_read,
        records_kept: ing.records.len(),
        rejected: ing.rejections.len(),
        rejected_by_reason: by_reason,
        nulled_fields: ing.nulled_fields,
        deflators,
        observations: obs.len(),
        groups: groups.len(),
        groups_meeting_threshold: groups.iter().filter(|g| !g.below_threshold).count(),
    };
    Ok(Prepared {
        summary,
        rejections: ing.rejections,
        groups,
    })
}

/// Seed of one group, derived from the run seed and the group key.
pub(crate) fn group_seed(seed: u64, g: &PanelGroup) -> u64 {
    seed_for_key(seed, &format!("{}/{}/{}", g.dimension.as_str(), g.variable.as_str(), g.key))
}

pub(crate) fn write_rejections(out: &OutDir, rejections: &[Rejection], prov: &Provenance) -> Result<()> {
    let mut buf = Vec::new();
    csv_io::write_rejections(rejections, Some(prov), &mut buf)?;
    out.write("rejections.csv", &buf)?;
    Ok(())
}

/// Fails when no group could be processed: a data error when all were
/// below threshold, otherwise the kind of the first group error.
pub(crate) fn require_some<T>(results: &[Option<Result<T>>], threshold: usize) -> Result<()> {
    if results.iter().any(|r| matches!(r, Some(Ok(_)))) {
        return Ok(());
    }
    match results.iter().flatten().find_map(|r| r.as_ref().err()) {
        None => Err(CliError::Data(format!("no group has at least {threshold} observations"))),
        Some(e) => {
            let msg = format!("every group failed; first error: {e}");
            Err(match e {
                CliError::Numerical(_) => CliError::Numerical(msg),
                CliError::Config(_) => CliError::Config(msg),
                _ => CliError::Data(msg),
            })
        }
    }
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| CliError::Data(format!("serializing results: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn require_some_picks_the_exit_kind() {
        let ok: Vec<Option<Result<()>>> = vec![None, Some(Ok(()))];
        assert!(require_some(&ok, 10).is_ok());
        let skipped: Vec<Option<Result<()>>> = vec![None, None];
        assert_eq!(require_some(&skipped, 10).unwrap_err().exit_code(), CliError::EXIT_DATA);
        let failed: Vec<Option<Result<()>>> = vec![None, Some(Err(CliError::Numerical("nm".into())))];
        assert_eq!(require_some(&failed, 10).unwrap_err().exit_code(), CliError::EXIT_NUMERICAL);
    }
}
