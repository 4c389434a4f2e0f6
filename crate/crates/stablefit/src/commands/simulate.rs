use std::path::Path;

use crate::csv_io;
use crate::error::Result;
use crate::output::OutDir;
use crate::provenance::Provenance;
use crate::simulate::{self, SimConfig};

/// Writes a synthetic panel CSV to `path`; returns the number of rows.
pub fn run_simulate(cfg: &SimConfig, path: &Path) -> Result<usize> {
    let rows = simulate::simulate(cfg)?;
    let prov = Provenance::new(&("simulate", cfg), &[], cfg.seed)?;
    let mut buf = Vec::new();
    csv_io::write_panel(&rows, Some(&prov), &mut buf)?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("panel.csv");
    OutDir::create(dir)?.write(name, &buf)?;
    Ok(rows.len())
}
