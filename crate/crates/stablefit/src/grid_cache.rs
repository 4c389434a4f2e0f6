//! On-disk cache of the McCulloch lookup grid.
//!
//! Format (version 1): a first line `# stablefit-grid v1`, optional `#`
//! comment lines (provenance), then a CSV table with header `alpha,beta,phi1,phi2,phi3,phi4` and one row per node,
//! α-major. Numbers are written in shortest round-trip form, so reading a
//! cache gives back the grid bit for bit.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use stablefit_core::estimators::{self, McCullochGrid};

use crate::error::{CliError, Result};
use crate::provenance::Provenance;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# stablefit-grid v";
const HEADER: [&str; 6] = ["alpha", "beta", "phi1", "phi2", "phi3", "phi4"];

pub fn write_grid<W: Write>(grid: &McCullochGrid, prov: Option<&Provenance>, mut w: W) -> Result<()> {
    let io = |e| CliError::io("<grid>", e);
    writeln!(w, "{MAGIC}{FORMAT_VERSION}").map_err(io)?;
    if let Some(p) = prov {
        w.write_all(p.comment_line().as_bytes()).map_err(io)?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER).map_err(csv_err)?;
    let nb = grid.beta_axis.len();
    for (i, a) in grid.alpha_axis.iter().enumerate() {
        for (j, b) in grid.beta_axis.iter().enumerate() {
            let k = i * nb + j;
            let row = [*a, *b, grid.phi1[k], grid.phi2[k], grid.phi3[k], grid.phi4[k]];
            out.write_record(row.iter().map(f64::to_string)).map_err(csv_err)?;
        }
    }
    out.flush().map_err(io)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Data(format!("grid cache: {e}"))
}

fn push_axis(axis: &mut Vec<f64>, v: f64) -> bool {
    match axis.last() {
        Some(&last) if last == v => true,
        Some(&last) if last > v => false,
        _ => {
            axis.push(v);
            true
        }
    }
}

pub fn read_grid<R: Read>(r: R) -> Result<McCullochGrid> {
    let mut r = BufReader::new(r);
    let mut first = String::new();
    r.read_line(&mut first).map_err(|e| CliError::io("<grid>", e))?;
    let version = first.trim_end().strip_prefix(MAGIC).and_then(|v| v.parse::<u32>().ok());
    if version != Some(FORMAT_VERSION) {
        return Err(CliError::Data(format!(
            "grid cache: expected `{MAGIC}{FORMAT_VERSION}`, found `{}`",
            first.trim_end()
        )));
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    if rdr.headers().map_err(csv_err)?.iter().ne(HEADER) {
        return Err(CliError::Data("grid cache: unexpected header".into()));
    }
    let mut g = McCullochGrid {
        alpha_axis: Vec::new(),
        beta_axis: Vec::new(),
        phi1: Vec::new(),
        phi2: Vec::new(),
        phi3: Vec::new(),
        phi4: Vec::new(),
    };
    let mut betas_done = false;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Data(format!("grid cache row {}: {e}", line + 1)))?;
        if v.len() != 6 {
            return Err(CliError::Data(format!("grid cache row {}: expected 6 fields", line + 1)));
        }
        if !push_axis(&mut g.alpha_axis, v[0]) {
            return Err(CliError::Data("grid cache: alpha not sorted".into()));
        }
        if g.alpha_axis.len() > 1 {
            betas_done = true;
        }
        if !betas_done && !push_axis(&mut g.beta_axis, v[1]) {
            return Err(CliError::Data("grid cache: beta not sorted".into()));
        }
        let nb = g.beta_axis.len();
        if betas_done && g.beta_axis[g.phi1.len() % nb] != v[1] {
            return Err(CliError::Data(format!("grid cache row {}: beta out of order", line + 1)));
        }
        g.phi1.push(v[2]);
        g.phi2.push(v[3]);
        g.phi3.push(v[4]);
        g.phi4.push(v[5]);
    }
    if g.alpha_axis.len() < 2 || g.beta_axis.len() < 2 || g.phi1.len() != g.alpha_axis.len() * g.beta_axis.len() {
        return Err(CliError::Data("grid cache: table is not a complete rectangle".into()));
    }
    Ok(g)
}

pub fn build_default() -> Result<McCullochGrid> {
    Ok(estimators::build_grid(&estimators::default_alpha_axis(), &estimators::default_beta_axis())?)
}

/// Provenance of a grid file: the axes are its only settings.
pub fn provenance(grid: &McCullochGrid) -> Result<Provenance> {
    Provenance::new(&(&grid.alpha_axis, &grid.beta_axis), &[], 0)
}

/// Reads the cache at `path`, or builds the default grid and writes it
/// there first. Without a path the grid is built in memory.
pub fn load_or_build(path: Option<&Path>) -> Result<McCullochGrid> {
    let Some(path) = path else {
        return build_default();
    };
    if path.exists() {
        let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        return read_grid(f);
    }
    let g = build_default()?;
    let f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_grid(&g, Some(&provenance(&g)?), std::io::BufWriter::new(f))?;
    Ok(g)
}
