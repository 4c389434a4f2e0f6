//! File formats, provenance and command implementations for the `stablefit`
//! binary.

pub mod commands;
pub mod csv_io;
pub mod error;
pub mod grid_cache;
pub mod output;
pub mod provenance;
pub mod simulate;

pub use error::{CliError, Result};
