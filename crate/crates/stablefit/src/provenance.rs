//! Run identification embedded in every output file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const TOOL: &str = "stablefit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the command settings and the contents of every input file.
    pub config_hash: String,
    pub seed: u64,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of a file's contents.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

impl Provenance {
    /// Hashes `settings` together with the input files. Paths themselves
    /// are not hashed, so moving the inputs keeps the hash.
    pub fn new<S: Serialize>(settings: &S, inputs: &[&Path], seed: u64) -> Result<Self> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(settings).map_err(|e| CliError::Config(e.to_string()))?);
        for p in inputs {
            h.update(b"\0");
            h.update(file_digest(p)?.as_bytes());
        }
        Ok(Provenance {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            config_hash: hex(&h.finalize()),
            seed,
        })
    }

    /// One `#` comment line for delimited text outputs.
    pub fn comment_line(&self) -> String {
        format!("# {} {} config={} seed={}\n", self.tool, self.version, self.config_hash, self.seed)
    }
}
