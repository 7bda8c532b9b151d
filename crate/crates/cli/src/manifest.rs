//! Per-run manifest: what ran, with which settings and seed, and what it wrote.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Resolved;
use crate::error::CliResult;
use crate::io::write_file;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub seed_source: &'static str,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_hash: String,
    pub config: Resolved,
    pub status: String,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
}

pub fn config_hash(config: &Resolved) -> String {
    // serde_json maps keep keys sorted, so the encoding is canonical.
    let bytes = serde_json::to_vec(config).expect("serializable config");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(command: &str, seed: Option<(u64, bool)>, config: Resolved) -> Self {
        Manifest {
            tool: "elm-uq",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed: seed.map(|s| s.0),
            seed_source: match seed {
                Some((_, true)) => "given",
                Some((_, false)) => "generated",
                None => "none",
            },
            config_hash: config_hash(&config),
            config,
            status: "complete".into(),
            outputs: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn output(&mut self, path: &Path) {
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.outputs.push(name);
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        write_file(dir, "manifest.json", |w| {
            serde_json::to_writer_pretty(&mut *w, self).map_err(std::io::Error::other)?;
            writeln!(w)
        })
    }
}

use std::io::Write as _;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_key_order_free() {
        let mut a = Resolved::new();
        a.set("neurons", 4).set("alpha", 0.0);
        let mut b = Resolved::new();
        b.set("alpha", 0.0).set("neurons", 4);
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        b.set("neurons", 5);
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
