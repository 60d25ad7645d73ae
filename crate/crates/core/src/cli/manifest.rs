//! Run manifests: content hashes of everything a subcommand read and wrote.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::table;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// No timestamps or absolute paths, so a rerun writes identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub version: String,
    pub seed: u64,
    pub config: Option<FileHash>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(h.finalize()), total))
}

/// Path shown relative to `root` when it lies below it.
fn display_path(path: &Path, root: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

fn hash_all(paths: &[PathBuf], root: &Path) -> Result<Vec<FileHash>> {
    let mut out: Vec<FileHash> = paths
        .iter()
        .map(|p| {
            let (sha256, bytes) = sha256_file(p)?;
            Ok(FileHash {
                path: display_path(p, root),
                sha256,
                bytes,
            })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    out.dedup_by(|a, b| a.path == b.path);
    Ok(out)
}

/// Collects the files a subcommand touched.
#[derive(Debug, Default)]
pub struct Tracker {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Tracker {
    pub fn input(&mut self, p: impl Into<PathBuf>) {
        self.inputs.push(p.into());
    }

    pub fn output(&mut self, p: impl Into<PathBuf>) {
        self.outputs.push(p.into());
    }

    pub fn absorb(&mut self, other: Tracker) {
        self.inputs.extend(other.inputs);
        self.outputs.extend(other.outputs);
    }

    /// Hashes the tracked files and writes `manifest-<subcommand>.json`
    /// under `root`. Files produced in the same run are not listed as inputs.
    pub fn write(
        &self,
        root: &Path,
        subcommand: &str,
        seed: u64,
        config: Option<&Path>,
    ) -> Result<PathBuf> {
        let inputs: Vec<PathBuf> = self
            .inputs
            .iter()
            .filter(|p| !self.outputs.contains(p))
            .cloned()
            .collect();
        let config = match config {
            Some(p) => {
                let (sha256, bytes) = sha256_file(p)?;
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                Some(FileHash { path: name, sha256, bytes })
            }
            None => None,
        };
        let m = Manifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: hash_all(&inputs, root)?,
            outputs: hash_all(&self.outputs, root)?,
        };
        table::ensure_dir(root)?;
        let path = root.join(format!("manifest-{subcommand}.json"));
        table::write_json(&path, &m)?;
        Ok(path)
    }
}
