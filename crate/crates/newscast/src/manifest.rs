//! Run manifests: the resolved config, the seed, the command arguments and
//! sha256 digests of every input and output file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{AppError, AppResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    /// Command-specific arguments, excluding `--config`, `--seed` and `--out`.
    pub args: Vec<String>,
    pub config: PipelineConfig,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> AppResult<String> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Files under `path` (or `path` itself), sorted, skipping manifests.
pub fn files_under(path: &Path) -> AppResult<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| AppError::io(&dir, e))? {
            let p = entry.map_err(|e| AppError::io(&dir, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != MANIFEST_FILE) {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Digests of all files under `path`, named as given plus the relative tail.
pub fn digest_inputs(path: &Path) -> AppResult<Vec<FileDigest>> {
    files_under(path)?
        .into_iter()
        .map(|p| {
            Ok(FileDigest {
                sha256: digest_file(&p)?,
                path: p.display().to_string(),
            })
        })
        .collect()
}

/// Digests of every file under `dir`, relative to it.
pub fn digest_outputs(dir: &Path) -> AppResult<Vec<FileDigest>> {
    files_under(dir)?
        .into_iter()
        .map(|p| {
            let rel = p.strip_prefix(dir).unwrap_or(&p);
            Ok(FileDigest {
                path: rel.to_string_lossy().replace('\\', "/"),
                sha256: digest_file(&p)?,
            })
        })
        .collect()
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> AppResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())
    }

    pub fn read(path: &Path) -> AppResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| AppError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn outputs_are_relative_and_sorted() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(&dir.path().join("b.txt"), b"b").unwrap();
        write_atomic(&dir.path().join("sub/a.txt"), b"a").unwrap();
        write_atomic(&dir.path().join(MANIFEST_FILE), b"{}").unwrap();
        let d = digest_outputs(dir.path()).unwrap();
        let names: Vec<&str> = d.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(names, vec!["b.txt", "sub/a.txt"]);
    }
}
