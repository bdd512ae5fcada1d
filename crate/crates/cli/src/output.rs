//! Output directories whose files are hashed into a manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    /// path relative to the run directory, `/`-separated
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema: u32,
    mode: &'a str,
    seed: u64,
    files: &'a [FileRecord],
}

/// One directory tree of results. Files are buffered, written once and
/// recorded; `finish` adds the manifest.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    records: Vec<FileRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<OutputDir> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `relative` with the bytes produced by `fill`.
    pub fn write(
        &mut self,
        relative: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
    ) -> io::Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write_bytes(relative, &buf)
    }

    pub fn write_bytes(&mut self, relative: &str, bytes: &[u8]) -> io::Result<()> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut f = fs::File::create(&path)?;
        f.write_all(bytes)?;
        self.records.push(FileRecord {
            path: relative.to_string(),
            bytes: bytes.len(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json(&mut self, relative: &str, value: &impl Serialize) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write_bytes(relative, text.as_bytes())
    }

    /// Takes over the records of a sub-directory written by another job.
    pub fn absorb(&mut self, prefix: &str, records: Vec<FileRecord>) {
        self.records.extend(records.into_iter().map(|r| FileRecord {
            path: format!("{prefix}/{}", r.path),
            ..r
        }));
    }

    pub fn into_records(self) -> Vec<FileRecord> {
        self.records
    }

    /// Writes the manifest, listing files in path order.
    pub fn finish(mut self, mode: &str, seed: u64) -> io::Result<Vec<FileRecord>> {
        self.records.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            schema: crate::config::SCHEMA_VERSION,
            mode,
            seed,
            files: &self.records,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(self.root.join(MANIFEST), text)?;
        Ok(self.records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_hash_of_written_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_bytes("a/b.csv", b"abc").unwrap();
        let records = out.finish("spectrum", 1).unwrap();
        assert_eq!(
            records[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(fs::read(dir.path().join("a/b.csv")).unwrap(), b"abc");
        let manifest = fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
        assert!(manifest.contains("\"a/b.csv\""));
    }
}
