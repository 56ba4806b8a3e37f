use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

pub const OUTPUT_ROOT_ENV: &str = "FRSM_OUTPUT_ROOT";

/// Resolves `out` against the output root; absolute paths are kept.
pub fn resolve_output_dir(out: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => Path::new(&root).join(out),
        _ => out.to_path_buf(),
    }
}

/// Write-then-rename into `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub output_dir: String,
    pub artifacts: Vec<String>,
    pub wall_clock_secs: f64,
    pub evaluations: Option<usize>,
    pub status: String,
}

/// Collects artifacts of one command and writes the manifest last.
pub struct OutputDir {
    dir: PathBuf,
    command: String,
    started: Instant,
    artifacts: Vec<String>,
}

impl OutputDir {
    pub fn create(out: &Path, command: &str) -> Result<Self> {
        let dir = resolve_output_dir(out);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, command: command.to_string(), started: Instant::now(), artifacts: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Records files written by other means (relative to the output dir).
    pub fn record(&mut self, name: String) {
        self.artifacts.push(name);
    }

    pub fn finish(
        mut self,
        config: serde_json::Value,
        seed: Option<u64>,
        evaluations: Option<usize>,
        status: &str,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command.clone(),
            config,
            seed,
            output_dir: self.dir.display().to_string(),
            artifacts: self.artifacts.clone(),
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
            evaluations,
            status: status.to_string(),
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(self.dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.csv");
        write_atomic(&p, b"x,y\n").unwrap();
        write_atomic(&p, b"x,z\n").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"x,z\n");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn manifest_lists_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&dir.path().join("run"), "design").unwrap();
        out.write("design.csv", b"x1\n").unwrap();
        let path = out.finish(serde_json::json!({"d": 1}), None, None, "ok").unwrap();
        let m: serde_json::Value = serde_json::from_slice(&fs::read(path.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["artifacts"][0], "design.csv");
        assert_eq!(m["command"], "design");
    }
}
