use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

/// Output directory that records every artifact it writes.
pub struct OutDir {
    dir: PathBuf,
    artifacts: Vec<String>,
    started: u64,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            started: unix_now(),
        })
    }

    /// Writes `name` through a temporary file and a rename so readers never
    /// see a partial file.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        {
            let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok(())
        })
    }

    /// Writes `manifest.json` listing every artifact written so far.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C, seeds: &[u64]) -> Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a, C> {
            command: &'a str,
            version: &'a str,
            config: &'a C,
            seeds: &'a [u64],
            artifacts: &'a [String],
            started_unix: u64,
            finished_unix: u64,
        }
        let artifacts = std::mem::take(&mut self.artifacts);
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            seeds,
            artifacts: &artifacts,
            started_unix: self.started,
            finished_unix: unix_now(),
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(())
    }
}
