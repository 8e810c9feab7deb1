//! Run manifests and the on-disk run directory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::ensemble::TimeSeries;
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Hash of command, resolved config, extra parameters and tool version.
    pub run_id: String,
    pub command: String,
    pub config: RunConfig,
    /// Command-specific parameters not covered by `config`.
    #[serde(default)]
    pub params: serde_json::Value,
    pub seed: u64,
    pub tool_version: String,
    /// Seconds since the Unix epoch; not part of the id.
    pub created_unix: u64,
    #[serde(default)]
    pub conflicts: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: RunConfig, params: serde_json::Value, conflicts: Vec<String>) -> Result<Self> {
        let run_id = run_id(command, &config, &params)?;
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(Self {
            run_id,
            command: command.to_string(),
            seed: config.ensemble.seed,
            config,
            params,
            tool_version: TOOL_VERSION.to_string(),
            created_unix,
            conflicts,
        })
    }
}

/// First 16 hex digits of SHA-256 over the canonical JSON of the inputs.
pub fn run_id(command: &str, config: &RunConfig, params: &serde_json::Value) -> Result<String> {
    let payload = serde_json::to_vec(&(command, config, params, TOOL_VERSION))?;
    let digest = Sha256::digest(payload);
    Ok(hex::encode(&digest[..8]))
}

/// `<root>/<run_id>/` with its manifest.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
    pub manifest: RunManifest,
}

impl RunDir {
    pub fn create(root: &Path, manifest: RunManifest) -> Result<Self> {
        let path = root.join(&manifest.run_id);
        fs::create_dir_all(&path)?;
        let dir = Self { path, manifest };
        dir.write_json("manifest.json", &dir.manifest)?;
        Ok(dir)
    }

    pub fn open(path: &Path) -> Result<Self> {
        let f = File::open(path.join("manifest.json"))?;
        let manifest = serde_json::from_reader(BufReader::new(f))?;
        Ok(Self {
            path: path.to_path_buf(),
            manifest,
        })
    }

    /// Writes `series_<label>.csv` stamped with this run's id.
    pub fn write_series(&self, label: &str, series: &TimeSeries) -> Result<PathBuf> {
        let path = self.path.join(format!("series_{label}.csv"));
        let stamped = series.clone().with_meta(self.manifest.run_id.clone());
        stamped.write_csv(BufWriter::new(File::create(&path)?))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, value)?;
        use std::io::Write;
        writeln!(w)?;
        Ok(path)
    }

    /// All `series_*.csv` files, sorted by label.
    pub fn read_all_series(&self) -> Result<Vec<(String, TimeSeries)>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.path)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if let Some(label) = name.strip_prefix("series_").and_then(|n| n.strip_suffix(".csv")) {
                out.push((label.to_string(), read_series(&path)?));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }
}

pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let f = File::open(path).map_err(|e| Error::Series {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    TimeSeries::read_csv(BufReader::new(f), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Observable;

    #[test]
    fn id_depends_on_inputs_only() {
        let c = RunConfig::default();
        let a = run_id("le", &c, &serde_json::Value::Null).unwrap();
        assert_eq!(a, run_id("le", &c, &serde_json::Value::Null).unwrap());
        assert_ne!(a, run_id("forward", &c, &serde_json::Value::Null).unwrap());
        let mut c2 = c.clone();
        c2.model.j_se = 0.2;
        assert_ne!(a, run_id("le", &c2, &serde_json::Value::Null).unwrap());
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn run_dir_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let m = RunManifest::new("le", RunConfig::default(), serde_json::Value::Null, vec![]).unwrap();
        let dir = RunDir::create(tmp.path(), m.clone()).unwrap();
        let s = TimeSeries::new(vec![0.0, 1.0], vec![1.0, 0.5], Observable::MLE);
        dir.write_series("MLE", &s).unwrap();
        let back = RunDir::open(&dir.path).unwrap();
        assert_eq!(back.manifest, m);
        let all = back.read_all_series().unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].1.meta.as_deref(), Some(m.run_id.as_str()));
        assert_eq!(all[0].1.values, s.values);
    }
}
