//! Run manifests: a reproducibility record written atomically next to the
//! output CSV. Contains the normalized config snapshot, the effective seed
//! and where it came from, applied overrides, and timestamps.

use crate::config::ExperimentConfig;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub master_seed: u64,
    pub seed_source: String,
    pub overrides: Vec<String>,
    pub workers: usize,
    pub output_csv: PathBuf,
    pub config: ExperimentConfig,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str("# fvshe run manifest\n");
        s.push_str(&format!("tool_version = {}\n", self.tool_version));
        s.push_str(&format!("started_unix = {}\n", self.started_unix));
        s.push_str(&format!("finished_unix = {}\n", self.finished_unix));
        s.push_str(&format!("master_seed = {}\n", self.master_seed));
        s.push_str(&format!("seed_source = {}\n", self.seed_source));
        for o in &self.overrides {
            s.push_str(&format!("override = {o}\n"));
        }
        s.push_str(&format!("workers = {}\n", self.workers));
        s.push_str(&format!("output_csv = {}\n", self.output_csv.display()));
        s.push_str("\n# normalized config\n");
        s.push_str(&self.config.serialize());
        s
    }

    /// Writes via a temp file plus rename so readers never see a torn file.
    pub fn write_atomic(&self, path: &Path) -> std::io::Result<()> {
        let tmp = path.with_extension("manifest.tmp");
        std::fs::write(&tmp, self.render())?;
        std::fs::rename(&tmp, path)
    }
}

/// The manifest path used for a given output CSV.
pub fn manifest_path(output_csv: &Path) -> PathBuf {
    let mut os = output_csv.as_os_str().to_os_string();
    os.push(".manifest");
    PathBuf::from(os)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_config_round_trips() {
        let cfg = ExperimentConfig::parse(
            "domain = -1 1 -1 1\nT = 1\nu0 = paper-poly\ng = zero\nL_list = 4\nL_max = 8\n\
             N_list = 8\nN_max = 16\nn_realizations = 2\nmaster_seed = 3\noutput = o.csv\n",
        )
        .unwrap();
        let m = RunManifest {
            tool_version: "0.0.0".into(),
            started_unix: 1,
            finished_unix: 2,
            master_seed: 3,
            seed_source: "config".into(),
            overrides: vec!["n_realizations=2".into()],
            workers: 2,
            output_csv: "o.csv".into(),
            config: cfg.clone(),
        };
        let text = m.render();
        let config_part = text.split("# normalized config\n").nth(1).unwrap();
        let back = ExperimentConfig::parse(config_part).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn atomic_write_creates_file() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("res.csv");
        let cfg = ExperimentConfig::parse(
            "domain = -1 1 -1 1\nT = 1\nu0 = paper-poly\ng = zero\nL_list = 4\nL_max = 8\n\
             N_list = 8\nN_max = 16\nn_realizations = 2\nmaster_seed = 3\noutput = o.csv\n",
        )
        .unwrap();
        let m = RunManifest {
            tool_version: "0.0.0".into(),
            started_unix: 1,
            finished_unix: 2,
            master_seed: 3,
            seed_source: "config".into(),
            overrides: vec![],
            workers: 0,
            output_csv: out.clone(),
            config: cfg,
        };
        let path = manifest_path(&out);
        m.write_atomic(&path).unwrap();
        assert!(path.exists());
        assert!(std::fs::read_to_string(&path)
            .unwrap()
            .contains("master_seed = 3"));
    }
}
