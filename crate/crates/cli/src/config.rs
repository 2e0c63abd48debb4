//! Run and training configuration documents.

use std::path::{Path, PathBuf};

use qcloud::rl::{JobDistribution, RlConfig};
use qcloud::scheduler::PolicyKind;
use qcloud::workload::WorkloadSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadSource {
    /// Job trace CSV.
    Trace(PathBuf),
    /// Synthetic workload; its seed is replaced by the run seed.
    Spec(WorkloadSpec),
}

/// `simulate` configuration. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cloud_manifest: PathBuf,
    pub mode: PolicyKind,
    pub workload: WorkloadSource,
    #[serde(default)]
    pub rl_policy_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

/// `train-rl` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub cloud_manifest: PathBuf,
    #[serde(default)]
    pub rl: RlConfig,
    #[serde(default = "JobDistribution::standard")]
    pub jobs: JobDistribution,
    pub output_dir: PathBuf,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn must_exist(field: &str, p: &Path) -> Result<(), CliError> {
    if p.exists() {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "{field}: {} does not exist",
            p.display()
        )))
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

impl RunConfig {
    /// Reads the file, resolves paths and checks that inputs exist.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = read_json(path)?;
        let base = base_dir(path);
        cfg.cloud_manifest = resolve(&base, &cfg.cloud_manifest);
        cfg.output_dir = resolve(&base, &cfg.output_dir);
        cfg.rl_policy_path = cfg.rl_policy_path.map(|p| resolve(&base, &p));
        if let WorkloadSource::Trace(t) = &mut cfg.workload {
            *t = resolve(&base, t);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        must_exist("cloud_manifest", &self.cloud_manifest)?;
        if let WorkloadSource::Trace(t) = &self.workload {
            must_exist("workload.trace", t)?;
        }
        self.check_policy_for(self.mode)
    }

    pub fn check_policy_for(&self, mode: PolicyKind) -> Result<(), CliError> {
        if mode == PolicyKind::RlBase {
            match &self.rl_policy_path {
                None => {
                    return Err(CliError::config(
                        "rl_policy_path: required when mode is rlbase",
                    ))
                }
                Some(p) => must_exist("rl_policy_path", p)?,
            }
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }
}

impl TrainConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: TrainConfig = read_json(path)?;
        let base = base_dir(path);
        cfg.cloud_manifest = resolve(&base, &cfg.cloud_manifest);
        cfg.output_dir = resolve(&base, &cfg.output_dir);
        must_exist("cloud_manifest", &cfg.cloud_manifest)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workload_variants_parse() {
        let trace: RunConfig = serde_json::from_str(
            r#"{"cloud_manifest": "c.json", "mode": "fair", "workload": {"trace": "jobs.csv"}, "output_dir": "out"}"#,
        )
        .unwrap();
        assert_eq!(trace.workload, WorkloadSource::Trace("jobs.csv".into()));
        assert_eq!(trace.seed, 0);
        let spec: RunConfig = serde_json::from_str(
            r#"{"cloud_manifest": "c.json", "mode": "rlbase", "rl_policy_path": "p.json", "output_dir": "out",
                "workload": {"spec": {"count": 3, "qubit_range": [130, 250], "depth_range": [5, 20],
                                      "shots_range": [10, 20]}}}"#,
        )
        .unwrap();
        assert!(matches!(spec.workload, WorkloadSource::Spec(ref s) if s.count == 3));
        assert_eq!(spec.mode, PolicyKind::RlBase);
    }

    #[test]
    fn rlbase_needs_a_policy() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("c.json"), "{}").unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"cloud_manifest": "c.json", "mode": "rlbase", "workload": {"trace": "c.json"}, "output_dir": "o"}"#,
        )
        .unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("rl_policy_path"), "{err}");
    }

    #[test]
    fn hash_tracks_content() {
        let a: RunConfig = serde_json::from_str(
            r#"{"cloud_manifest": "c.json", "mode": "fair", "workload": {"trace": "j.csv"}, "output_dir": "o"}"#,
        )
        .unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
