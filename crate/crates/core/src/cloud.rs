//! Cloud manifests: the device profile files plus global model parameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{load_device_profile, DeviceProfile, ErrorScoreWeights, ProfileError};
use crate::metrics::MetricsConfig;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Profile {
        path: String,
        #[source]
        source: ProfileError,
    },
    #[error("{path}: manifest lists no devices")]
    Empty { path: String },
    #[error("{path}: duplicate device name `{name}`")]
    DuplicateName { path: String, name: String },
}

/// Manifest document. Device paths are resolved against the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudManifest {
    pub devices: Vec<PathBuf>,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub error_weights: ErrorScoreWeights,
}

/// A manifest with its profiles loaded.
#[derive(Debug, Clone)]
pub struct Cloud {
    pub profiles: Vec<DeviceProfile>,
    pub metrics: MetricsConfig,
    pub weights: ErrorScoreWeights,
}

impl Cloud {
    pub fn capacities(&self) -> Vec<u32> {
        self.profiles.iter().map(|p| p.capacity).collect()
    }
}

pub fn load_cloud(path: impl AsRef<Path>) -> Result<Cloud, ManifestError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: shown.clone(),
        source,
    })?;
    let manifest: CloudManifest =
        serde_json::from_str(&text).map_err(|source| ManifestError::Parse {
            path: shown.clone(),
            source,
        })?;
    if manifest.devices.is_empty() {
        return Err(ManifestError::Empty { path: shown });
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut profiles: Vec<DeviceProfile> = Vec::with_capacity(manifest.devices.len());
    for rel in &manifest.devices {
        let full = base.join(rel);
        let profile = load_device_profile(&full).map_err(|source| ManifestError::Profile {
            path: full.display().to_string(),
            source,
        })?;
        if profiles.iter().any(|p| p.name == profile.name) {
            return Err(ManifestError::DuplicateName {
                path: shown,
                name: profile.name,
            });
        }
        profiles.push(profile);
    }
    Ok(Cloud {
        profiles,
        metrics: manifest.metrics,
        weights: manifest.error_weights,
    })
}

/// Writes one profile file per device plus `cloud.json` into `dir`.
pub fn write_cloud(
    dir: impl AsRef<Path>,
    profiles: &[DeviceProfile],
    metrics: &MetricsConfig,
) -> std::io::Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for p in profiles {
        let file = format!("{}.json", p.name);
        let text = serde_json::to_string_pretty(&p.to_document()).expect("profile serializes");
        std::fs::write(dir.join(&file), text + "\n")?;
        files.push(PathBuf::from(file));
    }
    let manifest = CloudManifest {
        devices: files,
        metrics: *metrics,
        error_weights: ErrorScoreWeights::default(),
    };
    let path = dir.join("cloud.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn written_cloud_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let profiles = synthetic::reference_profiles();
        let path = write_cloud(dir.path(), &profiles, &MetricsConfig::default()).unwrap();
        let cloud = load_cloud(&path).unwrap();
        assert_eq!(cloud.profiles, profiles);
        assert_eq!(cloud.metrics, MetricsConfig::default());
        assert_eq!(cloud.capacities(), vec![127; 5]);
    }

    #[test]
    fn missing_profile_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.json");
        std::fs::write(&path, r#"{"devices": ["nope.json"]}"#).unwrap();
        let err = load_cloud(&path).unwrap_err();
        assert!(err.to_string().contains("nope.json"), "{err}");
        std::fs::write(&path, r#"{"devices": []}"#).unwrap();
        assert!(matches!(
            load_cloud(&path),
            Err(ManifestError::Empty { .. })
        ));
    }

    #[test]
    fn metric_overrides_merge_with_defaults() {
        let m: CloudManifest =
            serde_json::from_str(r#"{"devices": ["a.json"], "metrics": {"phi": 0.9}}"#).unwrap();
        assert_eq!(m.metrics.phi, 0.9);
        assert_eq!(m.metrics.lambda_per_qubit, 0.02);
        assert_eq!(m.metrics.m_templates, 100);
    }
}
