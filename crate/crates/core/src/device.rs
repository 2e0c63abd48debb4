//! Quantum devices: static profiles, calibration data and the weighted error
//! score used by error-aware scheduling.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::StoreId;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("profile document is not valid: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("field `{field}`: {reason}")]
    Schema { field: String, reason: String },
}

fn schema(field: impl Into<String>, reason: impl Into<String>) -> ProfileError {
    ProfileError::Schema {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Per-device error rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationData {
    /// One readout error per physical qubit.
    pub readout_errors: Vec<f64>,
    /// Error rate of the single-qubit RX gate.
    pub single_qubit_error: f64,
    /// One two-qubit gate error per coupling edge.
    pub two_qubit_errors: Vec<f64>,
}

impl CalibrationData {
    pub fn mean_readout_error(&self) -> f64 {
        mean(&self.readout_errors)
    }

    pub fn mean_two_qubit_error(&self) -> f64 {
        mean(&self.two_qubit_errors)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Weights of the readout, single-qubit and two-qubit terms of the error
/// score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorScoreWeights {
    pub alpha: f64,
    pub theta: f64,
    pub gamma: f64,
}

impl Default for ErrorScoreWeights {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            theta: 0.3,
            gamma: 0.2,
        }
    }
}

/// `alpha * mean(readout) + theta * eps_1q + gamma * mean(two_qubit)`.
///
/// Lower is better. With weights summing to one and all rates in `[0, 1]`
/// the score stays in `[0, 1]`.
pub fn error_score(cal: &CalibrationData, w: &ErrorScoreWeights) -> Result<f64, ProfileError> {
    if cal.readout_errors.is_empty() {
        return Err(schema("calibration.readout_errors", "must not be empty"));
    }
    if cal.two_qubit_errors.is_empty() {
        return Err(schema("calibration.two_qubit_errors", "must not be empty"));
    }
    Ok(w.alpha * cal.mean_readout_error()
        + w.theta * cal.single_qubit_error
        + w.gamma * cal.mean_two_qubit_error())
}

/// Undirected qubit connectivity graph over vertices `0..num_vertices`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    num_vertices: u32,
    edges: Vec<(u32, u32)>,
}

impl CouplingGraph {
    pub fn new(num_vertices: u32, edges: Vec<(u32, u32)>) -> Result<Self, ProfileError> {
        for (i, &(a, b)) in edges.iter().enumerate() {
            if a >= num_vertices || b >= num_vertices {
                return Err(schema(
                    format!("coupling_edges[{i}]"),
                    format!("edge ({a}, {b}) references a vertex outside 0..{num_vertices}"),
                ));
            }
            if a == b {
                return Err(schema(format!("coupling_edges[{i}]"), "self-loop"));
            }
        }
        let graph = Self {
            num_vertices,
            edges,
        };
        if !graph.is_connected() {
            return Err(schema("coupling_edges", "coupling graph is not connected"));
        }
        Ok(graph)
    }

    pub fn num_vertices(&self) -> u32 {
        self.num_vertices
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices as usize;
        if n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b as usize);
            adj[b as usize].push(a as usize);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == n
    }
}

/// On-disk profile document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDocument {
    pub name: String,
    pub capacity: u32,
    pub clops: f64,
    pub quantum_volume: u32,
    pub coupling_edges: Vec<[u32; 2]>,
    pub calibration: CalibrationData,
}

/// Immutable hardware description of one QPU.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    pub name: String,
    pub capacity: u32,
    pub clops: f64,
    pub quantum_volume: u32,
    pub coupling_graph: CouplingGraph,
    pub calibration: CalibrationData,
}

impl DeviceProfile {
    pub fn from_document(doc: ProfileDocument) -> Result<Self, ProfileError> {
        if doc.name.is_empty() {
            return Err(schema("name", "must not be empty"));
        }
        if doc.capacity == 0 {
            return Err(schema("capacity", "must be positive"));
        }
        if !(doc.clops.is_finite() && doc.clops > 0.0) {
            return Err(schema("clops", "must be a positive number"));
        }
        if doc.quantum_volume < 2 {
            return Err(schema("quantum_volume", "must be at least 2"));
        }
        let cal = &doc.calibration;
        if cal.readout_errors.len() != doc.capacity as usize {
            return Err(schema(
                "calibration.readout_errors",
                format!(
                    "has {} entries but capacity is {}",
                    cal.readout_errors.len(),
                    doc.capacity
                ),
            ));
        }
        if cal.two_qubit_errors.len() != doc.coupling_edges.len() {
            return Err(schema(
                "calibration.two_qubit_errors",
                format!(
                    "has {} entries but there are {} coupling edges",
                    cal.two_qubit_errors.len(),
                    doc.coupling_edges.len()
                ),
            ));
        }
        check_rates("calibration.readout_errors", &cal.readout_errors)?;
        check_rates("calibration.two_qubit_errors", &cal.two_qubit_errors)?;
        if !(0.0..=1.0).contains(&cal.single_qubit_error) {
            return Err(schema(
                "calibration.single_qubit_error",
                format!("{} is outside [0, 1]", cal.single_qubit_error),
            ));
        }
        let graph = CouplingGraph::new(
            doc.capacity,
            doc.coupling_edges.iter().map(|e| (e[0], e[1])).collect(),
        )?;
        Ok(Self {
            name: doc.name,
            capacity: doc.capacity,
            clops: doc.clops,
            quantum_volume: doc.quantum_volume,
            coupling_graph: graph,
            calibration: doc.calibration,
        })
    }

    pub fn to_document(&self) -> ProfileDocument {
        ProfileDocument {
            name: self.name.clone(),
            capacity: self.capacity,
            clops: self.clops,
            quantum_volume: self.quantum_volume,
            coupling_edges: self
                .coupling_graph
                .edges()
                .iter()
                .map(|&(a, b)| [a, b])
                .collect(),
            calibration: self.calibration.clone(),
        }
    }
}

fn check_rates(field: &str, xs: &[f64]) -> Result<(), ProfileError> {
    for (i, &x) in xs.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(schema(
                format!("{field}[{i}]"),
                format!("{x} is outside [0, 1]"),
            ));
        }
    }
    Ok(())
}

pub fn parse_device_profile(text: &str) -> Result<DeviceProfile, ProfileError> {
    DeviceProfile::from_document(serde_json::from_str(text)?)
}

pub fn load_device_profile(path: impl AsRef<Path>) -> Result<DeviceProfile, ProfileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_device_profile(&text)
}

/// A device inside a running simulation: its profile, its qubit store and
/// bookkeeping for reports.
#[derive(Debug, Clone)]
pub struct QDevice {
    pub profile: DeviceProfile,
    pub store: StoreId,
    error_score: f64,
    pub jobs_served: u64,
    pub busy_time: f64,
}

impl QDevice {
    pub fn new(
        profile: DeviceProfile,
        store: StoreId,
        weights: &ErrorScoreWeights,
    ) -> Result<Self, ProfileError> {
        let error_score = error_score(&profile.calibration, weights)?;
        Ok(Self {
            profile,
            store,
            error_score,
            jobs_served: 0,
            busy_time: 0.0,
        })
    }

    pub fn error_score(&self) -> f64 {
        self.error_score
    }

    pub fn snapshot(&self, level: u32) -> DeviceSnapshot {
        DeviceSnapshot {
            capacity: self.profile.capacity,
            level,
            clops: self.profile.clops,
            quantum_volume: self.profile.quantum_volume,
            error_score: self.error_score,
        }
    }
}

/// Free qubits on a device right now.
pub fn available_qubits<W>(sim: &crate::sim::Simulation<W>, device: &QDevice) -> u32 {
    sim.store(device.store).level()
}

/// The per-device numbers the selection policies and the RL state read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceSnapshot {
    pub capacity: u32,
    pub level: u32,
    pub clops: f64,
    pub quantum_volume: u32,
    pub error_score: f64,
}

impl DeviceSnapshot {
    /// Idle device described by a profile.
    pub fn idle(
        profile: &DeviceProfile,
        weights: &ErrorScoreWeights,
    ) -> Result<Self, ProfileError> {
        Ok(Self {
            capacity: profile.capacity,
            level: profile.capacity,
            clops: profile.clops,
            quantum_volume: profile.quantum_volume,
            error_score: error_score(&profile.calibration, weights)?,
        })
    }

    /// Fraction of qubits in use.
    pub fn utilization(&self) -> f64 {
        1.0 - self.level as f64 / self.capacity as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Simulation;
    use approx::assert_relative_eq;

    fn cal(ro: Vec<f64>, e1: f64, e2: Vec<f64>) -> CalibrationData {
        CalibrationData {
            readout_errors: ro,
            single_qubit_error: e1,
            two_qubit_errors: e2,
        }
    }

    fn two_qubit_doc() -> ProfileDocument {
        ProfileDocument {
            name: "pair".into(),
            capacity: 2,
            clops: 1000.0,
            quantum_volume: 4,
            coupling_edges: vec![[0, 1]],
            calibration: cal(vec![0.01, 0.02], 0.001, vec![0.01]),
        }
    }

    #[test]
    fn error_score_hand_example() {
        let c = cal(vec![0.02, 0.04], 0.001, vec![0.01, 0.02]);
        // 0.5 * 0.03 + 0.3 * 0.001 + 0.2 * 0.015
        let expected = 0.015 + 0.0003 + 0.003;
        assert_relative_eq!(
            error_score(&c, &ErrorScoreWeights::default()).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn error_score_extremes() {
        let w = ErrorScoreWeights::default();
        assert_eq!(
            error_score(&cal(vec![0.0; 3], 0.0, vec![0.0; 2]), &w).unwrap(),
            0.0
        );
        assert_relative_eq!(
            error_score(&cal(vec![1.0; 3], 1.0, vec![1.0; 2]), &w).unwrap(),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn error_score_rejects_empty_lists() {
        let w = ErrorScoreWeights::default();
        assert!(error_score(&cal(vec![], 0.0, vec![0.1]), &w).is_err());
        assert!(error_score(&cal(vec![0.1], 0.0, vec![]), &w).is_err());
    }

    #[test]
    fn minimal_profile_is_valid() {
        let p = DeviceProfile::from_document(two_qubit_doc()).unwrap();
        assert_eq!(p.capacity, 2);
        assert_eq!(p.coupling_graph.edges(), &[(0, 1)]);
        let json = serde_json::to_string(&p.to_document()).unwrap();
        assert_eq!(parse_device_profile(&json).unwrap(), p);
    }

    fn schema_field(doc: ProfileDocument) -> String {
        match DeviceProfile::from_document(doc) {
            Err(ProfileError::Schema { field, .. }) => field,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn readout_length_mismatch_names_field() {
        let mut doc = two_qubit_doc();
        doc.calibration.readout_errors.pop();
        assert_eq!(schema_field(doc), "calibration.readout_errors");
    }

    #[test]
    fn bad_edges_and_rates_are_rejected() {
        let mut doc = two_qubit_doc();
        doc.coupling_edges = vec![[0, 2]];
        assert_eq!(schema_field(doc), "coupling_edges[0]");

        let mut doc = two_qubit_doc();
        doc.calibration.two_qubit_errors = vec![1.5];
        assert_eq!(schema_field(doc), "calibration.two_qubit_errors[0]");

        let mut doc = two_qubit_doc();
        doc.quantum_volume = 1;
        assert_eq!(schema_field(doc), "quantum_volume");

        let mut doc = two_qubit_doc();
        doc.capacity = 3;
        doc.calibration.readout_errors.push(0.0);
        assert_eq!(schema_field(doc), "coupling_edges");
    }

    #[test]
    fn missing_field_is_a_parse_error() {
        let text =
            r#"{"name":"x","capacity":2,"clops":1.0,"quantum_volume":4,"coupling_edges":[[0,1]]}"#;
        let err = parse_device_profile(text).unwrap_err();
        assert!(err.to_string().contains("calibration"), "{err}");
    }

    #[test]
    fn available_qubits_tracks_store() {
        let mut sim = Simulation::new(());
        let store = sim.add_store(127);
        let mut doc = two_qubit_doc();
        doc.capacity = 127;
        doc.calibration.readout_errors = vec![0.01; 127];
        doc.coupling_edges = (0..126).map(|i| [i, i + 1]).collect();
        doc.calibration.two_qubit_errors = vec![0.01; 126];
        let dev = QDevice::new(
            DeviceProfile::from_document(doc).unwrap(),
            store,
            &ErrorScoreWeights::default(),
        )
        .unwrap();
        assert_eq!(available_qubits(&sim, &dev), 127);
        sim.acquire(store, 100, |_| {}).unwrap();
        assert_eq!(available_qubits(&sim, &dev), 27);
        sim.release(store, 100).unwrap();
        assert_eq!(available_qubits(&sim, &dev), 127);
    }
}
