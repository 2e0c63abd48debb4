//! Browser bindings for exploring the time and fidelity models.
//!
//! Every export takes a JSON string and returns a JSON string; failures come
//! back as `{"error": "..."}` so the page never has to catch exceptions.

use qcloud::device::ErrorScoreWeights;
use qcloud::metrics::{
    comm_time, device_fidelity, execution_time, final_fidelity, summarize, two_qubit_shares,
    Histogram, MetricsConfig, PlanContext, RunSummary, TwoQubitExponent,
};
use qcloud::scheduler::{run_cloud, CloudConfig, PolicyKind};
use qcloud::synthetic;
use qcloud::workload::{generate_jobs, WorkloadSpec};
use qcloud::CalibrationData;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

fn respond<T: Serialize>(result: Result<T, String>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v).expect("response serializes"),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

fn parse<'a, T: Deserialize<'a>>(input: &'a str) -> Result<T, String> {
    serde_json::from_str(input).map_err(|e| format!("bad request: {e}"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveRequest {
    pub readout_error: f64,
    pub single_qubit_error: f64,
    pub two_qubit_error: f64,
    pub num_qubits: u32,
    pub depth: u32,
    pub two_qubit_gates: u64,
    #[serde(default = "default_phi")]
    pub phi: f64,
    #[serde(default = "default_lambda")]
    pub lambda_per_qubit: f64,
    #[serde(default)]
    pub fourth_root: bool,
    pub max_devices: u32,
}

fn default_phi() -> f64 {
    MetricsConfig::default().phi
}

fn default_lambda() -> f64 {
    MetricsConfig::default().lambda_per_qubit
}

#[derive(Debug, Serialize, PartialEq)]
pub struct CurvePoint {
    pub k: u32,
    pub mean_device_fidelity: f64,
    pub fidelity: f64,
    pub comm_time: f64,
}

/// Fidelity and communication time of a job split evenly over `k` identical
/// devices, for `k = 1..=max_devices`.
pub fn fidelity_curve(req: &CurveRequest) -> Result<Vec<CurvePoint>, String> {
    let rates = [
        req.readout_error,
        req.single_qubit_error,
        req.two_qubit_error,
    ];
    if rates.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err("error rates must lie in [0, 1]".into());
    }
    if req.num_qubits == 0 || req.max_devices == 0 || req.max_devices > 64 {
        return Err("num_qubits must be positive and max_devices in 1..=64".into());
    }
    if !(req.phi > 0.0 && req.phi <= 1.0) {
        return Err("phi must lie in (0, 1]".into());
    }
    let cfg = MetricsConfig {
        two_qubit_exponent: if req.fourth_root {
            TwoQubitExponent::FourthRoot
        } else {
            TwoQubitExponent::Sqrt
        },
        ..MetricsConfig::default()
    };
    let cal = CalibrationData {
        readout_errors: vec![req.readout_error],
        single_qubit_error: req.single_qubit_error,
        two_qubit_errors: vec![req.two_qubit_error],
    };
    (1..=req.max_devices.min(req.num_qubits))
        .map(|k| {
            let fids: Vec<f64> = two_qubit_shares(req.two_qubit_gates, k)
                .into_iter()
                .map(|share| {
                    let ctx = PlanContext {
                        depth: req.depth,
                        num_qubits: req.num_qubits,
                        k,
                        two_qubit_share: share,
                    };
                    device_fidelity(&cal, &ctx, &cfg)
                })
                .collect();
            let mean = fids.iter().sum::<f64>() / fids.len() as f64;
            Ok(CurvePoint {
                k,
                mean_device_fidelity: mean,
                fidelity: final_fidelity(&fids, req.phi).map_err(|e| e.to_string())?,
                comm_time: comm_time(req.num_qubits, k, req.lambda_per_qubit),
            })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeRequest {
    pub shots: u64,
    pub quantum_volume: u32,
    pub clops: Vec<f64>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct TimeRow {
    pub clops: f64,
    pub seconds: f64,
}

/// Execution time of one sub-job for each CLOPS value.
pub fn execution_times(req: &TimeRequest) -> Result<Vec<TimeRow>, String> {
    if req.shots == 0 {
        return Err("shots must be positive".into());
    }
    let cfg = MetricsConfig::default();
    req.clops
        .iter()
        .map(|&clops| {
            let seconds = execution_time(&cfg, req.shots, req.quantum_volume, clops)
                .map_err(|e| e.to_string())?;
            Ok(TimeRow { clops, seconds })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimRequest {
    pub jobs: usize,
    pub qubit_range: [u32; 2],
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_phi")]
    pub phi: f64,
    #[serde(default = "default_lambda")]
    pub lambda_per_qubit: f64,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
}

fn default_bin_width() -> f64 {
    0.01
}

#[derive(Debug, Serialize)]
pub struct ModeResult {
    pub summary: RunSummary,
    pub histogram: Vec<u64>,
}

#[derive(Debug, Serialize)]
pub struct SimResponse {
    pub bin_width: f64,
    pub modes: Vec<ModeResult>,
}

/// Runs the heuristic modes on the five synthetic reference devices.
pub fn simulate_modes(req: &SimRequest) -> Result<SimResponse, String> {
    if req.jobs == 0 || req.jobs > 5000 {
        return Err("jobs must be in 1..=5000".into());
    }
    if !(req.phi > 0.0 && req.phi <= 1.0) || !(req.lambda_per_qubit >= 0.0) {
        return Err("phi must lie in (0, 1] and lambda_per_qubit must be non-negative".into());
    }
    let profiles = synthetic::reference_profiles();
    let caps: Vec<u32> = profiles.iter().map(|p| p.capacity).collect();
    let spec = WorkloadSpec {
        count: req.jobs,
        qubit_range: req.qubit_range,
        ..WorkloadSpec::standard(req.seed)
    };
    let jobs = generate_jobs(&spec, &caps).map_err(|e| e.to_string())?;
    let metrics = MetricsConfig {
        phi: req.phi,
        lambda_per_qubit: req.lambda_per_qubit,
        ..MetricsConfig::default()
    };
    let mut modes = Vec::new();
    for mode in [PolicyKind::Speed, PolicyKind::Fidelity, PolicyKind::Fair] {
        let cfg = CloudConfig {
            mode,
            metrics,
            weights: ErrorScoreWeights::default(),
        };
        let out = run_cloud(&profiles, jobs.clone(), &cfg, None).map_err(|e| e.to_string())?;
        let summary = summarize(mode.as_str(), &out.records).map_err(|e| e.to_string())?;
        let histogram =
            Histogram::of_fidelities(out.records.iter().map(|r| &r.fidelity), req.bin_width)
                .map_err(|e| e.to_string())?
                .counts;
        modes.push(ModeResult { summary, histogram });
    }
    Ok(SimResponse {
        bin_width: req.bin_width,
        modes,
    })
}

#[wasm_bindgen(js_name = fidelityCurve)]
pub fn fidelity_curve_json(request: &str) -> String {
    respond(parse::<CurveRequest>(request).and_then(|r| fidelity_curve(&r)))
}

#[wasm_bindgen(js_name = executionTimes)]
pub fn execution_times_json(request: &str) -> String {
    respond(parse::<TimeRequest>(request).and_then(|r| execution_times(&r)))
}

#[wasm_bindgen(js_name = simulateModes)]
pub fn simulate_modes_json(request: &str) -> String {
    respond(parse::<SimRequest>(request).and_then(|r| simulate_modes(&r)))
}
