//! Execution-time, fidelity and communication models, job records and run
//! summaries.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::CalibrationData;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("quantum volume must be at least 2, got {0}")]
    QuantumVolume(u32),
    #[error("clops must be positive, got {0}")]
    Clops(f64),
    #[error("at least one device fidelity is required")]
    NoDevices,
    #[error("no job records to summarize")]
    NoRecords,
    #[error("histogram bin width must be in (0, 1], got {0}")]
    BinWidth(f64),
    #[error("records row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the two-qubit error compounds with the two-qubit gate count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoQubitExponent {
    /// `(1 - eps)^sqrt(n)`
    #[default]
    Sqrt,
    /// `(1 - eps)^(n^(1/4))`
    FourthRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Circuit templates per job.
    pub m_templates: u32,
    /// Parameter updates per template.
    pub k_updates: u32,
    /// Fidelity penalty per inter-device link.
    pub phi: f64,
    /// Classical communication latency per qubit per link, seconds.
    pub lambda_per_qubit: f64,
    pub two_qubit_exponent: TwoQubitExponent,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            m_templates: 100,
            k_updates: 10,
            phi: 0.95,
            lambda_per_qubit: 0.02,
            two_qubit_exponent: TwoQubitExponent::Sqrt,
        }
    }
}

/// `M * K * shots * log2(QV) / CLOPS`, in seconds.
pub fn execution_time(
    cfg: &MetricsConfig,
    shots: u64,
    qv: u32,
    clops: f64,
) -> Result<f64, MetricsError> {
    if qv < 2 {
        return Err(MetricsError::QuantumVolume(qv));
    }
    if !(clops.is_finite() && clops > 0.0) {
        return Err(MetricsError::Clops(clops));
    }
    let layers = (qv as f64).log2();
    Ok(cfg.m_templates as f64 * cfg.k_updates as f64 * shots as f64 * layers / clops)
}

pub fn fidelity_1q(eps_1q: f64, depth: u32) -> f64 {
    (1.0 - eps_1q).powi(depth as i32)
}

pub fn fidelity_2q(eps_2q: f64, n_2q: u64, mode: TwoQubitExponent) -> f64 {
    let n = n_2q as f64;
    let exponent = match mode {
        TwoQubitExponent::Sqrt => n.sqrt(),
        TwoQubitExponent::FourthRoot => n.sqrt().sqrt(),
    };
    (1.0 - eps_2q).powf(exponent)
}

pub fn fidelity_readout(eps_ro: f64, q: u32, k: u32) -> f64 {
    (1.0 - eps_ro).powf((q as f64 / k as f64).sqrt())
}

/// Job-level quantities a device's fidelity depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanContext {
    pub depth: u32,
    /// Qubits of the whole job.
    pub num_qubits: u32,
    /// Devices in the plan.
    pub k: u32,
    /// Two-qubit gates attributed to this device.
    pub two_qubit_share: u64,
}

/// Splits `t2` evenly over `k` devices; the remainder goes to the first.
pub fn two_qubit_shares(t2: u64, k: u32) -> Vec<u64> {
    let k = k as u64;
    let base = t2 / k;
    (0..k)
        .map(|i| if i == 0 { base + t2 % k } else { base })
        .collect()
}

/// Product of single-qubit, two-qubit and readout fidelities on one device.
pub fn device_fidelity(cal: &CalibrationData, ctx: &PlanContext, cfg: &MetricsConfig) -> f64 {
    fidelity_1q(cal.single_qubit_error, ctx.depth)
        * fidelity_2q(
            cal.mean_two_qubit_error(),
            ctx.two_qubit_share,
            cfg.two_qubit_exponent,
        )
        * fidelity_readout(cal.mean_readout_error(), ctx.num_qubits, ctx.k)
}

/// Mean device fidelity times `phi^(k-1)`, with `k` the number of devices.
pub fn final_fidelity(device_fidelities: &[f64], phi: f64) -> Result<f64, MetricsError> {
    if device_fidelities.is_empty() {
        return Err(MetricsError::NoDevices);
    }
    let k = device_fidelities.len();
    let mean = device_fidelities.iter().sum::<f64>() / k as f64;
    Ok(mean * phi.powi(k as i32 - 1))
}

/// Blocking classical-communication delay: `lambda * q` per link over `k - 1`
/// links.
pub fn comm_time(q: u32, k: u32, lambda: f64) -> f64 {
    if k <= 1 {
        0.0
    } else {
        (k - 1) as f64 * lambda * q as f64
    }
}

/// Lifecycle and outcome of one job.
#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub job_id: String,
    pub arrival: f64,
    pub start: f64,
    pub finish: f64,
    pub devices_used: Vec<(String, u32)>,
    pub k: u32,
    pub exec_time: f64,
    pub comm_time: f64,
    pub fidelity: f64,
}

impl JobRecord {
    pub fn num_qubits(&self) -> u32 {
        self.devices_used.iter().map(|(_, a)| a).sum()
    }
}

pub const RECORDS_HEADER: [&str; 10] = [
    "job_id",
    "arrival",
    "start",
    "finish",
    "k",
    "devices",
    "qubit_split",
    "exec_time",
    "comm_time",
    "fidelity",
];

pub fn write_records_csv<W: Write>(records: &[JobRecord], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORDS_HEADER)?;
    for r in records {
        let devices = r
            .devices_used
            .iter()
            .map(|(n, _)| n.as_str())
            .collect::<Vec<_>>()
            .join(";");
        let split = r
            .devices_used
            .iter()
            .map(|(_, a)| a.to_string())
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.job_id.clone(),
            r.arrival.to_string(),
            r.start.to_string(),
            r.finish.to_string(),
            r.k.to_string(),
            devices,
            split,
            r.exec_time.to_string(),
            r.comm_time.to_string(),
            r.fidelity.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<JobRecord>, MetricsError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(RECORDS_HEADER.iter().copied()) {
        return Err(MetricsError::Row {
            row: 1,
            reason: format!("expected header `{}`", RECORDS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let bad = |reason: String| MetricsError::Row { row, reason };
        let num = |idx: usize| -> Result<f64, MetricsError> {
            rec[idx]
                .parse::<f64>()
                .map_err(|e| bad(format!("{}: {e}", RECORDS_HEADER[idx])))
        };
        let k: u32 = rec[4].parse().map_err(|e| bad(format!("k: {e}")))?;
        let names: Vec<&str> = rec[5].split(';').collect();
        let split = rec[6]
            .split(';')
            .map(|s| s.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("qubit_split: {e}")))?;
        if names.len() != split.len() || names.len() != k as usize {
            return Err(bad("devices, qubit_split and k disagree".into()));
        }
        let fidelity = num(9)?;
        if !(0.0..=1.0).contains(&fidelity) {
            return Err(bad(format!("fidelity {fidelity} outside [0, 1]")));
        }
        out.push(JobRecord {
            job_id: rec[0].to_string(),
            arrival: num(1)?,
            start: num(2)?,
            finish: num(3)?,
            devices_used: names.into_iter().map(String::from).zip(split).collect(),
            k,
            exec_time: num(7)?,
            comm_time: num(8)?,
            fidelity,
        });
    }
    Ok(out)
}

/// Aggregate metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub jobs: usize,
    /// Makespan: latest finish time.
    pub t_sim: f64,
    pub mean_fidelity: f64,
    /// Population standard deviation.
    pub std_fidelity: f64,
    pub total_comm: f64,
}

pub fn summarize(label: &str, records: &[JobRecord]) -> Result<RunSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    let n = records.len() as f64;
    let t_sim = records
        .iter()
        .map(|r| r.finish)
        .fold(f64::NEG_INFINITY, f64::max);
    let mean = records.iter().map(|r| r.fidelity).sum::<f64>() / n;
    let var = records
        .iter()
        .map(|r| (r.fidelity - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(RunSummary {
        label: label.to_string(),
        jobs: records.len(),
        t_sim,
        mean_fidelity: mean,
        std_fidelity: var.sqrt(),
        total_comm: records.iter().map(|r| r.comm_time).sum(),
    })
}

/// Fixed-width histogram over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of_fidelities<'a>(
        values: impl IntoIterator<Item = &'a f64>,
        bin_width: f64,
    ) -> Result<Self, MetricsError> {
        if !(bin_width > 0.0 && bin_width <= 1.0) {
            return Err(MetricsError::BinWidth(bin_width));
        }
        let bins = (1.0 / bin_width).round().max(1.0) as usize;
        let mut counts = vec![0; bins];
        for &v in values {
            let idx = ((v / bin_width).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Ok(Self { bin_width, counts })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_start", "bin_end", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            let lo = i as f64 * self.bin_width;
            let hi = ((i + 1) as f64 * self.bin_width).min(1.0);
            w.write_record([lo.to_string(), hi.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
