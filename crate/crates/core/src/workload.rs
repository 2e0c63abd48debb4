//! Quantum jobs: synthetic generation, trace files and arrivals.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{SimError, SimTime, Simulation};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error(
        "no qubit count in [{low}, {high}] satisfies max capacity {max_cap} < q < total capacity {total_cap}; \
         jobs must need more than one device yet fit in the whole cloud"
    )]
    SizeConstraint {
        low: u32,
        high: u32,
        max_cap: u32,
        total_cap: u32,
    },
    #[error("{field}: low {low} exceeds high {high}")]
    Range {
        field: &'static str,
        low: u64,
        high: u64,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A schedulable quantum job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QJob {
    pub job_id: String,
    pub num_qubits: u32,
    pub depth: u32,
    pub num_shots: u64,
    pub two_qubit_gates: u64,
    pub arrival_time: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalModel {
    AllAtZero,
    /// Exponential inter-arrival gaps with the given rate (jobs per second).
    Poisson {
        rate: f64,
    },
}

/// Parameters of a synthetic workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub count: usize,
    pub qubit_range: [u32; 2],
    pub depth_range: [u32; 2],
    pub shots_range: [u64; 2],
    /// Fixed two-qubit gate range. When absent each job draws from
    /// `[q*d/4, q*d/2]`.
    #[serde(default)]
    pub two_qubit_range: Option<[u64; 2]>,
    #[serde(default = "default_arrival")]
    pub arrival_model: ArrivalModel,
    #[serde(default)]
    pub seed: u64,
}

fn default_arrival() -> ArrivalModel {
    ArrivalModel::AllAtZero
}

impl WorkloadSpec {
    /// 1,000 jobs of 130-250 qubits, depth 5-20, 10k-100k shots, all at t=0.
    pub fn standard(seed: u64) -> Self {
        Self {
            count: 1000,
            qubit_range: [130, 250],
            depth_range: [5, 20],
            shots_range: [10_000, 100_000],
            two_qubit_range: None,
            arrival_model: ArrivalModel::AllAtZero,
            seed,
        }
    }

    fn validate(&self) -> Result<(), WorkloadError> {
        let check = |field, [lo, hi]: [u64; 2]| {
            if lo > hi {
                Err(WorkloadError::Range {
                    field,
                    low: lo,
                    high: hi,
                })
            } else {
                Ok(())
            }
        };
        let widen = |[a, b]: [u32; 2]| [a as u64, b as u64];
        check("qubit_range", widen(self.qubit_range))?;
        check("depth_range", widen(self.depth_range))?;
        check("shots_range", self.shots_range)?;
        if let Some(r) = self.two_qubit_range {
            check("two_qubit_range", r)?;
        }
        if self.depth_range[0] == 0 {
            return Err(WorkloadError::Invalid(
                "depth_range: depth must be at least 1".into(),
            ));
        }
        if self.shots_range[0] == 0 {
            return Err(WorkloadError::Invalid(
                "shots_range: shots must be at least 1".into(),
            ));
        }
        if let ArrivalModel::Poisson { rate } = self.arrival_model {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(WorkloadError::Invalid(format!(
                    "arrival_model: poisson rate must be positive, got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Qubit interval satisfying `max(caps) < q < sum(caps)` intersected with the
/// requested range.
pub fn feasible_qubit_range(range: [u32; 2], caps: &[u32]) -> Result<[u32; 2], WorkloadError> {
    let max_cap = caps.iter().copied().max().unwrap_or(0);
    let total: u64 = caps.iter().map(|&c| c as u64).sum();
    let total_cap = total.min(u32::MAX as u64) as u32;
    let lo = range[0].max(max_cap.saturating_add(1)).max(1);
    let hi = (range[1] as u64).min(total.saturating_sub(1)) as u32;
    if caps.is_empty() || lo > hi {
        return Err(WorkloadError::SizeConstraint {
            low: range[0],
            high: range[1],
            max_cap,
            total_cap,
        });
    }
    Ok([lo, hi])
}

/// Draws `spec.count` jobs. Pure in `(spec, caps)`: the PCG64 stream seeded
/// from `spec.seed` fixes every field.
pub fn generate_jobs(spec: &WorkloadSpec, caps: &[u32]) -> Result<Vec<QJob>, WorkloadError> {
    spec.validate()?;
    let [q_lo, q_hi] = feasible_qubit_range(spec.qubit_range, caps)?;
    let mut rng = Pcg64::seed_from_u64(spec.seed);
    let width = spec.count.max(1).to_string().len();
    let mut clock = 0.0;
    let mut jobs = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let q = rng.random_range(q_lo..=q_hi);
        let d = rng.random_range(spec.depth_range[0]..=spec.depth_range[1]);
        let s = rng.random_range(spec.shots_range[0]..=spec.shots_range[1]);
        let [t_lo, t_hi] = spec.two_qubit_range.unwrap_or_else(|| {
            let area = q as u64 * d as u64;
            [area / 4, area / 2]
        });
        let t2 = rng.random_range(t_lo..=t_hi);
        let arrival = match spec.arrival_model {
            ArrivalModel::AllAtZero => 0.0,
            ArrivalModel::Poisson { rate } => {
                let gap: f64 = Exp::new(rate)
                    .map_err(|e| WorkloadError::Invalid(e.to_string()))?
                    .sample(&mut rng);
                clock += gap;
                clock
            }
        };
        jobs.push(QJob {
            job_id: format!("job{:0width$}", i, width = width),
            num_qubits: q,
            depth: d,
            num_shots: s,
            two_qubit_gates: t2,
            arrival_time: SimTime::new(arrival),
        });
    }
    Ok(jobs)
}

pub const TRACE_HEADER: [&str; 6] = [
    "job_id",
    "num_qubits",
    "depth",
    "num_shots",
    "two_qubit_gates",
    "arrival_time",
];

#[derive(Debug, Deserialize)]
struct TraceRow {
    job_id: String,
    num_qubits: i64,
    depth: i64,
    num_shots: i64,
    two_qubit_gates: i64,
    #[serde(default)]
    arrival_time: Option<f64>,
}

impl TraceRow {
    fn into_job(self, row: usize) -> Result<QJob, WorkloadError> {
        let bad = |reason: String| WorkloadError::Row { row, reason };
        let positive = |name: &str, v: i64| -> Result<i64, WorkloadError> {
            if v >= 1 {
                Ok(v)
            } else {
                Err(bad(format!("{name} must be positive, got {v}")))
            }
        };
        if self.job_id.is_empty() {
            return Err(bad("job_id is empty".into()));
        }
        let q = positive("num_qubits", self.num_qubits)?;
        let d = positive("depth", self.depth)?;
        let s = positive("num_shots", self.num_shots)?;
        if self.two_qubit_gates < 0 {
            return Err(bad(format!(
                "two_qubit_gates must be non-negative, got {}",
                self.two_qubit_gates
            )));
        }
        let arrival = SimTime::try_new(self.arrival_time.unwrap_or(0.0))
            .map_err(|e| bad(format!("arrival_time: {e}")))?;
        Ok(QJob {
            job_id: self.job_id,
            num_qubits: u32::try_from(q).map_err(|_| bad("num_qubits too large".into()))?,
            depth: u32::try_from(d).map_err(|_| bad("depth too large".into()))?,
            num_shots: s as u64,
            two_qubit_gates: self.two_qubit_gates as u64,
            arrival_time: arrival,
        })
    }
}

fn check_unique(jobs: &[QJob], first_row: usize) -> Result<(), WorkloadError> {
    let mut seen = HashSet::new();
    for (i, j) in jobs.iter().enumerate() {
        if !seen.insert(j.job_id.as_str()) {
            return Err(WorkloadError::Row {
                row: i + first_row,
                reason: format!("duplicate job_id `{}`", j.job_id),
            });
        }
    }
    Ok(())
}

/// Reads a job trace. Row numbers in errors count the header as row 1.
pub fn read_jobs_csv<R: Read>(input: R) -> Result<Vec<QJob>, WorkloadError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(WorkloadError::Row {
            row: 1,
            reason: format!("expected header `{}`", TRACE_HEADER.join(",")),
        });
    }
    let mut jobs = Vec::new();
    for (i, row) in rdr.deserialize::<TraceRow>().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| WorkloadError::Row {
            row: row_no,
            reason: e.to_string(),
        })?;
        jobs.push(row.into_job(row_no)?);
    }
    check_unique(&jobs, 2)?;
    Ok(jobs)
}

pub fn load_jobs_csv(path: impl AsRef<Path>) -> Result<Vec<QJob>, WorkloadError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| WorkloadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_jobs_csv(file)
}

pub fn write_jobs_csv<W: Write>(jobs: &[QJob], out: W) -> Result<(), WorkloadError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for j in jobs {
        w.write_record([
            j.job_id.clone(),
            j.num_qubits.to_string(),
            j.depth.to_string(),
            j.num_shots.to_string(),
            j.two_qubit_gates.to_string(),
            j.arrival_time.to_string(),
        ])?;
    }
    w.flush().map_err(|source| WorkloadError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}

/// Reads a JSON array of objects carrying the trace columns.
pub fn read_jobs_json(text: &str) -> Result<Vec<QJob>, WorkloadError> {
    let rows: Vec<TraceRow> = serde_json::from_str(text)?;
    let jobs = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.into_job(i + 1))
        .collect::<Result<Vec<_>, _>>()?;
    check_unique(&jobs, 1)?;
    Ok(jobs)
}

/// Schedules `submit(job)` at each job's arrival time. Equal arrival times
/// keep input order.
pub fn arrival_process<W, F>(
    sim: &mut Simulation<W>,
    jobs: Vec<QJob>,
    submit: F,
) -> Result<(), SimError>
where
    W: 'static,
    F: Fn(&mut Simulation<W>, QJob) + Clone + 'static,
{
    let mut jobs = jobs;
    jobs.sort_by(|a, b| {
        a.arrival_time
            .seconds()
            .total_cmp(&b.arrival_time.seconds())
    });
    for job in jobs {
        let submit = submit.clone();
        sim.schedule_at(job.arrival_time, move |sim| submit(sim, job))?;
    }
    Ok(())
}
