//! Device selection policies, qubit partitioning and the job execution
//! workflow shared by every allocation mode.
//!
//! Each job goes through the same steps: pick devices according to the
//! policy, split the qubits, reserve them on every device (in ascending
//! device order, blocking FIFO), run the sub-jobs in parallel, pay the
//! classical communication delay when the job spans several devices, then
//! score the fidelity and release the qubits.

use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{DeviceProfile, DeviceSnapshot, ErrorScoreWeights, ProfileError, QDevice};
use crate::metrics::{
    self, comm_time, device_fidelity, final_fidelity, two_qubit_shares, JobRecord, MetricsConfig,
    MetricsError, PlanContext,
};
use crate::rl::{self, Policy, RlError};
use crate::sim::{SimError, Simulation};
use crate::workload::{self, QJob};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("job needs {needed} qubits but the devices offer only {available}; the job cannot be placed")]
    InsufficientCapacity { needed: u32, available: u64 },
    #[error("mode `rlbase` requires a trained policy")]
    MissingPolicy,
    #[error("allocation weights are invalid: {0}")]
    InvalidWeights(String),
    #[error("job {job_id}: {reason}")]
    InvalidJob { job_id: String, reason: String },
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Device-selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Highest CLOPS first.
    Speed,
    /// Lowest error score first.
    Fidelity,
    /// Lowest current utilization first.
    Fair,
    /// Allocation fractions from a trained policy.
    RlBase,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Speed,
        PolicyKind::Fidelity,
        PolicyKind::Fair,
        PolicyKind::RlBase,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Speed => "speed",
            PolicyKind::Fidelity => "fidelity",
            PolicyKind::Fair => "fair",
            PolicyKind::RlBase => "rlbase",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (expected speed, fidelity, fair or rlbase)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    /// Index into the device list.
    pub device: usize,
    pub qubits: u32,
}

/// Devices chosen for a job and the qubits each receives, in priority order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationPlan {
    assignments: Vec<Assignment>,
}

impl AllocationPlan {
    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    /// Number of devices.
    pub fn k(&self) -> u32 {
        self.assignments.len() as u32
    }

    pub fn total_qubits(&self) -> u32 {
        self.assignments.iter().map(|a| a.qubits).sum()
    }

    /// Sum equals `q`, every share is positive and within its device's
    /// capacity, and no device repeats.
    pub fn is_feasible(&self, q: u32, caps: &[u32]) -> bool {
        let mut seen = vec![false; caps.len()];
        self.total_qubits() == q
            && !self.assignments.is_empty()
            && self.assignments.iter().all(|a| {
                a.device < caps.len()
                    && a.qubits > 0
                    && a.qubits <= caps[a.device]
                    && !std::mem::replace(&mut seen[a.device], true)
            })
    }
}

/// Outcome of device selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Chosen devices in priority order.
    pub devices: Vec<usize>,
    /// Device inspections performed; bounded by a constant times the device count.
    pub touches: usize,
}

fn total_capacity(devices: &[DeviceSnapshot]) -> u64 {
    devices.iter().map(|d| d.capacity as u64).sum()
}

fn ensure_capacity(q: u32, devices: &[DeviceSnapshot]) -> Result<(), ScheduleError> {
    let available = total_capacity(devices);
    if (q as u64) > available {
        return Err(ScheduleError::InsufficientCapacity {
            needed: q,
            available,
        });
    }
    Ok(())
}

fn stable_order_by<K: PartialOrd>(
    devices: &[DeviceSnapshot],
    key: impl Fn(&DeviceSnapshot) -> K,
) -> Vec<usize> {
    let keys: Vec<K> = devices.iter().map(key).collect();
    let mut order: Vec<usize> = (0..devices.len()).collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .partial_cmp(&keys[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Orders devices by policy and keeps the shortest prefix whose capacities
/// cover the job. For [`PolicyKind::RlBase`] the devices are those with a
/// non-zero allocation, largest first.
pub fn select_devices(
    policy: PolicyKind,
    devices: &[DeviceSnapshot],
    job: &QJob,
    rl_policy: Option<&Policy>,
) -> Result<Selection, ScheduleError> {
    ensure_capacity(job.num_qubits, devices)?;
    let n = devices.len();
    let order = match policy {
        PolicyKind::Speed => stable_order_by(devices, |d| -d.clops),
        PolicyKind::Fidelity => stable_order_by(devices, |d| d.error_score),
        PolicyKind::Fair => stable_order_by(devices, |d| d.utilization()),
        PolicyKind::RlBase => {
            let plan = rl_plan(devices, job, rl_policy)?;
            return Ok(Selection {
                devices: plan.assignments.iter().map(|a| a.device).collect(),
                touches: 2 * n,
            });
        }
    };
    let mut covered = 0u64;
    let mut chosen = Vec::new();
    for idx in order {
        chosen.push(idx);
        covered += devices[idx].capacity as u64;
        if covered >= job.num_qubits as u64 {
            break;
        }
    }
    let touches = n + chosen.len();
    Ok(Selection {
        devices: chosen,
        touches,
    })
}

/// Greedy fill: each device in order takes as many of the remaining qubits
/// as it can hold.
pub fn partition_qubits(
    q: u32,
    ordered: &[usize],
    devices: &[DeviceSnapshot],
) -> Result<AllocationPlan, ScheduleError> {
    let available: u64 = ordered.iter().map(|&i| devices[i].capacity as u64).sum();
    if (q as u64) > available {
        return Err(ScheduleError::InsufficientCapacity {
            needed: q,
            available,
        });
    }
    let mut remaining = q;
    let mut assignments = Vec::new();
    for &device in ordered {
        if remaining == 0 {
            break;
        }
        let take = remaining.min(devices[device].capacity);
        if take > 0 {
            assignments.push(Assignment {
                device,
                qubits: take,
            });
            remaining -= take;
        }
    }
    Ok(AllocationPlan { assignments })
}

/// Turns non-negative weights into integer shares summing to `q`.
///
/// Each device first gets `round(w_i / (sum(w) + epsilon) * q)` clipped to its
/// capacity. While the total is short, one qubit goes to the device whose
/// target most exceeds its share; while it is over, one qubit comes off the
/// device whose share most exceeds its target. Ties go to the lowest index.
/// The returned plan lists used devices by descending share.
pub fn partition_from_fractions(
    q: u32,
    caps: &[u32],
    weights: &[f64],
    epsilon: f64,
) -> Result<AllocationPlan, ScheduleError> {
    if weights.len() != caps.len() {
        return Err(ScheduleError::InvalidWeights(format!(
            "{} weights for {} devices",
            weights.len(),
            caps.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(ScheduleError::InvalidWeights(format!(
            "weight {w} is not a non-negative number"
        )));
    }
    let available: u64 = caps.iter().map(|&c| c as u64).sum();
    if (q as u64) > available {
        return Err(ScheduleError::InsufficientCapacity {
            needed: q,
            available,
        });
    }
    let sum: f64 = weights.iter().sum();
    let target: Vec<f64> = weights
        .iter()
        .map(|w| w / (sum + epsilon) * q as f64)
        .collect();
    let mut share: Vec<u32> = target
        .iter()
        .zip(caps)
        .map(|(t, &c)| (t.round() as u32).min(c))
        .collect();
    let mut total: u64 = share.iter().map(|&s| s as u64).sum();
    while total < q as u64 {
        let i = argmax((0..caps.len()).filter(|&i| share[i] < caps[i]), |i| {
            target[i] - share[i] as f64
        })
        .expect("spare capacity exists");
        share[i] += 1;
        total += 1;
    }
    while total > q as u64 {
        let i = argmax((0..caps.len()).filter(|&i| share[i] > 0), |i| {
            share[i] as f64 - target[i]
        })
        .expect("some share is positive");
        share[i] -= 1;
        total -= 1;
    }
    let mut assignments: Vec<Assignment> = share
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .map(|(device, &qubits)| Assignment { device, qubits })
        .collect();
    assignments.sort_by(|a, b| b.qubits.cmp(&a.qubits).then(a.device.cmp(&b.device)));
    Ok(AllocationPlan { assignments })
}

/// First index with the strictly greatest key.
fn argmax(indices: impl Iterator<Item = usize>, key: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in indices {
        let k = key(i);
        if best.is_none_or(|(_, bk)| k > bk) {
            best = Some((i, k));
        }
    }
    best.map(|(i, _)| i)
}

fn rl_plan(
    devices: &[DeviceSnapshot],
    job: &QJob,
    rl_policy: Option<&Policy>,
) -> Result<AllocationPlan, ScheduleError> {
    let policy = rl_policy.ok_or(ScheduleError::MissingPolicy)?;
    let state = rl::build_state(job, devices, policy.config())?;
    let raw = policy.act_deterministic(&state)?;
    let weights = rl::action_weights(&raw[..devices.len()]);
    let caps: Vec<u32> = devices.iter().map(|d| d.capacity).collect();
    partition_from_fractions(job.num_qubits, &caps, &weights, policy.config().epsilon)
}

/// Selection followed by partitioning.
pub fn plan_job(
    policy: PolicyKind,
    devices: &[DeviceSnapshot],
    job: &QJob,
    rl_policy: Option<&Policy>,
) -> Result<AllocationPlan, ScheduleError> {
    match policy {
        PolicyKind::RlBase => {
            ensure_capacity(job.num_qubits, devices)?;
            rl_plan(devices, job, rl_policy)
        }
        _ => {
            let sel = select_devices(policy, devices, job, rl_policy)?;
            partition_qubits(job.num_qubits, &sel.devices, devices)
        }
    }
}

/// Per-device fidelities of a plan, in plan order.
pub fn plan_device_fidelities(
    job: &QJob,
    plan: &AllocationPlan,
    profiles: &[&DeviceProfile],
    cfg: &MetricsConfig,
) -> Vec<f64> {
    let k = plan.k();
    let shares = two_qubit_shares(job.two_qubit_gates, k);
    plan.assignments
        .iter()
        .zip(shares)
        .map(|(a, share)| {
            let ctx = PlanContext {
                depth: job.depth,
                num_qubits: job.num_qubits,
                k,
                two_qubit_share: share,
            };
            device_fidelity(&profiles[a.device].calibration, &ctx, cfg)
        })
        .collect()
}

/// Settings of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudConfig {
    pub mode: PolicyKind,
    pub metrics: MetricsConfig,
    pub weights: ErrorScoreWeights,
}

impl CloudConfig {
    pub fn new(mode: PolicyKind) -> Self {
        Self {
            mode,
            metrics: MetricsConfig::default(),
            weights: ErrorScoreWeights::default(),
        }
    }
}

struct JobRun {
    job: QJob,
    plan: AllocationPlan,
    start: f64,
    exec_time: f64,
    outstanding: usize,
}

/// Model state carried by the kernel during a cloud run.
pub struct CloudState {
    pub devices: Vec<QDevice>,
    config: CloudConfig,
    rl_policy: Option<Rc<Policy>>,
    runs: Vec<Option<JobRun>>,
    records: Vec<JobRecord>,
    failure: Option<ScheduleError>,
}

impl CloudState {
    fn fail(&mut self, err: impl Into<ScheduleError>) {
        if self.failure.is_none() {
            self.failure = Some(err.into());
        }
    }
}

type CloudSim = Simulation<CloudState>;

/// Per-device totals at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceUsage {
    pub name: String,
    pub jobs_served: u64,
    pub busy_time: f64,
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Job records in completion order.
    pub records: Vec<JobRecord>,
    pub devices: Vec<DeviceUsage>,
    /// Clock when the event queue drained.
    pub end_time: f64,
    pub events: u64,
}

/// Runs every job through the cloud under one policy.
pub fn run_cloud(
    profiles: &[DeviceProfile],
    jobs: Vec<QJob>,
    config: &CloudConfig,
    rl_policy: Option<&Policy>,
) -> Result<RunOutcome, ScheduleError> {
    let total: u64 = profiles.iter().map(|p| p.capacity as u64).sum();
    for job in &jobs {
        if job.num_qubits as u64 > total {
            return Err(ScheduleError::InvalidJob {
                job_id: job.job_id.clone(),
                reason: format!("needs {} qubits but the cloud has {total}", job.num_qubits),
            });
        }
        if job.num_qubits == 0 || job.depth == 0 || job.num_shots == 0 {
            return Err(ScheduleError::InvalidJob {
                job_id: job.job_id.clone(),
                reason: "qubits, depth and shots must be positive".into(),
            });
        }
    }
    if config.mode == PolicyKind::RlBase {
        let policy = rl_policy.ok_or(ScheduleError::MissingPolicy)?;
        if policy.config().num_device_slots < profiles.len() {
            return Err(RlError::TooManyDevices {
                devices: profiles.len(),
                slots: policy.config().num_device_slots,
            }
            .into());
        }
    }

    let mut sim = Simulation::new(CloudState {
        devices: Vec::with_capacity(profiles.len()),
        config: config.clone(),
        rl_policy: rl_policy.map(|p| Rc::new(p.clone())),
        runs: Vec::new(),
        records: Vec::with_capacity(jobs.len()),
        failure: None,
    });
    for p in profiles {
        let store = sim.add_store(p.capacity);
        let dev = QDevice::new(p.clone(), store, &config.weights)?;
        sim.state.devices.push(dev);
    }
    sim.state.runs = (0..jobs.len()).map(|_| None).collect();
    let mut slots = std::collections::HashMap::with_capacity(jobs.len());
    for (i, job) in jobs.iter().enumerate() {
        if slots.insert(job.job_id.clone(), i).is_some() {
            return Err(ScheduleError::InvalidJob {
                job_id: job.job_id.clone(),
                reason: "duplicate job_id".into(),
            });
        }
    }
    let slots = Rc::new(slots);
    workload::arrival_process(&mut sim, jobs, move |sim, job| {
        let slot = slots[&job.job_id];
        submit(sim, slot, job);
    })?;

    let end = sim.run(None).seconds();
    if let Some(err) = sim.state.failure.take() {
        return Err(err);
    }
    let unfinished = sim.state.runs.iter().filter(|r| r.is_some()).count();
    debug_assert_eq!(unfinished, 0, "jobs left running after the queue drained");
    let events = sim.events_fired();
    let state = sim.state;
    Ok(RunOutcome {
        records: state.records,
        devices: state
            .devices
            .iter()
            .map(|d| DeviceUsage {
                name: d.profile.name.clone(),
                jobs_served: d.jobs_served,
                busy_time: d.busy_time,
            })
            .collect(),
        end_time: end,
        events,
    })
}

fn snapshots(sim: &CloudSim) -> Vec<DeviceSnapshot> {
    sim.state
        .devices
        .iter()
        .map(|d| d.snapshot(sim.store(d.store).level()))
        .collect()
}

fn submit(sim: &mut CloudSim, slot: usize, job: QJob) {
    let devices = snapshots(sim);
    let policy = sim.state.rl_policy.clone();
    let plan = match plan_job(sim.state.config.mode, &devices, &job, policy.as_deref()) {
        Ok(plan) => plan,
        Err(e) => return sim.state.fail(e),
    };
    sim.state.runs[slot] = Some(JobRun {
        job,
        plan,
        start: 0.0,
        exec_time: 0.0,
        outstanding: 0,
    });
    acquire_next(sim, slot, 0);
}

/// Reservations are taken in ascending device index so that two jobs can
/// never hold-and-wait on each other.
fn acquisition_order(plan: &AllocationPlan) -> Vec<Assignment> {
    let mut order = plan.assignments.clone();
    order.sort_by_key(|a| a.device);
    order
}

fn acquire_next(sim: &mut CloudSim, slot: usize, step: usize) {
    let run = sim.state.runs[slot].as_ref().expect("job in flight");
    let order = acquisition_order(&run.plan);
    match order.get(step) {
        Some(a) => {
            let store = sim.state.devices[a.device].store;
            if let Err(e) = sim.acquire(store, a.qubits, move |sim| {
                acquire_next(sim, slot, step + 1)
            }) {
                sim.state.fail(e);
            }
        }
        None => start_sub_jobs(sim, slot),
    }
}

fn start_sub_jobs(sim: &mut CloudSim, slot: usize) {
    let now = sim.now().seconds();
    let cfg = sim.state.config.metrics;
    let run = sim.state.runs[slot].as_ref().expect("job in flight");
    let shots = run.job.num_shots;
    let mut durations = Vec::with_capacity(run.plan.assignments.len());
    for a in run.plan.assignments() {
        let p = &sim.state.devices[a.device].profile;
        match metrics::execution_time(&cfg, shots, p.quantum_volume, p.clops) {
            Ok(t) => durations.push((a.device, t)),
            Err(e) => return sim.state.fail(e),
        }
    }
    let run = sim.state.runs[slot].as_mut().expect("job in flight");
    run.start = now;
    run.outstanding = durations.len();
    run.exec_time = durations.iter().map(|d| d.1).fold(0.0, f64::max);
    for (device, t) in durations {
        let scheduled = sim.schedule(t, move |sim| {
            let dev = &mut sim.state.devices[device];
            dev.busy_time += t;
            dev.jobs_served += 1;
            sub_job_done(sim, slot);
        });
        if let Err(e) = scheduled {
            return sim.state.fail(e);
        }
    }
}

fn sub_job_done(sim: &mut CloudSim, slot: usize) {
    let run = sim.state.runs[slot].as_mut().expect("job in flight");
    run.outstanding -= 1;
    if run.outstanding > 0 {
        return;
    }
    let k = run.plan.k();
    let delay = comm_time(
        run.job.num_qubits,
        k,
        sim.state.config.metrics.lambda_per_qubit,
    );
    if k > 1 {
        if let Err(e) = sim.schedule(delay, move |sim| finish_job(sim, slot, delay)) {
            sim.state.fail(e);
        }
    } else {
        finish_job(sim, slot, 0.0);
    }
}

fn finish_job(sim: &mut CloudSim, slot: usize, comm: f64) {
    let run = sim.state.runs[slot].take().expect("job in flight");
    let profiles: Vec<&DeviceProfile> = sim.state.devices.iter().map(|d| &d.profile).collect();
    let fids = plan_device_fidelities(&run.job, &run.plan, &profiles, &sim.state.config.metrics);
    let fidelity = match final_fidelity(&fids, sim.state.config.metrics.phi) {
        Ok(f) => f,
        Err(e) => return sim.state.fail(e),
    };
    let devices_used = run
        .plan
        .assignments()
        .iter()
        .map(|a| (sim.state.devices[a.device].profile.name.clone(), a.qubits))
        .collect();
    for a in run.plan.assignments() {
        let store = sim.state.devices[a.device].store;
        if let Err(e) = sim.release(store, a.qubits) {
            return sim.state.fail(e);
        }
    }
    let finish = sim.now().seconds();
    sim.state.records.push(JobRecord {
        job_id: run.job.job_id,
        arrival: run.job.arrival_time.seconds(),
        start: run.start,
        finish,
        devices_used,
        k: run.plan.k(),
        exec_time: run.exec_time,
        comm_time: comm,
        fidelity,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SimTime;

    fn snap(capacity: u32, clops: f64, error_score: f64) -> DeviceSnapshot {
        DeviceSnapshot {
            capacity,
            level: capacity,
            clops,
            quantum_volume: 127,
            error_score,
        }
    }

    fn job(q: u32) -> QJob {
        QJob {
            job_id: "j".into(),
            num_qubits: q,
            depth: 10,
            num_shots: 1000,
            two_qubit_gates: 100,
            arrival_time: SimTime::ZERO,
        }
    }

    fn reference_snaps() -> Vec<DeviceSnapshot> {
        // strasbourg, brussels, kyiv, quebec, kawasaki
        [220_000.0, 220_000.0, 30_000.0, 32_000.0, 29_000.0]
            .iter()
            .map(|&c| snap(127, c, 0.02))
            .collect()
    }

    #[test]
    fn speed_prefers_fastest_devices() {
        let devs = reference_snaps();
        let sel = select_devices(PolicyKind::Speed, &devs, &job(150), None).unwrap();
        // oracle: independent descending sort of the clops values
        let mut idx: Vec<usize> = (0..5).collect();
        idx.sort_by(|&a, &b| {
            devs[b]
                .clops
                .partial_cmp(&devs[a].clops)
                .unwrap()
                .then(a.cmp(&b))
        });
        assert_eq!(sel.devices, idx[..2].to_vec());
        assert_eq!(sel.devices, vec![0, 1]);
    }

    #[test]
    fn fidelity_prefers_lowest_error() {
        let devs = vec![
            snap(127, 1.0, 0.03),
            snap(127, 1.0, 0.01),
            snap(127, 1.0, 0.02),
        ];
        let sel = select_devices(PolicyKind::Fidelity, &devs, &job(200), None).unwrap();
        assert_eq!(sel.devices, vec![1, 2]);
    }

    #[test]
    fn fair_on_idle_devices_keeps_input_order() {
        let devs = reference_snaps();
        let sel = select_devices(PolicyKind::Fair, &devs, &job(300), None).unwrap();
        assert_eq!(sel.devices, vec![0, 1, 2]);
        let mut busy = devs.clone();
        busy[0].level = 0;
        busy[2].level = 100;
        let sel = select_devices(PolicyKind::Fair, &busy, &job(200), None).unwrap();
        assert_eq!(sel.devices, vec![1, 3]);
    }

    #[test]
    fn rlbase_without_policy_is_a_config_error() {
        let devs = reference_snaps();
        assert!(matches!(
            select_devices(PolicyKind::RlBase, &devs, &job(150), None),
            Err(ScheduleError::MissingPolicy)
        ));
    }

    #[test]
    fn oversized_job_is_deferred() {
        let devs = vec![snap(10, 1.0, 0.0)];
        assert!(matches!(
            select_devices(PolicyKind::Speed, &devs, &job(11), None),
            Err(ScheduleError::InsufficientCapacity {
                needed: 11,
                available: 10
            })
        ));
    }

    fn shares(plan: &AllocationPlan) -> Vec<u32> {
        plan.assignments().iter().map(|a| a.qubits).collect()
    }

    #[test]
    fn greedy_fill_examples() {
        let devs = vec![snap(127, 1.0, 0.0); 3];
        assert_eq!(
            shares(&partition_qubits(150, &[0, 1], &devs).unwrap()),
            vec![127, 23]
        );
        assert_eq!(
            shares(&partition_qubits(127, &[0, 1, 2], &devs).unwrap()),
            vec![127]
        );
        assert_eq!(
            shares(&partition_qubits(300, &[0, 1, 2], &devs).unwrap()),
            vec![127, 127, 46]
        );
        assert!(partition_qubits(300, &[0, 1], &devs).is_err());
    }

    #[test]
    fn fractions_examples() {
        let caps = [127; 5];
        let p = partition_from_fractions(150, &caps, &[1.0; 5], 1e-8).unwrap();
        assert_eq!(shares(&p), vec![30; 5]);
        let p = partition_from_fractions(100, &caps, &[2.0, 1.0, 1.0, 0.0, 0.0], 1e-8).unwrap();
        assert_eq!(
            p.assignments(),
            &[
                Assignment {
                    device: 0,
                    qubits: 50
                },
                Assignment {
                    device: 1,
                    qubits: 25
                },
                Assignment {
                    device: 2,
                    qubits: 25
                }
            ]
        );
        let p = partition_from_fractions(100, &caps, &[0.0; 5], 1e-8).unwrap();
        assert_eq!(shares(&p), vec![20; 5]);
    }

    #[test]
    fn fractions_respect_capacity() {
        let p = partition_from_fractions(200, &[127, 127], &[1.0, 0.0], 1e-8).unwrap();
        assert_eq!(shares(&p), vec![127, 73]);
        assert!(partition_from_fractions(300, &[127, 127], &[1.0, 1.0], 1e-8).is_err());
        assert!(partition_from_fractions(10, &[127, 127], &[1.0, -1.0], 1e-8).is_err());
        assert!(partition_from_fractions(10, &[127], &[1.0, 1.0], 1e-8).is_err());
    }

    #[test]
    fn fractions_remove_overshoot() {
        // thirds of 5 all round up to 2; the first device gives one back
        let p = partition_from_fractions(5, &[5, 5, 5], &[1.0, 1.0, 1.0], 1e-8).unwrap();
        assert_eq!(
            p.assignments(),
            &[
                Assignment {
                    device: 1,
                    qubits: 2
                },
                Assignment {
                    device: 2,
                    qubits: 2
                },
                Assignment {
                    device: 0,
                    qubits: 1
                }
            ]
        );
    }

    #[test]
    fn plan_feasibility_check() {
        let plan = AllocationPlan {
            assignments: vec![
                Assignment {
                    device: 0,
                    qubits: 5,
                },
                Assignment {
                    device: 0,
                    qubits: 5,
                },
            ],
        };
        assert!(!plan.is_feasible(10, &[10]));
        let plan = AllocationPlan {
            assignments: vec![Assignment {
                device: 0,
                qubits: 11,
            }],
        };
        assert!(!plan.is_feasible(11, &[10]));
    }

    #[test]
    fn mode_names_roundtrip() {
        for m in PolicyKind::ALL {
            assert_eq!(m.as_str().parse::<PolicyKind>().unwrap(), m);
        }
        assert!("fastest".parse::<PolicyKind>().is_err());
    }
}
