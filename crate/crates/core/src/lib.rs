//! Simulation of a quantum cloud whose jobs are too large for any single QPU.
//!
//! Jobs are split across several devices, run under one of four allocation
//! policies (speed, error-aware, fair, learned), and scored for execution
//! time, fidelity and classical-communication overhead.
//!
//! - [`sim`]: discrete-event kernel with FIFO capacity stores
//! - [`device`]: device profiles, calibration and the error score
//! - [`workload`]: jobs, synthetic generation and traces
//! - [`scheduler`]: selection policies, partitioning and the execution workflow
//! - [`metrics`]: time and fidelity models, records and summaries
//! - [`rl`]: bandit environment, Gaussian MLP policy and PPO

pub mod cloud;
pub mod device;
pub mod metrics;
pub mod rl;
pub mod scheduler;
pub mod sim;
pub mod synthetic;
pub mod workload;

pub use cloud::{load_cloud, Cloud, CloudManifest};
pub use device::{
    error_score, CalibrationData, DeviceProfile, DeviceSnapshot, ErrorScoreWeights, QDevice,
};
pub use metrics::{JobRecord, MetricsConfig, RunSummary};
pub use rl::{Policy, RlConfig};
pub use scheduler::{run_cloud, AllocationPlan, CloudConfig, PolicyKind, RunOutcome};
pub use sim::{SimTime, Simulation};
pub use workload::{QJob, WorkloadSpec};
