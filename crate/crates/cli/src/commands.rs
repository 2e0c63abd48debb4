//! Subcommand implementations. Each returns the lines to print on stdout.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qcloud::cloud::{load_cloud, Cloud};
use qcloud::metrics::{
    read_records_csv, summarize, write_records_csv, Histogram, JobRecord, MetricsError, RunSummary,
};
use qcloud::rl::{train_ppo, Policy, RlError, TrainingEnv};
use qcloud::scheduler::{run_cloud, CloudConfig, DeviceUsage, PolicyKind, ScheduleError};
use qcloud::workload::{generate_jobs, load_jobs_csv, write_jobs_csv, QJob, WorkloadSpec};
use serde::Serialize;

use crate::config::{read_json, RunConfig, TrainConfig, WorkloadSource};
use crate::error::CliError;

pub const DEFAULT_BIN_WIDTH: f64 = 0.005;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn load_cloud_cfg(path: &Path) -> Result<Cloud, CliError> {
    load_cloud(path).map_err(CliError::config)
}

fn schedule_error(e: ScheduleError) -> CliError {
    match e {
        ScheduleError::Sim(_) | ScheduleError::Metrics(_) | ScheduleError::InvalidWeights(_) => {
            CliError::runtime(e)
        }
        ScheduleError::Rl(RlError::NonFiniteLoss { .. }) => CliError::runtime(e),
        _ => CliError::config(e),
    }
}

fn rl_error(e: RlError) -> CliError {
    match e {
        RlError::NonFiniteLoss { .. } | RlError::Io { .. } => CliError::runtime(e),
        _ => CliError::config(e),
    }
}

#[derive(Serialize)]
struct WorkloadInfo {
    source: &'static str,
    jobs: usize,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    mode: PolicyKind,
    seed: u64,
    config_hash: String,
    workload: &'a WorkloadInfo,
    #[serde(flatten)]
    summary: &'a RunSummary,
    devices: &'a [DeviceUsage],
}

/// `mode t_sim mean_fid std_fid total_comm`
fn summary_line(s: &RunSummary) -> String {
    format!(
        "{} {:.3} {:.6} {:.6} {:.3}",
        s.label, s.t_sim, s.mean_fidelity, s.std_fidelity, s.total_comm
    )
}

fn load_workload(cfg: &RunConfig, caps: &[u32]) -> Result<(Vec<QJob>, WorkloadInfo), CliError> {
    let (jobs, source) = match &cfg.workload {
        WorkloadSource::Trace(path) => (load_jobs_csv(path).map_err(CliError::config)?, "trace"),
        WorkloadSource::Spec(spec) => {
            let spec = WorkloadSpec {
                seed: cfg.seed,
                ..spec.clone()
            };
            (
                generate_jobs(&spec, caps).map_err(CliError::config)?,
                "spec",
            )
        }
    };
    if jobs.is_empty() {
        return Err(CliError::config("workload: no jobs to simulate"));
    }
    let info = WorkloadInfo {
        source,
        jobs: jobs.len(),
    };
    Ok((jobs, info))
}

pub struct SimulateArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub modes: Option<Vec<PolicyKind>>,
}

pub fn simulate(args: SimulateArgs) -> Result<Vec<String>, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.output {
        cfg.output_dir = out;
    }
    let modes = args.modes.clone().unwrap_or_else(|| vec![cfg.mode]);
    if modes.is_empty() {
        return Err(CliError::config("--modes: no modes given"));
    }
    for &m in &modes {
        cfg.check_policy_for(m)?;
    }
    let cloud = load_cloud_cfg(&cfg.cloud_manifest)?;
    let (jobs, info) = load_workload(&cfg, &cloud.capacities())?;
    let policy = match (&cfg.rl_policy_path, modes.contains(&PolicyKind::RlBase)) {
        (Some(path), true) => {
            Some(Policy::load(path).map_err(|e| CliError::config(format!("rl_policy_path: {e}")))?)
        }
        _ => None,
    };

    let run_one = |mode: PolicyKind, dir: PathBuf| -> Result<String, CliError> {
        let run_cfg = RunConfig {
            mode,
            output_dir: dir.clone(),
            ..cfg.clone()
        };
        let config = CloudConfig {
            mode,
            metrics: cloud.metrics,
            weights: cloud.weights,
        };
        let outcome = run_cloud(&cloud.profiles, jobs.clone(), &config, policy.as_ref())
            .map_err(schedule_error)?;
        let summary = summarize(mode.as_str(), &outcome.records).map_err(CliError::runtime)?;
        create_dir(&dir)?;
        write_records_csv(&outcome.records, create_file(&dir.join("records.csv"))?)
            .map_err(CliError::runtime)?;
        let file = SummaryFile {
            mode,
            seed: cfg.seed,
            config_hash: run_cfg.hash(),
            workload: &info,
            summary: &summary,
            devices: &outcome.devices,
        };
        let text = serde_json::to_string_pretty(&file).expect("summary serializes") + "\n";
        std::fs::write(dir.join("summary.json"), text).map_err(CliError::runtime)?;
        let hist = Histogram::of_fidelities(
            outcome.records.iter().map(|r| &r.fidelity),
            DEFAULT_BIN_WIDTH,
        )
        .map_err(CliError::runtime)?;
        hist.write_csv(create_file(&dir.join("fidelity_hist.csv"))?)
            .map_err(CliError::runtime)?;
        Ok(summary_line(&summary))
    };

    if args.modes.is_none() {
        return Ok(vec![run_one(cfg.mode, cfg.output_dir.clone())?]);
    }
    // independent runs share nothing mutable
    let results: Vec<Result<String, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = modes
            .iter()
            .map(|&m| {
                let dir = cfg.output_dir.join(m.as_str());
                let run_one = &run_one;
                s.spawn(move || run_one(m, dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::runtime("simulation worker panicked")))
            })
            .collect()
    });
    results.into_iter().collect()
}

pub fn gen_jobs(
    spec: &Path,
    manifest: &Path,
    output: &Path,
    seed: Option<u64>,
) -> Result<Vec<String>, CliError> {
    let mut spec: WorkloadSpec = read_json(spec)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let cloud = load_cloud_cfg(manifest)?;
    let jobs = generate_jobs(&spec, &cloud.capacities()).map_err(CliError::config)?;
    write_jobs_csv(&jobs, create_file(output)?).map_err(CliError::runtime)?;
    Ok(vec![format!(
        "wrote {} jobs to {}",
        jobs.len(),
        output.display()
    )])
}

pub fn train_rl(
    config: &Path,
    seed: Option<u64>,
    output: Option<PathBuf>,
) -> Result<Vec<String>, CliError> {
    let mut cfg = TrainConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.rl.seed = seed;
    }
    if let Some(out) = output {
        cfg.output_dir = out;
    }
    let cloud = load_cloud_cfg(&cfg.cloud_manifest)?;
    let env = TrainingEnv::new(
        cloud.profiles,
        cfg.jobs.clone(),
        cloud.metrics,
        &cloud.weights,
    )
    .map_err(rl_error)?;
    let (policy, log) = train_ppo(&env, &cfg.rl).map_err(rl_error)?;
    create_dir(&cfg.output_dir)?;
    let policy_path = cfg.output_dir.join("policy.json");
    policy.save(&policy_path).map_err(rl_error)?;
    let log_path = cfg.output_dir.join("training_log.csv");
    log.write_csv(create_file(&log_path)?)
        .map_err(CliError::runtime)?;
    let mut lines = vec![format!(
        "wrote {} and {}",
        policy_path.display(),
        log_path.display()
    )];
    match (log.batches.last(), log.decile_means()) {
        (Some(last), Some((first, final_decile))) => {
            lines.push(format!(
                "final mean reward {:.6} (last batch {:.6}, first decile {:.6})",
                final_decile, last.mean_reward, first
            ));
        }
        _ => lines.push("no training batches; policy left at initialization".into()),
    }
    Ok(lines)
}

/// Label for a records file: the parent directory for `records.csv`,
/// otherwise the file stem.
fn records_label(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if stem == "records" {
        if let Some(parent) = path.parent().and_then(Path::file_name) {
            return parent.to_string_lossy().into_owned();
        }
    }
    stem
}

fn read_records(path: &Path) -> Result<Vec<JobRecord>, CliError> {
    let file =
        File::open(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let records =
        read_records_csv(file).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(records)
}

pub fn report(files: &[PathBuf], output: &Path, bin_width: f64) -> Result<Vec<String>, CliError> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(CliError::config(MetricsError::BinWidth(bin_width)));
    }
    let mut rows = Vec::new();
    let mut used: Vec<String> = Vec::new();
    for path in files {
        let records = read_records(path)?;
        let mut label = records_label(path);
        let base = label.clone();
        let mut n = 1;
        while used.contains(&label) {
            n += 1;
            label = format!("{base}-{n}");
        }
        used.push(label.clone());
        let summary = summarize(&label, &records)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let hist = Histogram::of_fidelities(records.iter().map(|r| &r.fidelity), bin_width)
            .map_err(CliError::config)?;
        hist.write_csv(create_file(
            &output.join(format!("{label}_fidelity_hist.csv")),
        )?)
        .map_err(CliError::runtime)?;
        rows.push(summary);
    }
    let mut lines = vec![format!(
        "{:<12} {:>6} {:>14} {:>20} {:>12}",
        "mode", "jobs", "T_sim (s)", "muF +/- sigmaF", "T_comm (s)"
    )];
    for s in &rows {
        lines.push(format!(
            "{:<12} {:>6} {:>14.1} {:>20} {:>12.1}",
            s.label,
            s.jobs,
            s.t_sim,
            format!("{:.4} +/- {:.4}", s.mean_fidelity, s.std_fidelity),
            s.total_comm
        ));
    }
    Ok(lines)
}
