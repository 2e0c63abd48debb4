use qcloud::device::ErrorScoreWeights;
use qcloud::metrics::{execution_time, MetricsConfig};
use qcloud::rl::{Policy, RlConfig};
use qcloud::scheduler::{run_cloud, select_devices, CloudConfig, PolicyKind};
use qcloud::sim::SimTime;
use qcloud::synthetic;
use qcloud::workload::{generate_jobs, ArrivalModel, QJob, WorkloadSpec};
use qcloud::DeviceSnapshot;
use rand::SeedableRng;
use rand_pcg::Pcg64;

fn jobs(count: usize, arrival_model: ArrivalModel) -> Vec<QJob> {
    let spec = WorkloadSpec {
        count,
        arrival_model,
        ..WorkloadSpec::standard(3)
    };
    generate_jobs(&spec, &[127; 5]).unwrap()
}

fn small_policy() -> Policy {
    let mut cfg = RlConfig::default();
    cfg.training.hidden_sizes = vec![8];
    Policy::new(cfg, &mut Pcg64::seed_from_u64(1))
}

fn job(id: &str, q: u32, shots: u64) -> QJob {
    QJob {
        job_id: id.into(),
        num_qubits: q,
        depth: 10,
        num_shots: shots,
        two_qubit_gates: 50,
        arrival_time: SimTime::ZERO,
    }
}

#[test]
fn every_record_satisfies_the_timing_identities() {
    let policy = small_policy();
    let profiles = synthetic::reference_profiles();
    for model in [
        ArrivalModel::AllAtZero,
        ArrivalModel::Poisson { rate: 0.001 },
    ] {
        let input = jobs(120, model);
        for mode in PolicyKind::ALL {
            let out = run_cloud(
                &profiles,
                input.clone(),
                &CloudConfig::new(mode),
                Some(&policy),
            )
            .unwrap();
            // liveness: every job finishes
            assert_eq!(out.records.len(), input.len(), "{mode}");
            for r in &out.records {
                let j = input.iter().find(|j| j.job_id == r.job_id).unwrap();
                assert_eq!(r.arrival, j.arrival_time.seconds());
                assert!(r.arrival <= r.start && r.start <= r.finish, "{r:?}");
                let span = r.finish - r.start;
                assert!(
                    (span - (r.exec_time + r.comm_time)).abs() <= 1e-9 * span.max(1.0),
                    "{r:?}"
                );
                assert!((0.0..=1.0).contains(&r.fidelity));
                let q: u32 = r.devices_used.iter().map(|(_, a)| a).sum();
                assert_eq!(q, j.num_qubits);
                assert_eq!(r.k as usize, r.devices_used.len());
            }
            let makespan = out.records.iter().map(|r| r.finish).fold(0.0, f64::max);
            assert_eq!(out.end_time, makespan);
            let served: u64 = out.devices.iter().map(|d| d.jobs_served).sum();
            let subjobs: u64 = out.records.iter().map(|r| r.k as u64).sum();
            assert_eq!(served, subjobs);
        }
    }
}

#[test]
fn single_device_job_has_no_communication() {
    let profiles = synthetic::reference_profiles();
    let out = run_cloud(
        &profiles,
        vec![job("a", 100, 1000)],
        &CloudConfig::new(PolicyKind::Speed),
        None,
    )
    .unwrap();
    let r = &out.records[0];
    assert_eq!(r.k, 1);
    assert_eq!(r.comm_time, 0.0);
    let t = execution_time(&MetricsConfig::default(), 1000, 127, 220_000.0).unwrap();
    assert_eq!(r.finish - r.start, t);
}

#[test]
fn split_job_waits_for_slowest_device_then_communicates() {
    let profiles = synthetic::reference_profiles();
    let out = run_cloud(
        &profiles,
        vec![job("a", 150, 1000)],
        &CloudConfig::new(PolicyKind::Fidelity),
        None,
    )
    .unwrap();
    let r = &out.records[0];
    assert_eq!(r.k, 2);
    assert!((r.comm_time - 3.0).abs() < 1e-12);
    // fidelity order picks two slow devices; exec time is the slower one
    let cfg = MetricsConfig::default();
    let clops: Vec<f64> = r
        .devices_used
        .iter()
        .map(|(n, _)| profiles.iter().find(|p| &p.name == n).unwrap().clops)
        .collect();
    let slowest = clops.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(
        r.exec_time,
        execution_time(&cfg, 1000, 127, slowest).unwrap()
    );
}

#[test]
fn contending_jobs_queue_on_a_device() {
    let profiles = vec![synthetic::uniform_profile(
        "only", 127, 30_000.0, 0.01, 0.001, 0.01,
    )];
    let out = run_cloud(
        &profiles,
        vec![job("first", 100, 1000), job("second", 100, 1000)],
        &CloudConfig::new(PolicyKind::Speed),
        None,
    )
    .unwrap();
    let first = out.records.iter().find(|r| r.job_id == "first").unwrap();
    let second = out.records.iter().find(|r| r.job_id == "second").unwrap();
    assert_eq!(first.start, 0.0);
    assert_eq!(second.start, first.finish);
}

#[test]
fn identical_devices_give_order_independent_splits() {
    let p = synthetic::uniform_profile("d", 127, 50_000.0, 0.01, 0.001, 0.01);
    let profiles: Vec<_> = (0..5)
        .map(|i| {
            let mut q = p.clone();
            q.name = format!("d{i}");
            q
        })
        .collect();
    let mut reversed = profiles.clone();
    reversed.reverse();
    let input = jobs(40, ArrivalModel::AllAtZero);
    for mode in [PolicyKind::Speed, PolicyKind::Fidelity, PolicyKind::Fair] {
        let a = run_cloud(&profiles, input.clone(), &CloudConfig::new(mode), None).unwrap();
        let b = run_cloud(&reversed, input.clone(), &CloudConfig::new(mode), None).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            let mut sa: Vec<u32> = ra.devices_used.iter().map(|(_, q)| *q).collect();
            let mut sb: Vec<u32> = rb.devices_used.iter().map(|(_, q)| *q).collect();
            sa.sort();
            sb.sort();
            assert_eq!(sa, sb, "{mode}");
        }
    }
}

#[test]
fn selection_touches_grow_linearly() {
    let weights = ErrorScoreWeights::default();
    let base = DeviceSnapshot::idle(
        &synthetic::uniform_profile("d", 127, 1e5, 0.01, 0.001, 0.01),
        &weights,
    )
    .unwrap();
    for n in [10usize, 100, 1000, 10_000] {
        let devices: Vec<DeviceSnapshot> = (0..n)
            .map(|i| DeviceSnapshot {
                clops: 1e5 + i as f64,
                error_score: (i % 7) as f64 * 0.01,
                level: (i % 127) as u32,
                ..base
            })
            .collect();
        let q = 127 * (n as u32) / 2;
        for mode in [PolicyKind::Speed, PolicyKind::Fidelity, PolicyKind::Fair] {
            let sel = select_devices(mode, &devices, &job("j", q, 10), None).unwrap();
            assert!(
                sel.touches <= 2 * n,
                "{mode} n={n}: {} touches",
                sel.touches
            );
        }
    }
}

#[test]
fn speed_policy_picks_the_two_fastest_reference_devices() {
    let weights = ErrorScoreWeights::default();
    let devices: Vec<DeviceSnapshot> = synthetic::reference_profiles()
        .iter()
        .map(|p| DeviceSnapshot::idle(p, &weights).unwrap())
        .collect();
    let sel = select_devices(PolicyKind::Speed, &devices, &job("j", 150, 10), None).unwrap();
    assert_eq!(sel.devices, vec![0, 1]);
}

#[test]
fn oversized_and_duplicate_jobs_are_rejected() {
    let profiles = synthetic::reference_profiles();
    let cfg = CloudConfig::new(PolicyKind::Speed);
    assert!(run_cloud(&profiles, vec![job("big", 636, 10)], &cfg, None).is_err());
    assert!(run_cloud(
        &profiles,
        vec![job("a", 10, 10), job("a", 20, 10)],
        &cfg,
        None
    )
    .is_err());
    assert!(run_cloud(
        &profiles,
        vec![job("a", 10, 10)],
        &CloudConfig::new(PolicyKind::RlBase),
        None
    )
    .is_err());
}
