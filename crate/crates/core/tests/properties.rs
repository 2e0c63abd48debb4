use proptest::prelude::*;
use qcloud::device::{error_score, CalibrationData, ErrorScoreWeights};
use qcloud::metrics::{
    fidelity_1q, fidelity_2q, fidelity_readout, final_fidelity, read_records_csv,
    write_records_csv, JobRecord, TwoQubitExponent,
};
use qcloud::rl::action_weights;
use qcloud::scheduler::partition_from_fractions;
use qcloud::sim::{SimTime, Simulation};
use qcloud::workload::{read_jobs_csv, write_jobs_csv, QJob};

fn rate() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn calibration() -> impl Strategy<Value = CalibrationData> {
    (
        prop::collection::vec(rate(), 1..20),
        rate(),
        prop::collection::vec(rate(), 1..20),
    )
        .prop_map(
            |(readout_errors, single_qubit_error, two_qubit_errors)| CalibrationData {
                readout_errors,
                single_qubit_error,
                two_qubit_errors,
            },
        )
}

proptest! {
    #[test]
    fn fidelities_stay_in_unit_interval(
        eps in rate(),
        depth in 0u32..500,
        n in 0u64..100_000,
        q in 1u32..1000,
        k in 1u32..10,
        fs in prop::collection::vec(rate(), 1..8),
        phi in 0.0..=1.0f64,
    ) {
        for f in [
            fidelity_1q(eps, depth),
            fidelity_2q(eps, n, TwoQubitExponent::Sqrt),
            fidelity_2q(eps, n, TwoQubitExponent::FourthRoot),
            fidelity_readout(eps, q, k),
            final_fidelity(&fs, phi).unwrap(),
        ] {
            prop_assert!((0.0..=1.0).contains(&f), "{f}");
        }
    }

    #[test]
    fn fidelities_decrease_with_error_and_size(
        eps in 0.001..0.5f64,
        bump in 0.001..0.4f64,
        depth in 1u32..200,
        n in 1u64..10_000,
    ) {
        let worse = (eps + bump).min(1.0);
        prop_assert!(fidelity_1q(worse, depth) < fidelity_1q(eps, depth));
        prop_assert!(fidelity_1q(eps, depth + 1) < fidelity_1q(eps, depth));
        prop_assert!(fidelity_2q(worse, n, TwoQubitExponent::Sqrt) < fidelity_2q(eps, n, TwoQubitExponent::Sqrt));
        prop_assert!(fidelity_2q(eps, n + 1, TwoQubitExponent::Sqrt) < fidelity_2q(eps, n, TwoQubitExponent::Sqrt));
    }

    #[test]
    fn penalty_decreases_with_device_count(f in 0.01..=1.0f64, phi in 0.01..0.999f64, k in 1usize..8) {
        let a = final_fidelity(&vec![f; k], phi).unwrap();
        let b = final_fidelity(&vec![f; k + 1], phi).unwrap();
        prop_assert!(b < a);
        prop_assert!((a - f * phi.powi(k as i32 - 1)).abs() <= 1e-15);
    }

    #[test]
    fn error_score_grows_with_any_entry(cal in calibration(), which in 0usize..3, idx in any::<prop::sample::Index>()) {
        let w = ErrorScoreWeights::default();
        let base = error_score(&cal, &w).unwrap();
        let mut worse = cal.clone();
        let slot = match which {
            0 => &mut worse.readout_errors[idx.index(cal.readout_errors.len())],
            1 => &mut worse.single_qubit_error,
            _ => &mut worse.two_qubit_errors[idx.index(cal.two_qubit_errors.len())],
        };
        prop_assume!(*slot < 0.99);
        *slot += 0.01;
        prop_assert!(error_score(&worse, &w).unwrap() > base);
    }

    #[test]
    fn error_score_of_uniform_device_is_the_rate(e in rate(), n in 1usize..50, m in 1usize..50) {
        let cal = CalibrationData {
            readout_errors: vec![e; n],
            single_qubit_error: e,
            two_qubit_errors: vec![e; m],
        };
        let s = error_score(&cal, &ErrorScoreWeights::default()).unwrap();
        prop_assert!((s - e).abs() <= 1e-15, "{s} vs {e}");
    }

    #[test]
    fn error_score_ignores_order(cal in calibration(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
        let mut shuffled = cal.clone();
        shuffled.readout_errors.shuffle(&mut rng);
        shuffled.two_qubit_errors.shuffle(&mut rng);
        let w = ErrorScoreWeights::default();
        let a = error_score(&cal, &w).unwrap();
        let b = error_score(&shuffled, &w).unwrap();
        prop_assert!((a - b).abs() <= 1e-15);
    }

    #[test]
    fn fractions_always_sum_to_q(
        caps in prop::collection::vec(1u32..200, 1..8),
        raw in prop::collection::vec(-3.0..5.0f64, 8),
        frac in 0.0..=1.0f64,
    ) {
        let total: u32 = caps.iter().sum();
        let q = ((total as f64 * frac).round() as u32).clamp(1, total);
        let weights = action_weights(&raw[..caps.len()]);
        let plan = partition_from_fractions(q, &caps, &weights, 1e-8).unwrap();
        prop_assert_eq!(plan.total_qubits(), q);
        prop_assert!(plan.is_feasible(q, &caps));
    }

    #[test]
    fn records_csv_roundtrips(records in prop::collection::vec(record(), 0..10)) {
        let mut buf = Vec::new();
        write_records_csv(&records, &mut buf).unwrap();
        let back = read_records_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, records);
    }

    #[test]
    fn jobs_csv_roundtrips(jobs in prop::collection::vec(job(), 0..10)) {
        let mut jobs = jobs;
        for (i, j) in jobs.iter_mut().enumerate() {
            j.job_id = format!("job{i}");
        }
        let mut buf = Vec::new();
        write_jobs_csv(&jobs, &mut buf).unwrap();
        prop_assert_eq!(read_jobs_csv(buf.as_slice()).unwrap(), jobs);
    }

    /// level + held = capacity after every event, and every request is served.
    #[test]
    fn stores_conserve_capacity(
        cap in 1u32..50,
        reqs in prop::collection::vec((1u32..50, 0.0..10.0f64, 0.0..5.0f64), 1..40),
    ) {
        struct World {
            served: usize,
            violations: usize,
        }
        let mut sim = Simulation::new(World { served: 0, violations: 0 });
        let store = sim.add_store(cap);
        for (amount, at, hold) in reqs.iter().copied() {
            let amount = amount.min(cap);
            sim.schedule(at, move |s: &mut Simulation<World>| {
                s.acquire(store, amount, move |s: &mut Simulation<World>| {
                    s.state.served += 1;
                    s.schedule(hold, move |s: &mut Simulation<World>| {
                        s.release(store, amount).unwrap();
                        let st = s.store(store);
                        if st.level() + st.held() != st.capacity() {
                            s.state.violations += 1;
                        }
                    })
                    .unwrap();
                })
                .unwrap();
            })
            .unwrap();
        }
        sim.run(None);
        prop_assert_eq!(sim.state.served, reqs.len());
        prop_assert_eq!(sim.state.violations, 0);
        prop_assert_eq!(sim.store(store).level(), cap);
        prop_assert_eq!(sim.store(store).queued(), 0);
    }
}

fn record() -> impl Strategy<Value = JobRecord> {
    (
        "[a-z][a-z0-9_]{0,8}",
        0.0..1e6f64,
        0.0..1e6f64,
        0.0..1e6f64,
        prop::collection::vec(("[a-z][a-z0-9_]{0,6}", 1u32..200), 1..5),
        0.0..1.0f64,
    )
        .prop_map(|(job_id, arrival, wait, exec, devices_used, fidelity)| {
            let k = devices_used.len() as u32;
            let q: u32 = devices_used.iter().map(|(_, a)| a).sum();
            let comm = (k - 1) as f64 * 0.02 * q as f64;
            JobRecord {
                job_id,
                arrival,
                start: arrival + wait,
                finish: arrival + wait + exec + comm,
                devices_used,
                k,
                exec_time: exec,
                comm_time: comm,
                fidelity,
            }
        })
}

fn job() -> impl Strategy<Value = QJob> {
    (
        1u32..1000,
        1u32..100,
        1u64..1_000_000,
        0u64..100_000,
        0.0..1e5f64,
    )
        .prop_map(|(num_qubits, depth, num_shots, two_qubit_gates, at)| QJob {
            job_id: String::new(),
            num_qubits,
            depth,
            num_shots,
            two_qubit_gates,
            arrival_time: SimTime::new(at),
        })
}
