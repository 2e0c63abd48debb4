//! Synthetic device fixtures.
//!
//! The five reference devices use capacity 127, quantum volume 127 and fixed
//! CLOPS values; the calibration numbers are synthetic. The two
//! fastest devices are deliberately the noisiest so that the speed and
//! error-aware policies pull in different directions.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::device::{CalibrationData, CouplingGraph, DeviceProfile};

/// Edges of a 127-qubit heavy-hex lattice (IBM Eagle layout, 144 edges).
pub fn heavy_hex_127() -> Vec<(u32, u32)> {
    // rows of qubits joined by 4 bridge qubits between consecutive rows
    let rows: [(u32, u32); 7] = [
        (0, 13),
        (18, 32),
        (37, 51),
        (56, 70),
        (75, 89),
        (94, 108),
        (113, 126),
    ];
    let bridges: [(u32, [u32; 4], [u32; 4]); 6] = [
        (14, [0, 4, 8, 12], [18, 22, 26, 30]),
        (33, [20, 24, 28, 32], [39, 43, 47, 51]),
        (52, [37, 41, 45, 49], [56, 60, 64, 68]),
        (71, [58, 62, 66, 70], [77, 81, 85, 89]),
        (90, [75, 79, 83, 87], [94, 98, 102, 106]),
        (109, [96, 100, 104, 108], [114, 118, 122, 126]),
    ];
    let mut edges = Vec::with_capacity(144);
    for (lo, hi) in rows {
        edges.extend((lo..hi).map(|q| (q, q + 1)));
    }
    for (first, above, below) in bridges {
        for i in 0..4 {
            let b = first + i as u32;
            edges.push((above[i], b));
            edges.push((b, below[i]));
        }
    }
    edges
}

/// Path graph `0 - 1 - ... - (n-1)`.
pub fn line_edges(n: u32) -> Vec<(u32, u32)> {
    (1..n).map(|q| (q - 1, q)).collect()
}

/// Rates are `base * (0.7 + 0.6 u)` with `u` uniform, clipped to `[0, 1]`.
fn jittered(base: f64, n: usize, rng: &mut Pcg64) -> Vec<f64> {
    (0..n)
        .map(|_| (base * (0.7 + 0.6 * rng.random::<f64>())).clamp(0.0, 1.0))
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Spec {
    name: &'static str,
    clops: f64,
    readout: f64,
    single: f64,
    two: f64,
}

const REFERENCE: [Spec; 5] = [
    Spec {
        name: "ibm_strasbourg",
        clops: 220_000.0,
        readout: 0.016,
        single: 0.00040,
        two: 0.0085,
    },
    Spec {
        name: "ibm_brussels",
        clops: 220_000.0,
        readout: 0.015,
        single: 0.00035,
        two: 0.0080,
    },
    Spec {
        name: "ibm_kyiv",
        clops: 30_000.0,
        readout: 0.010,
        single: 0.00025,
        two: 0.0060,
    },
    Spec {
        name: "ibm_quebec",
        clops: 32_000.0,
        readout: 0.011,
        single: 0.00030,
        two: 0.0065,
    },
    Spec {
        name: "ibm_kawasaki",
        clops: 29_000.0,
        readout: 0.013,
        single: 0.00030,
        two: 0.0072,
    },
];

fn heavy_hex_device(spec: &Spec, seed: u64) -> DeviceProfile {
    let edges = heavy_hex_127();
    let mut rng = Pcg64::seed_from_u64(seed);
    let calibration = CalibrationData {
        readout_errors: jittered(spec.readout, 127, &mut rng),
        single_qubit_error: spec.single,
        two_qubit_errors: jittered(spec.two, edges.len(), &mut rng),
    };
    DeviceProfile {
        name: spec.name.to_string(),
        capacity: 127,
        clops: spec.clops,
        quantum_volume: 127,
        coupling_graph: CouplingGraph::new(127, edges).expect("heavy-hex lattice is connected"),
        calibration,
    }
}

/// Five 127-qubit devices with fixed reference CLOPS values and synthetic
/// calibration.
pub fn reference_profiles() -> Vec<DeviceProfile> {
    REFERENCE
        .iter()
        .enumerate()
        .map(|(i, s)| heavy_hex_device(s, 0x5eed_0000 + i as u64))
        .collect()
}

/// Device on a line graph whose every rate equals the given constant.
pub fn uniform_profile(
    name: &str,
    capacity: u32,
    clops: f64,
    readout: f64,
    single: f64,
    two: f64,
) -> DeviceProfile {
    let edges = line_edges(capacity);
    DeviceProfile {
        name: name.to_string(),
        capacity,
        clops,
        quantum_volume: 127,
        calibration: CalibrationData {
            readout_errors: vec![readout; capacity as usize],
            single_qubit_error: single,
            two_qubit_errors: vec![two; edges.len()],
        },
        coupling_graph: CouplingGraph::new(capacity, edges).expect("line graph is connected"),
    }
}

/// Index of the near-perfect device in [`single_best_profiles`].
pub const BEST_DEVICE: usize = 2;

/// One near-perfect device among four noisy ones, all 127 qubits.
pub fn single_best_profiles() -> Vec<DeviceProfile> {
    (0..5)
        .map(|i| {
            let clops = REFERENCE[i].clops;
            if i == BEST_DEVICE {
                uniform_profile("best", 127, clops, 0.0005, 0.00001, 0.0002)
            } else {
                uniform_profile(&format!("noisy{i}"), 127, clops, 0.08, 0.002, 0.04)
            }
        })
        .collect()
}
