//! Regenerates the JSON fixtures shipped in `fixtures/`.
//!
//! `cargo run -p qcloud-core --example write_fixtures -- fixtures`

use std::path::PathBuf;

use qcloud::cloud::write_cloud;
use qcloud::metrics::MetricsConfig;
use qcloud::synthetic;
use qcloud::workload::WorkloadSpec;
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    write_cloud(
        root.join("cloud"),
        &synthetic::reference_profiles(),
        &MetricsConfig::default(),
    )?;
    write_cloud(
        root.join("single_best"),
        &synthetic::single_best_profiles(),
        &MetricsConfig::default(),
    )?;

    let spec = WorkloadSpec::standard(1);
    let write = |name: &str, value: serde_json::Value| -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&value).expect("json") + "\n";
        std::fs::write(root.join(name), text)
    };
    write("workload_spec.json", serde_json::to_value(&spec)?)?;
    write(
        "run.json",
        json!({
            "cloud_manifest": "cloud/cloud.json",
            "mode": "fidelity",
            "workload": { "spec": spec },
            "rl_policy_path": "out/rl/policy.json",
            "output_dir": "out/run",
            "seed": 1
        }),
    )?;
    write(
        "train_rl.json",
        json!({
            "cloud_manifest": "cloud/cloud.json",
            "rl": { "seed": 1, "training": { "timesteps": 20000 } },
            "jobs": {
                "qubit_range": [130, 250],
                "depth_range": [5, 20],
                "shots_range": [10000, 100000]
            },
            "output_dir": "out/rl"
        }),
    )?;
    write(
        "train_rl_single_best.json",
        json!({
            "cloud_manifest": "single_best/cloud.json",
            "rl": { "seed": 7, "training": { "timesteps": 20000 } },
            "jobs": {
                "qubit_range": [10, 120],
                "depth_range": [5, 20],
                "shots_range": [10000, 100000]
            },
            "output_dir": "out/rl_single_best"
        }),
    )?;
    println!("fixtures written to {}", root.display());
    Ok(())
}
