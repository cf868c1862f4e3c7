//! Runs a scenario described in TOML, then checks the manifest it wrote.
//!
//! ```bash
//! cargo run --release --example config_driven_run
//! ```

use leosim::io::{run_scenario, Manifest, ScenarioConfig};

const SCENARIO: &str = r#"
seed = 42
duration_s = 45

[constellation]
preset = "iridium-next"

[ground]
gateways = 6

[traffic]
load_fraction = 0.4

[routing]
policy = "dijkstra"
weight = "data_rate"

[output]
snapshots = "first"
"#;

fn main() -> leosim::Result<()> {
    let dir = std::env::temp_dir().join("leosim-config-run");
    let mut cfg = ScenarioConfig::from_toml_str(SCENARIO, &[])?;
    cfg.output.dir = dir.clone();
    let report = run_scenario(&cfg)?;
    let s = &report.summary;
    println!(
        "{} packets created, {} delivered, {} dropped",
        s.created, s.delivered, s.dropped
    );
    println!(
        "mean e2e {:.4} s = queue {:.4} + tx {:.4} + prop {:.4}",
        s.mean_e2e_s, s.mean_queue_s, s.mean_tx_s, s.mean_prop_s
    );
    println!("rebuilds: {}", report.stats.rebuilds);
    if let Some(charts) = &report.charts {
        for p in &charts.rendered {
            println!("chart: {}", p.display());
        }
    }

    let manifest = Manifest::load(&dir)?;
    let changed = manifest.verify(&dir)?;
    println!(
        "manifest lists {} files, {} changed since the run",
        manifest.files.len(),
        changed.len()
    );
    println!("trace sha256 {}", manifest.trace_sha256);
    Ok(())
}
