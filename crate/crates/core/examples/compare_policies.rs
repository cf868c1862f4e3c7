//! Runs the same scenario under several policies and compares their latency
//! over time.
//!
//! ```bash
//! cargo run --release --example compare_policies
//! ```

use leosim::io::compare::{compare_runs, write_comparison};
use leosim::io::{run_scenario, ScenarioConfig};

fn main() -> leosim::Result<()> {
    let root = std::env::temp_dir().join("leosim-compare");
    let mut dirs = Vec::new();
    for (name, policy, weight) in [
        ("hop", "dijkstra", "hop"),
        ("slant_range", "dijkstra", "slant_range"),
        ("data_rate", "dijkstra", "data_rate"),
        ("q_routing", "q_routing", "hop"),
    ] {
        let dir = root.join(name);
        let mut cfg = ScenarioConfig::from_toml_str(
            &format!("duration_s = 60\n[routing]\npolicy = \"{policy}\"\nweight = \"{weight}\"\n"),
            &[],
        )?;
        cfg.output.dir = dir.clone();
        cfg.output.charts = false;
        run_scenario(&cfg)?;
        dirs.push(dir);
    }

    let cmp = compare_runs(&dirs, Some(5.0))?;
    for (i, r) in cmp.runs.iter().enumerate() {
        println!(
            "{:<12} delivered {:>7}  mean e2e {:.4} s  max |diff| vs hop {:.4} s",
            r.label,
            r.summary.delivered,
            r.summary.mean_e2e_s,
            cmp.max_abs_diff(i)
        );
    }
    for p in write_comparison(&cmp, &root.join("comparison"))? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
