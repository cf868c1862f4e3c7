//! Builds Kepler snapshots over one orbit and reports link counts, ground
//! coverage and graph connectivity.
//!
//! ```bash
//! cargo run --release --example topology_snapshot
//! ```

use leosim::io::ScenarioConfig;
use leosim::topology::EdgeKind;

fn main() -> leosim::Result<()> {
    let cfg = ScenarioConfig::default();
    let scenario = cfg.scenario()?;
    let layout = scenario.layout();
    println!(
        "{} planes x {} satellites, {} gateways",
        layout.num_planes, layout.sats_per_plane, layout.num_gateways
    );
    println!(
        "{:>6} {:>6} {:>6} {:>5} {:>10} {:>10}",
        "t (s)", "intra", "inter", "gsl", "components", "live comp."
    );
    for k in 0..=8 {
        let t = k as f64 * 720.0;
        let snap = scenario.snapshot_at(t);
        snap.check_invariants().expect("snapshot invariants");
        let count = |kind| snap.edges.iter().filter(|e| e.kind == kind).count();
        println!(
            "{t:>6.0} {:>6} {:>6} {:>5} {:>10} {:>10}",
            count(EdgeKind::IslIntra),
            count(EdgeKind::IslInter),
            count(EdgeKind::Gsl),
            snap.component_count(false),
            snap.component_count(true)
        );
    }

    let snap = scenario.snapshot_at(0.0);
    println!("\nserving satellites at t = 0:");
    for (g, site) in scenario.gateways.iter().enumerate() {
        match snap.gateway_edge(g) {
            Some(e) => println!(
                "  {:<14} {:<10} {:>7.0} km  up {:>6.1} Mbit/s  down {:>6.1} Mbit/s",
                site.name,
                layout.label(e.a),
                e.distance / 1e3,
                e.rate_reverse / 1e6,
                e.rate / 1e6
            ),
            None => println!("  {:<14} not covered", site.name),
        }
    }
    Ok(())
}
