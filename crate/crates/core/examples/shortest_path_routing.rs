//! Dijkstra routing on the Kepler constellation under the three link weights.
//!
//! ```bash
//! cargo run --release --example shortest_path_routing
//! ```

use leosim::engine::{MemoryRecorder, PacketStatus, Simulator, TraceMode};
use leosim::io::ScenarioConfig;
use leosim::routing::{shortest_paths, ShortestPathPolicy, WeightScheme};
use leosim::topology::NodeId;

fn main() -> leosim::Result<()> {
    let mut cfg = ScenarioConfig {
        duration_s: 30.0,
        ..Default::default()
    };
    cfg.traffic.load_fraction = 0.3;
    let scenario = cfg.scenario()?;

    let snap = scenario.snapshot_at(0.0);
    let layout = snap.layout;
    let src = layout.gateway(0);
    println!("routes from {} at t = 0:", scenario.gateways[0].name);
    for scheme in WeightScheme::ALL {
        let table = shortest_paths(&snap, scheme);
        let path = table.path(src, 1).unwrap_or_default();
        let labels: Vec<String> = path.iter().map(|&n: &NodeId| layout.label(n)).collect();
        println!(
            "  {scheme:<14} to {}: {}",
            scenario.gateways[1].name,
            labels.join(" > ")
        );
    }

    println!(
        "\n{:<14} {:>9} {:>9} {:>10} {:>10} {:>8}",
        "weight", "created", "delivered", "e2e ms", "queue ms", "hops"
    );
    for scheme in WeightScheme::ALL {
        let policy = Box::new(ShortestPathPolicy::new(scheme));
        let mut sim = Simulator::new(
            scenario.clone(),
            cfg.engine_config(),
            policy,
            MemoryRecorder::default(),
            TraceMode::Hash,
        )?;
        sim.run()?;
        let out = sim.finish()?;
        let s = &out.stats;
        let delivered: Vec<_> = out
            .recorder
            .packets
            .iter()
            .filter(|p| p.status == PacketStatus::Delivered)
            .collect();
        let hops = delivered.iter().map(|p| p.hops() as f64).sum::<f64>() / delivered.len().max(1) as f64;
        println!(
            "{scheme:<14} {:>9} {:>9} {:>10.3} {:>10.3} {:>8.2}",
            s.counts.created,
            s.counts.delivered,
            s.mean_secs(s.sum_e2e) * 1e3,
            s.mean_secs(s.sum_queue) * 1e3,
            hops
        );
    }
    Ok(())
}
