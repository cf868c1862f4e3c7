//! Trains tabular Q-routing on a small frozen constellation, then evaluates
//! the learned table greedily against slant-range Dijkstra.
//!
//! ```bash
//! cargo run --release --example q_routing_training
//! ```

use leosim::engine::{MemoryRecorder, Simulator, TraceMode};
use leosim::io::{build_policy, run_scenario, ScenarioConfig};

fn small(sets: &[(&str, &str)]) -> leosim::Result<ScenarioConfig> {
    let mut all = vec![
        ("constellation.preset", "\"test-small\""),
        ("ground.gateways", "2"),
        ("radio.isl.eirp_dbw", "50.0"),
        ("engine.update_interval_s", "0"),
    ];
    all.extend_from_slice(sets);
    let pairs: Vec<(String, String)> = all.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    ScenarioConfig::from_toml_str("", &pairs)
}

fn mean_e2e(cfg: &ScenarioConfig) -> leosim::Result<f64> {
    let scenario = cfg.scenario()?;
    let policy = build_policy(cfg, scenario.layout())?;
    let mut sim = Simulator::new(
        scenario,
        cfg.engine_config(),
        policy,
        MemoryRecorder::default(),
        TraceMode::Hash,
    )?;
    sim.run()?;
    let out = sim.finish()?;
    Ok(out.stats.mean_secs(out.stats.sum_e2e))
}

fn main() -> leosim::Result<()> {
    let dir = std::env::temp_dir().join("leosim-q-routing");
    let dir_s = format!("{:?}", dir.display().to_string());
    let train = small(&[
        ("routing.policy", "\"q_routing\""),
        ("duration_s", "30"),
        ("learning.epsilon.start", "1.0"),
        ("learning.epsilon.end", "0.0"),
        ("learning.epsilon.horizon", "20000"),
        ("output.dir", &dir_s),
    ])?;
    let report = run_scenario(&train)?;
    println!(
        "training: {} packets delivered, mean e2e {:.4} s, artifacts in {}",
        report.summary.delivered,
        report.summary.mean_e2e_s,
        dir.display()
    );

    let table = format!("{:?}", dir.join("models").display().to_string());
    let greedy = mean_e2e(&small(&[
        ("routing.policy", "\"q_routing\""),
        ("routing.import", &table),
        ("duration_s", "20"),
        ("learning.epsilon.start", "0.0"),
        ("learning.epsilon.end", "0.0"),
    ])?)?;
    let optimum = mean_e2e(&small(&[("routing.weight", "\"slant_range\""), ("duration_s", "20")])?)?;
    println!(
        "greedy Q-routing {greedy:.5} s vs slant-range Dijkstra {optimum:.5} s ({:.3}x)",
        greedy / optimum
    );
    Ok(())
}
