//! Multi-agent deep Q-routing: a shared offline model is trained first, then
//! every satellite fine-tunes its own copy online. The online agents are then
//! compared with CKA and averaged at each aggregation tier.
//!
//! ```bash
//! cargo run --release --example madrl_offline_online
//! ```

use leosim::io::analysis::{aggregate_run, cka_run};
use leosim::io::{run_scenario, ScenarioConfig};
use leosim::postlearn::AggregationTier;

fn config(sets: &[(&str, &str)]) -> leosim::Result<ScenarioConfig> {
    let mut all = vec![
        ("constellation.preset", "\"test-medium\""),
        ("ground.gateways", "4"),
        ("routing.policy", "\"madrl\""),
        ("duration_s", "20"),
    ];
    all.extend_from_slice(sets);
    let pairs: Vec<(String, String)> = all.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    ScenarioConfig::from_toml_str("", &pairs)
}

fn main() -> leosim::Result<()> {
    let root = std::env::temp_dir().join("leosim-madrl");
    let offline = root.join("offline");
    let online = root.join("online");
    let q = |p: &std::path::Path| format!("{:?}", p.display().to_string());

    let r = run_scenario(&config(&[
        ("routing.phase", "\"offline\""),
        ("output.dir", &q(&offline)),
    ])?)?;
    println!(
        "offline: mean e2e {:.4} s, {} model files",
        r.summary.mean_e2e_s,
        r.model_files.len()
    );

    let models = offline.join("models");
    let r = run_scenario(&config(&[
        ("routing.phase", "\"online\""),
        ("routing.import", &q(&models)),
        ("learning.epsilon.start", "0.1"),
        ("output.dir", &q(&online)),
    ])?)?;
    println!(
        "online:  mean e2e {:.4} s, {} agents saved",
        r.summary.mean_e2e_s,
        r.model_files.len() - 1
    );

    let cka = cka_run(&online, None, &online.join("cka"))?;
    println!(
        "mean pairwise CKA after online learning: {:.4}",
        cka.mean_off_diagonal()
    );
    for tier in AggregationTier::ALL {
        let out = root.join("aggregated").join(tier.as_str());
        let a = aggregate_run(&online, tier, &out)?;
        let c = cka_run(&out, None, &out)?;
        println!(
            "{:<20} parameter variance {:.3e} -> {:.3e}, mean CKA {:.4}",
            tier.as_str(),
            a.variance_before,
            a.variance_after,
            c.mean_off_diagonal()
        );
    }
    println!("artifacts in {}", root.display());
    Ok(())
}
