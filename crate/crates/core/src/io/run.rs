//! End-to-end scenario execution from a validated configuration.

use std::path::{Path, PathBuf};

use super::charts::{render_run_charts, ChartSummary};
use super::config::{PolicyKind, ScenarioConfig};
use super::output::{
    write_learning_log, write_link_usage, write_run_log, FileRecorder, Manifest, PacketSummary, EDGES_CSV, EPSILON_CSV,
    LINK_USAGE_CSV, MANIFEST, NODES_CSV, PACKETS_CSV, PATHS_CSV, QUEUES_CSV, REWARDS_CSV, ROUTES_CSV, RUN_LOG,
};
use crate::engine::{RunStats, Simulator, TraceMode};
use crate::error::{Error, Result};
use crate::postlearn::load_agent_models;
use crate::routing::classic::ShortestPathPolicy;
use crate::routing::madrl::{MadrlPhase, MadrlPolicy, GLOBAL_MODEL_NAME};
use crate::routing::mlp::Mlp;
use crate::routing::qrouting::{QRoutingPolicy, QTable};
use crate::routing::RoutingPolicy;
use crate::topology::{NodeLayout, TopologySnapshot};

pub const CONFIG_ECHO: &str = "config.toml";
pub const CHARTS_DIR: &str = "charts";
pub const MODELS_DIR: &str = "models";
pub const QTABLE_NAME: &str = "qtable.csv";
pub const FORMAT_VERSION: u32 = 1;

/// Resolves `path` to a file: itself, or `dir/default_name` when it is a directory.
fn resolve(path: &Path, default_name: &str) -> Result<PathBuf> {
    let p = if path.is_dir() {
        path.join(default_name)
    } else {
        path.to_path_buf()
    };
    if p.exists() {
        Ok(p)
    } else {
        Err(Error::Model {
            path: p,
            reason: "file not found".into(),
        })
    }
}

/// Constructs the routing policy, importing learned state when configured.
pub fn build_policy(cfg: &ScenarioConfig, layout: NodeLayout) -> Result<Box<dyn RoutingPolicy>> {
    let seed = cfg.seed;
    let import = cfg.routing.import.as_deref();
    Ok(match cfg.routing.policy {
        PolicyKind::Dijkstra => Box::new(ShortestPathPolicy::new(cfg.routing.weight)),
        PolicyKind::QRouting => {
            let qc = cfg.learning.qrouting();
            match import {
                Some(p) => {
                    let table = QTable::load(&resolve(p, QTABLE_NAME)?, layout.num_sats(), layout.num_gateways)?;
                    Box::new(QRoutingPolicy::with_table(qc, layout, table, seed))
                }
                None => Box::new(QRoutingPolicy::new(qc, layout, seed)),
            }
        }
        PolicyKind::Madrl => {
            let dc = cfg.learning.dqn();
            let phase = cfg.routing.phase;
            match import {
                None => Box::new(MadrlPolicy::new(dc, phase, layout, seed)),
                Some(p) if phase == MadrlPhase::Online && p.is_dir() && !p.join(GLOBAL_MODEL_NAME).exists() => {
                    let models = load_agent_models(p)?;
                    Box::new(MadrlPolicy::from_models(dc, phase, layout, models, seed)?)
                }
                Some(p) => {
                    let model = Mlp::load(&resolve(p, GLOBAL_MODEL_NAME)?)?;
                    let expected = dc.layer_sizes();
                    if model.sizes() != expected.as_slice() {
                        return Err(Error::Incompatible(format!(
                            "imported model layers {:?} do not match configured {:?}",
                            model.sizes(),
                            expected
                        )));
                    }
                    Box::new(MadrlPolicy::from_model(dc, phase, layout, model, seed))
                }
            }
        }
    })
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub policy: String,
    pub stats: RunStats,
    pub summary: PacketSummary,
    pub trace_digest: String,
    pub flow_rate: f64,
    pub charts: Option<ChartSummary>,
    pub model_files: Vec<PathBuf>,
    pub final_snapshot: TopologySnapshot,
}

/// Removes artifacts a previous run left in `dir`, leaving unrelated files alone.
fn clear_previous(dir: &Path) -> Result<()> {
    for name in [
        PACKETS_CSV,
        PATHS_CSV,
        QUEUES_CSV,
        ROUTES_CSV,
        EDGES_CSV,
        NODES_CSV,
        LINK_USAGE_CSV,
        REWARDS_CSV,
        EPSILON_CSV,
        RUN_LOG,
        MANIFEST,
        CONFIG_ECHO,
    ] {
        let p = dir.join(name);
        if p.is_file() {
            std::fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    for name in [CHARTS_DIR, MODELS_DIR] {
        let p = dir.join(name);
        if p.is_dir() {
            std::fs::remove_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(())
}

/// Runs the configured scenario and writes every artifact under `cfg.output.dir`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    let dir = cfg.output.dir.clone();
    let scenario = cfg.scenario()?;
    let layout = scenario.layout();
    let policy = build_policy(cfg, layout)?;
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    clear_previous(&dir)?;
    let echo = dir.join(CONFIG_ECHO);
    std::fs::write(&echo, cfg.to_toml()).map_err(|e| Error::io(&echo, e))?;

    let recorder = FileRecorder::create(&dir, cfg.output.snapshots, cfg.output.paths)?;
    let mut sim = Simulator::new(scenario, cfg.engine_config(), policy, recorder, TraceMode::Hash)?;
    let flow_rate = sim.flow_rate();
    log::info!(
        "running {} for {} s with {} nodes at {:.4} packets/s per flow",
        cfg.routing.policy.as_str(),
        cfg.duration_s,
        layout.num_nodes(),
        flow_rate
    );
    sim.run()?;
    let out = sim.finish()?;
    let kinds = out.recorder.finish()?;
    let policy_name = out.policy.name();

    write_link_usage(&dir.join(LINK_USAGE_CSV), &out.stats, &kinds)?;
    if let Some(log) = out.policy.learning_log() {
        write_learning_log(&dir, log)?;
    }
    let mut model_files = Vec::new();
    if cfg.output.save_models {
        let mdir = dir.join(MODELS_DIR);
        std::fs::create_dir_all(&mdir).map_err(|e| Error::io(&mdir, e))?;
        model_files = out.policy.save(&mdir)?;
        if model_files.is_empty() {
            std::fs::remove_dir(&mdir).map_err(|e| Error::io(&mdir, e))?;
        }
    }
    write_run_log(
        &dir.join(RUN_LOG),
        &policy_name,
        &out.stats,
        &layout,
        &out.trace_digest,
        flow_rate,
    )?;

    let charts = if cfg.output.charts {
        let s = render_run_charts(&dir, &dir.join(CHARTS_DIR), &policy_name)?;
        for (name, why) in &s.failed {
            log::warn!("chart {name} not rendered: {why}");
        }
        Some(s)
    } else {
        None
    };

    let summary = PacketSummary::from_stats(&out.stats);
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        policy: policy_name.clone(),
        fingerprint: cfg.fingerprint()?,
        config: serde_json::to_value(cfg)?,
        summary: summary.clone(),
        trace_sha256: out.trace_digest.clone(),
        files: Manifest::hash_dir(&dir)?,
    };
    manifest.write(&dir)?;
    Ok(RunReport {
        dir,
        policy: policy_name,
        stats: out.stats,
        summary,
        trace_digest: out.trace_digest,
        flow_rate,
        charts,
        model_files,
        final_snapshot: out.final_snapshot,
    })
}

/// Re-runs the configuration echoed in a manifest into `out_dir`.
pub fn replay(run_dir: &Path, out_dir: &Path) -> Result<RunReport> {
    let m = Manifest::load(run_dir)?;
    let mut cfg: ScenarioConfig = serde_json::from_value(m.config)?;
    cfg.output.dir = out_dir.to_path_buf();
    run_scenario(&cfg)
}
