//! Post-run analysis of learned agent models: aggregation and representation similarity.

use std::path::{Path, PathBuf};

use super::charts::heatmap;
use super::config::ScenarioConfig;
use super::output::Manifest;
use super::run::MODELS_DIR;
use crate::error::{Error, Result};
use crate::postlearn::{
    aggregate, cka_matrix, load_agent_models, load_probes, parameter_variance, write_cka_csv, AggregationTier,
};
use crate::routing::madrl::{agent_model_name, PROBES_NAME};

pub const CKA_CSV: &str = "cka_matrix.csv";
pub const CKA_SVG: &str = "cka.svg";

/// Configuration echoed in a run's manifest.
pub fn run_config(run_dir: &Path) -> Result<ScenarioConfig> {
    let m = Manifest::load(run_dir)?;
    Ok(serde_json::from_value(m.config)?)
}

/// Directory holding the agent models of `path`: `path/models` for a run, else `path`.
pub fn models_dir(path: &Path) -> PathBuf {
    let nested = path.join(MODELS_DIR);
    if nested.is_dir() {
        nested
    } else {
        path.to_path_buf()
    }
}

#[derive(Debug, Clone)]
pub struct AggregateReport {
    pub tier: AggregationTier,
    pub agents: usize,
    pub variance_before: f64,
    pub variance_after: f64,
    pub out_dir: PathBuf,
}

/// Averages the per-satellite models of an online run and writes them to `out_dir`.
/// Neighborhoods come from the topology at the end of the run.
pub fn aggregate_run(run_dir: &Path, tier: AggregationTier, out_dir: &Path) -> Result<AggregateReport> {
    let cfg = run_config(run_dir)?;
    let src = models_dir(run_dir);
    let models = load_agent_models(&src)?;
    let snapshot = cfg.scenario()?.snapshot_at(cfg.duration_s);
    let merged = aggregate(&models, tier, &snapshot)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (i, m) in merged.iter().enumerate() {
        m.save(&out_dir.join(agent_model_name(i)))?;
    }
    let probes = src.join(PROBES_NAME);
    if probes.exists() {
        let dst = out_dir.join(PROBES_NAME);
        std::fs::copy(&probes, &dst).map_err(|e| Error::io(&dst, e))?;
    }
    Ok(AggregateReport {
        tier,
        agents: merged.len(),
        variance_before: parameter_variance(&models)?,
        variance_after: parameter_variance(&merged)?,
        out_dir: out_dir.to_path_buf(),
    })
}

#[derive(Debug, Clone)]
pub struct CkaReport {
    pub matrix: Vec<Vec<f64>>,
    pub probes: usize,
    pub files: Vec<PathBuf>,
}

impl CkaReport {
    /// Mean over distinct agent pairs.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.matrix.len();
        if n < 2 {
            return 1.0;
        }
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += self.matrix[i][j];
                }
            }
        }
        s / (n * (n - 1)) as f64
    }
}

/// Pairwise CKA of the agent models under `path` on the saved probe states.
pub fn cka_run(path: &Path, probes: Option<&Path>, out_dir: &Path) -> Result<CkaReport> {
    let dir = models_dir(path);
    let models = load_agent_models(&dir)?;
    let probe_path = probes.map(Path::to_path_buf).unwrap_or_else(|| dir.join(PROBES_NAME));
    let states = load_probes(&probe_path)?;
    let matrix = cka_matrix(&models, &states)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv_path = out_dir.join(CKA_CSV);
    let mut buf = Vec::new();
    write_cka_csv(&matrix, &mut buf).map_err(|e| Error::io(&csv_path, e))?;
    std::fs::write(&csv_path, buf).map_err(|e| Error::io(&csv_path, e))?;
    let svg_path = out_dir.join(CKA_SVG);
    std::fs::write(&svg_path, heatmap("Pairwise linear CKA", &matrix)).map_err(|e| Error::io(&svg_path, e))?;
    Ok(CkaReport {
        matrix,
        probes: states.len(),
        files: vec![csv_path, svg_path],
    })
}
