//! Model similarity (linear CKA) and parameter averaging across agents.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::routing::madrl::agent_model_name;
use crate::routing::Mlp;
use crate::topology::{EdgeKind, NodeId, TopologySnapshot};

/// Row-major `n × p` matrix of probe activations with zero-mean columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ActivationMatrix {
    /// Centers each column of `rows`. Needs at least two rows of equal length.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::Analysis(format!("need at least 2 probe states, got {n}")));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Analysis("ragged activation rows".into()));
        }
        let mut data: Vec<f64> = rows.iter().flatten().copied().collect();
        for j in 0..p {
            let mean = (0..n).map(|i| data[i * p + j]).sum::<f64>() / n as f64;
            for i in 0..n {
                data[i * p + j] -= mean;
            }
        }
        Ok(ActivationMatrix { rows: n, cols: p, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Squared Frobenius norm of `Aᵀ B`.
fn cross_frobenius_sq(a: &ActivationMatrix, b: &ActivationMatrix) -> f64 {
    let mut total = 0.0;
    for j in 0..a.cols {
        for k in 0..b.cols {
            let mut s = 0.0;
            for i in 0..a.rows {
                s += a.get(i, j) * b.get(i, k);
            }
            total += s * s;
        }
    }
    total
}

/// `‖YᵀX‖²_F / (‖XᵀX‖_F ‖YᵀY‖_F)`, clamped to [0, 1]. Zero when either
/// representation is constant.
pub fn linear_cka(x: &ActivationMatrix, y: &ActivationMatrix) -> Result<f64> {
    if x.rows != y.rows {
        return Err(Error::Analysis(format!("row counts differ: {} vs {}", x.rows, y.rows)));
    }
    let xx = cross_frobenius_sq(x, x).sqrt();
    let yy = cross_frobenius_sq(y, y).sqrt();
    if xx == 0.0 || yy == 0.0 {
        return Ok(0.0);
    }
    let xy = cross_frobenius_sq(y, x);
    Ok((xy / (xx * yy)).clamp(0.0, 1.0))
}

/// Last-hidden-layer activations of `model` on each probe state.
pub fn probe_activations(model: &Mlp, probes: &[Vec<f64>]) -> Result<ActivationMatrix> {
    let rows = probes
        .iter()
        .map(|p| model.forward_hidden(p))
        .collect::<Result<Vec<_>>>()?;
    ActivationMatrix::new(&rows)
}

/// Pairwise CKA between all models on a shared probe set.
pub fn cka_matrix(models: &[Mlp], probes: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let acts = models
        .iter()
        .map(|m| probe_activations(m, probes))
        .collect::<Result<Vec<_>>>()?;
    let n = acts.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        out[i][i] = linear_cka(&acts[i], &acts[i])?;
        for j in i + 1..n {
            let v = linear_cka(&acts[i], &acts[j])?;
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Ok(out)
}

pub fn write_cka_csv(matrix: &[Vec<f64>], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "agent_i,agent_j,cka")?;
    for (i, row) in matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            writeln!(out, "{i},{j},{v}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationTier {
    /// Mean over the agent and its inter-satellite-link neighbors.
    ModelAnticipation,
    /// Mean over the agent's orbital plane.
    OrbitalPlane,
    /// Mean over every agent.
    FullConstellation,
}

impl AggregationTier {
    pub const ALL: [AggregationTier; 3] = [
        AggregationTier::ModelAnticipation,
        AggregationTier::OrbitalPlane,
        AggregationTier::FullConstellation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregationTier::ModelAnticipation => "model_anticipation",
            AggregationTier::OrbitalPlane => "orbital_plane",
            AggregationTier::FullConstellation => "full_constellation",
        }
    }
}

impl std::str::FromStr for AggregationTier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AggregationTier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::config("tier", format!("unknown aggregation tier `{s}`")))
    }
}

/// Agent indices averaged into agent `i` for `tier`.
pub fn aggregation_group(i: usize, tier: AggregationTier, snapshot: &TopologySnapshot) -> Vec<usize> {
    let layout = snapshot.layout;
    let n = layout.num_sats();
    match tier {
        AggregationTier::FullConstellation => (0..n).collect(),
        AggregationTier::OrbitalPlane => {
            let plane = i / layout.sats_per_plane;
            (plane * layout.sats_per_plane..(plane + 1) * layout.sats_per_plane).collect()
        }
        AggregationTier::ModelAnticipation => {
            let mut g: Vec<usize> = snapshot
                .neighbors(NodeId(i))
                .filter(|(_, e)| e.kind != EdgeKind::Gsl)
                .map(|(nb, _)| nb.0)
                .collect();
            g.push(i);
            g.sort_unstable();
            g.dedup();
            g
        }
    }
}

/// Replaces each agent's parameters by the unweighted mean over its group.
/// `models[i]` belongs to satellite `i` of `snapshot`.
pub fn aggregate(models: &[Mlp], tier: AggregationTier, snapshot: &TopologySnapshot) -> Result<Vec<Mlp>> {
    if models.len() != snapshot.layout.num_sats() {
        return Err(Error::Analysis(format!(
            "{} models for {} satellites",
            models.len(),
            snapshot.layout.num_sats()
        )));
    }
    check_same_architecture(models)?;
    let params: Vec<Vec<f64>> = models.iter().map(Mlp::params).collect();
    let mut out = Vec::with_capacity(models.len());
    for i in 0..models.len() {
        let group = aggregation_group(i, tier, snapshot);
        let mut mean = vec![0.0; params[i].len()];
        for &g in &group {
            for (m, v) in mean.iter_mut().zip(&params[g]) {
                *m += v;
            }
        }
        let k = group.len() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        let mut model = models[i].clone();
        model.set_params(&mean)?;
        out.push(model);
    }
    Ok(out)
}

fn check_same_architecture(models: &[Mlp]) -> Result<()> {
    if let Some(first) = models.first() {
        if let Some(m) = models.iter().find(|m| m.sizes() != first.sizes()) {
            return Err(Error::Incompatible(format!(
                "architecture mismatch: {:?} vs {:?}",
                first.sizes(),
                m.sizes()
            )));
        }
    }
    Ok(())
}

/// Mean over parameters of the across-agent (population) variance.
pub fn parameter_variance(models: &[Mlp]) -> Result<f64> {
    check_same_architecture(models)?;
    if models.is_empty() {
        return Ok(0.0);
    }
    let params: Vec<Vec<f64>> = models.iter().map(Mlp::params).collect();
    let np = params[0].len();
    let n = params.len() as f64;
    let mut total = 0.0;
    for j in 0..np {
        // Running mean stays exact when every value is identical.
        let (mut mean, mut m2) = (0.0, 0.0);
        for (k, p) in params.iter().enumerate() {
            let d = p[j] - mean;
            mean += d / (k + 1) as f64;
            m2 += d * (p[j] - mean);
        }
        total += m2 / n;
    }
    Ok(total / np as f64)
}

/// Loads `agent_00000.mlp`, `agent_00001.mlp`, ... until the first gap.
pub fn load_agent_models(dir: &Path) -> Result<Vec<Mlp>> {
    let mut out = Vec::new();
    loop {
        let p = dir.join(agent_model_name(out.len()));
        if !p.exists() {
            break;
        }
        out.push(Mlp::load(&p)?);
    }
    if out.is_empty() {
        return Err(Error::MissingInput(dir.join(agent_model_name(0))));
    }
    Ok(out)
}

pub fn load_probes(path: &Path) -> Result<Vec<Vec<f64>>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.deserialize::<Vec<f64>>() {
        out.push(rec?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn mat(rows: &[&[f64]]) -> ActivationMatrix {
        ActivationMatrix::new(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn columns_are_centered() {
        let m = mat(&[&[1.0, 5.0], &[3.0, 7.0]]);
        assert_eq!(m.get(0, 0), -1.0);
        assert_eq!(m.get(1, 1), 1.0);
    }

    #[test]
    fn single_row_rejected() {
        assert!(ActivationMatrix::new(&[vec![1.0]]).is_err());
    }

    #[test]
    fn self_similarity_and_scale() {
        let x = mat(&[&[1.0, 2.0], &[0.0, 1.0], &[3.0, -1.0]]);
        let y = mat(&[&[-3.0, -6.0], &[0.0, -3.0], &[-9.0, 3.0]]);
        assert!((linear_cka(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((linear_cka(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_representation_gives_zero() {
        let x = mat(&[&[1.0], &[1.0]]);
        let y = mat(&[&[1.0], &[2.0]]);
        assert_eq!(linear_cka(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn row_mismatch_is_error() {
        let x = mat(&[&[1.0], &[2.0]]);
        let y = mat(&[&[1.0], &[2.0], &[3.0]]);
        assert!(linear_cka(&x, &y).is_err());
    }

    #[test]
    fn full_tier_of_opposites_is_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a = Mlp::he_init(&[3, 4, 5], &mut rng);
        let mut b = a.clone();
        let neg: Vec<f64> = a.params().iter().map(|v| -v).collect();
        b.set_params(&neg).unwrap();
        let layout = crate::topology::NodeLayout {
            num_planes: 1,
            sats_per_plane: 2,
            num_gateways: 0,
        };
        let snap = TopologySnapshot::from_edges(0.0, layout, vec![Default::default(); 2], vec![]);
        let out = aggregate(&[a, b], AggregationTier::FullConstellation, &snap).unwrap();
        assert!(out.iter().all(|m| m.params().iter().all(|&v| v == 0.0)));
        assert_eq!(parameter_variance(&out).unwrap(), 0.0);
    }
}
