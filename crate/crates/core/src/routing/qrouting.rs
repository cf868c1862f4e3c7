//! Tabular Q-Routing: each satellite keeps an expected cost-to-go per
//! (destination gateway, port) and learns from one-hop feedback.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::effective_mask;
use super::{EpsilonSchedule, HopOutcome, LearningLog, NetworkView, RewardSpec, RoutingPolicy};
use crate::engine::{nanos_to_secs, Packet, PacketId};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::topology::{NodeId, NodeLayout, Port};

/// Expected cost (seconds-equivalent) indexed by satellite, destination and port.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub num_sats: usize,
    pub num_gateways: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(num_sats: usize, num_gateways: usize) -> Self {
        QTable {
            num_sats,
            num_gateways,
            values: vec![0.0; num_sats * num_gateways * Port::COUNT],
        }
    }

    fn idx(&self, sat: usize, dst: usize, action: usize) -> usize {
        (sat * self.num_gateways + dst) * Port::COUNT + action
    }

    pub fn get(&self, sat: usize, dst: usize, action: usize) -> f64 {
        self.values[self.idx(sat, dst, action)]
    }

    pub fn set(&mut self, sat: usize, dst: usize, action: usize, v: f64) {
        let i = self.idx(sat, dst, action);
        self.values[i] = v;
    }

    pub fn row(&self, sat: usize, dst: usize) -> &[f64] {
        let i = self.idx(sat, dst, 0);
        &self.values[i..i + Port::COUNT]
    }

    /// Lowest cost over the masked actions.
    pub fn min_valid(&self, sat: usize, dst: usize, mask: &[bool; Port::COUNT]) -> Option<f64> {
        self.row(sat, dst)
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| *v)
            .min_by(f64::total_cmp)
    }

    pub const CSV_HEADER: &'static str = "sat_id,dst_gw,action,value";

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for sat in 0..self.num_sats {
            for dst in 0..self.num_gateways {
                for a in 0..Port::COUNT {
                    writeln!(out, "{sat},{dst},{a},{:e}", self.get(sat, dst, a))?;
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    /// Reads a table written by [`QTable::save`]. Every entry must be present.
    pub fn load(path: &Path, num_sats: usize, num_gateways: usize) -> Result<Self> {
        let err = |reason: String| Error::Model {
            path: path.to_path_buf(),
            reason,
        };
        let mut rdr = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        let mut t = QTable::new(num_sats, num_gateways);
        let mut seen = vec![false; t.values.len()];
        for rec in rdr.deserialize::<(usize, usize, usize, f64)>() {
            let (sat, dst, a, v) = rec.map_err(|e| err(e.to_string()))?;
            if sat >= num_sats || dst >= num_gateways || a >= Port::COUNT {
                return Err(err(format!("entry ({sat}, {dst}, {a}) outside table shape")));
            }
            if !v.is_finite() {
                return Err(err(format!("non-finite value at ({sat}, {dst}, {a})")));
            }
            let i = t.idx(sat, dst, a);
            t.values[i] = v;
            seen[i] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(err(format!("missing entry #{missing} (file truncated?)")));
        }
        Ok(t)
    }
}

/// Argmin over valid actions with probability 1 − ε, uniform otherwise.
/// Ties go to the lowest action index. `None` when nothing is valid.
pub fn q_route_select<R: Rng + ?Sized>(
    costs: &[f64],
    valid: &[bool; Port::COUNT],
    epsilon: f64,
    rng: &mut R,
) -> Option<usize> {
    let candidates: Vec<usize> = (0..Port::COUNT).filter(|&a| valid[a]).collect();
    if candidates.is_empty() {
        return None;
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Some(candidates[rng.random_range(0..candidates.len())]);
    }
    let mut best = candidates[0];
    for &a in &candidates[1..] {
        if costs[a] < costs[best] {
            best = a;
        }
    }
    Some(best)
}

/// `Q ← (1−α)Q + α(cost + γ·bootstrap)`; `bootstrap = None` marks a terminal hop.
pub fn q_update(current: f64, cost: f64, bootstrap: Option<f64>, alpha: f64, gamma: f64) -> f64 {
    let target = cost + bootstrap.map_or(0.0, |b| gamma * b);
    (1.0 - alpha) * current + alpha * target
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QRoutingConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub reward: RewardSpec,
}

impl Default for QRoutingConfig {
    fn default() -> Self {
        QRoutingConfig {
            alpha: 0.5,
            gamma: 1.0,
            epsilon: EpsilonSchedule::default(),
            reward: RewardSpec::default(),
        }
    }
}

impl QRoutingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("learning.alpha", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("learning.gamma", "must lie in [0, 1]"));
        }
        self.epsilon.validate()?;
        self.reward.validate()
    }
}

pub struct QRoutingPolicy {
    pub cfg: QRoutingConfig,
    pub table: QTable,
    layout: NodeLayout,
    pending: HashMap<PacketId, (usize, usize)>,
    rng: ChaCha8Rng,
    decisions: u64,
    updates: u64,
    log: LearningLog,
}

impl QRoutingPolicy {
    pub fn new(cfg: QRoutingConfig, layout: NodeLayout, seed: u64) -> Self {
        Self::with_table(cfg, layout, QTable::new(layout.num_sats(), layout.num_gateways), seed)
    }

    /// Starts from a pre-trained table.
    pub fn with_table(cfg: QRoutingConfig, layout: NodeLayout, table: QTable, seed: u64) -> Self {
        assert_eq!(table.num_sats, layout.num_sats());
        assert_eq!(table.num_gateways, layout.num_gateways);
        QRoutingPolicy {
            cfg,
            table,
            layout,
            pending: HashMap::new(),
            rng: substream(seed, Stream::Exploration, 0),
            decisions: 0,
            updates: 0,
            log: LearningLog::default(),
        }
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    fn learn(&mut self, view: &NetworkView<'_>, packet: &Packet, outcome: HopOutcome, bootstrap: Option<f64>) {
        let Some((sat, action)) = self.pending.remove(&packet.id) else {
            return;
        };
        let latency = packet.last_hop_latency();
        let reward = self.cfg.reward.reward(latency, outcome);
        let cost = -reward;
        let old = self.table.get(sat, packet.dst_gw, action);
        let new = q_update(old, cost, bootstrap, self.cfg.alpha, self.cfg.gamma);
        self.table.set(sat, packet.dst_gw, action, new);
        self.log.rewards.push((self.updates, nanos_to_secs(view.now), reward));
        self.updates += 1;
    }
}

impl RoutingPolicy for QRoutingPolicy {
    fn name(&self) -> String {
        "q-routing".into()
    }

    fn select(&mut self, view: &NetworkView<'_>, node: NodeId, packet: &Packet) -> Option<NodeId> {
        let sat = node.0;
        let mask = effective_mask(view.valid_ports(node, packet.dst_gw));
        let eps = self.cfg.epsilon.value(self.decisions);
        self.log.log_epsilon(self.decisions, view.now, eps);
        self.decisions += 1;
        let a = q_route_select(self.table.row(sat, packet.dst_gw), &mask, eps, &mut self.rng)?;
        self.pending.insert(packet.id, (sat, a));
        view.port_neighbor(node, Port::from_index(a).expect("action index"))
    }

    fn on_arrival(&mut self, view: &NetworkView<'_>, packet: &Packet, node: NodeId) -> bool {
        let mask = effective_mask(view.valid_ports(node, packet.dst_gw));
        let boot = self.table.min_valid(node.0, packet.dst_gw, &mask).unwrap_or(0.0);
        self.learn(view, packet, HopOutcome::Forwarded, Some(boot));
        false
    }

    fn on_delivered(&mut self, view: &NetworkView<'_>, packet: &Packet) -> bool {
        self.learn(view, packet, HopOutcome::Delivered, None);
        false
    }

    fn on_dropped(&mut self, view: &NetworkView<'_>, packet: &Packet, _node: NodeId) -> bool {
        self.learn(view, packet, HopOutcome::Dropped, None);
        false
    }

    fn on_stuck(&mut self, packet: &Packet) {
        self.pending.remove(&packet.id);
    }

    fn learning_log(&self) -> Option<&LearningLog> {
        Some(&self.log)
    }

    fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let path = dir.join("qtable.csv");
        self.table.save(&path)?;
        debug_assert_eq!(self.table.num_sats, self.layout.num_sats());
        Ok(vec![path])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn greedy_picks_cheapest() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let costs = [10.0, 1.0, 10.0, 10.0, 10.0];
        let valid = [true; 5];
        for _ in 0..100 {
            assert_eq!(q_route_select(&costs, &valid, 0.0, &mut rng), Some(1));
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let valid = [false, true, true, true, true];
        assert_eq!(q_route_select(&[3.0; 5], &valid, 0.0, &mut rng), Some(1));
        assert_eq!(q_route_select(&[3.0; 5], &[true; 5], 0.0, &mut rng), Some(0));
    }

    #[test]
    fn masked_actions_never_chosen() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let valid = [false, true, false, true, false];
        for _ in 0..1000 {
            let a = q_route_select(&[0.0; 5], &valid, 1.0, &mut rng).unwrap();
            assert!(valid[a]);
        }
        assert_eq!(q_route_select(&[0.0; 5], &[false; 5], 0.5, &mut rng), None);
    }

    #[test]
    fn update_rules() {
        assert_eq!(q_update(3.0, 1.0, Some(5.0), 0.0, 0.9), 3.0);
        assert_eq!(q_update(3.0, 1.25, None, 1.0, 0.9), 1.25);
        assert_eq!(q_update(0.0, 1.0, Some(2.0), 1.0, 0.5), 2.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = QTable::new(3, 2);
        t.set(1, 1, 4, -1.0 / 3.0);
        t.set(2, 0, 0, 1e-9);
        let p = dir.path().join("q.csv");
        t.save(&p).unwrap();
        assert_eq!(QTable::load(&p, 3, 2).unwrap(), t);
        let text = std::fs::read_to_string(&p).unwrap();
        std::fs::write(&p, &text[..text.len() / 2]).unwrap();
        assert!(QTable::load(&p, 3, 2).is_err());
    }
}
