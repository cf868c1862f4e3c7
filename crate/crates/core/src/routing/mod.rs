//! Routing policies. The engine asks a policy for the next hop each time a
//! satellite serves its head-of-line packet, and reports hop outcomes back so
//! learning policies can update.

pub mod classic;
pub mod madrl;
pub mod mlp;
pub mod qrouting;
pub mod replay;
pub mod state;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{Nanos, Packet, TxQueue};
use crate::error::{Error, Result};
use crate::topology::{NodeId, Port, TopologySnapshot};

pub use classic::{shortest_paths, RouteTable, ShortestPathPolicy, WeightScheme};
pub use madrl::{ddqn_target, DqnConfig, MadrlPhase, MadrlPolicy};
pub use mlp::Mlp;
pub use qrouting::{q_route_select, q_update, QRoutingConfig, QRoutingPolicy, QTable};

/// A satellite's routing choice: which antenna port to transmit on.
pub type Action = Port;

/// Read-only state of the network handed to a policy.
pub struct NetworkView<'a> {
    pub snapshot: &'a TopologySnapshot,
    pub queues: &'a [TxQueue],
    pub now: Nanos,
}

impl NetworkView<'_> {
    pub fn queue_len(&self, node: NodeId) -> usize {
        self.queues[node.0].len()
    }

    pub fn queue_fill(&self, node: NodeId) -> f64 {
        let q = &self.queues[node.0];
        if q.capacity == 0 {
            1.0
        } else {
            (q.len() as f64 / q.capacity as f64).min(1.0)
        }
    }

    /// Ports of satellite `node` usable for a packet headed to `dst_gw`.
    ///
    /// ISL ports need a link with positive rate. The ground port is valid only
    /// when it leads to the destination gateway itself.
    pub fn valid_ports(&self, node: NodeId, dst_gw: usize) -> [bool; Port::COUNT] {
        let mut valid = [false; Port::COUNT];
        for port in Port::ALL {
            if let Some(e) = self.snapshot.port_edge(node, port) {
                let ok = e.rate_from(node) > 0.0
                    && match port {
                        Port::DownToGateway => self.snapshot.layout.gateway_index(e.other(node)) == Some(dst_gw),
                        _ => true,
                    };
                valid[port.index()] = ok;
            }
        }
        valid
    }

    pub fn port_neighbor(&self, node: NodeId, port: Port) -> Option<NodeId> {
        self.snapshot.port_edge(node, port).map(|e| e.other(node))
    }
}

/// ε-greedy exploration rate, decaying linearly from `start` to `end` over
/// `horizon` decisions and constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub horizon: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 1.0,
            end: 0.05,
            horizon: 20_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn constant(eps: f64) -> Self {
        EpsilonSchedule {
            start: eps,
            end: eps,
            horizon: 0,
        }
    }

    pub fn value(&self, step: u64) -> f64 {
        if self.horizon == 0 || step >= self.horizon {
            return self.end;
        }
        let frac = step as f64 / self.horizon as f64;
        self.start + (self.end - self.start) * frac
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| (0.0..=1.0).contains(&x);
        if !ok(self.start) || !ok(self.end) {
            return Err(Error::config("learning.epsilon", "start and end must lie in [0, 1]"));
        }
        if self.end > self.start {
            return Err(Error::config("learning.epsilon", "end must not exceed start"));
        }
        Ok(())
    }
}

/// Reward shaping shared by the learning policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardSpec {
    pub delivery_bonus: f64,
    /// Multiplier on the measured one-hop latency in seconds (subtracted).
    pub hop_cost: f64,
    pub drop_penalty: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            delivery_bonus: 2.0,
            hop_cost: 1.0,
            drop_penalty: -2.0,
        }
    }
}

impl RewardSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delivery_bonus > 0.0 && self.drop_penalty < 0.0) {
            return Err(Error::config(
                "learning.reward",
                "delivery_bonus must be positive and drop_penalty negative",
            ));
        }
        if !self.hop_cost.is_finite() || self.hop_cost < 0.0 {
            return Err(Error::config(
                "learning.reward.hop_cost",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }

    /// Reward for a hop of `latency` seconds ending in `outcome`.
    pub fn reward(&self, latency: f64, outcome: HopOutcome) -> f64 {
        let base = -self.hop_cost * latency;
        match outcome {
            HopOutcome::Forwarded => base,
            HopOutcome::Delivered => base + self.delivery_bonus,
            HopOutcome::Dropped => base + self.drop_penalty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopOutcome {
    Forwarded,
    Delivered,
    Dropped,
}

/// Training traces kept by learning policies.
#[derive(Debug, Clone, Default)]
pub struct LearningLog {
    /// (experience index, simulation time in seconds, reward)
    pub rewards: Vec<(u64, f64, f64)>,
    /// (decision index, simulation time in seconds, ε)
    pub epsilon: Vec<(u64, f64, f64)>,
    /// Simulation time (seconds) of each gradient step.
    pub train_steps: Vec<f64>,
}

impl LearningLog {
    pub(crate) fn log_epsilon(&mut self, step: u64, now: Nanos, eps: f64) {
        let changed = self.epsilon.last().is_none_or(|&(_, _, e)| e != eps);
        if step.is_multiple_of(100) || (changed && eps == 0.0) {
            self.epsilon.push((step, crate::engine::nanos_to_secs(now), eps));
        }
    }
}

pub trait RoutingPolicy {
    fn name(&self) -> String;

    fn on_topology_update(&mut self, _view: &NetworkView<'_>) -> Result<()> {
        Ok(())
    }

    /// Next node for the head-of-line packet at satellite `node`; `None` marks
    /// the packet stuck.
    fn select(&mut self, view: &NetworkView<'_>, node: NodeId, packet: &Packet) -> Option<NodeId>;

    /// The packet reached satellite `node` and is about to be queued there.
    /// Returns true when a training step is due.
    fn on_arrival(&mut self, _view: &NetworkView<'_>, _packet: &Packet, _node: NodeId) -> bool {
        false
    }

    fn on_delivered(&mut self, _view: &NetworkView<'_>, _packet: &Packet) -> bool {
        false
    }

    fn on_dropped(&mut self, _view: &NetworkView<'_>, _packet: &Packet, _node: NodeId) -> bool {
        false
    }

    fn on_stuck(&mut self, _packet: &Packet) {}

    fn train_step(&mut self, _now: Nanos) -> Result<()> {
        Ok(())
    }

    fn route_table(&self) -> Option<&RouteTable> {
        None
    }

    fn learning_log(&self) -> Option<&LearningLog> {
        None
    }

    /// Persists learned state under `dir`, returning the written files.
    fn save(&self, _dir: &Path) -> Result<Vec<PathBuf>> {
        Ok(Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_schedule_is_non_increasing() {
        let s = EpsilonSchedule {
            start: 1.0,
            end: 0.05,
            horizon: 1000,
        };
        let mut prev = f64::INFINITY;
        for step in (0..3000).step_by(7) {
            let e = s.value(step);
            assert!(e <= prev);
            prev = e;
        }
        assert_eq!(s.value(0), 1.0);
        assert_eq!(s.value(5000), 0.05);
        assert_eq!(EpsilonSchedule::constant(0.0).value(0), 0.0);
    }

    #[test]
    fn reward_ordering() {
        let r = RewardSpec::default();
        assert!(r.reward(0.01, HopOutcome::Delivered) > r.reward(0.01, HopOutcome::Forwarded));
        assert!(r.reward(0.01, HopOutcome::Forwarded) > r.reward(0.01, HopOutcome::Dropped));
        assert!(RewardSpec { drop_penalty: 1.0, ..r }.validate().is_err());
    }
}
