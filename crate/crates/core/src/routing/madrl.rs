//! Multi-agent deep Q-learning with double-DQN targets.
//!
//! Offline, every satellite queries and trains one shared network. Online,
//! each satellite owns a copy and trains it on its own traffic only.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, Sample};
use super::replay::{Experience, ReplayBuffer};
use super::state::{effective_mask, StateEncoder, STATE_DIM};
use super::{EpsilonSchedule, HopOutcome, LearningLog, NetworkView, RewardSpec, RoutingPolicy};
use crate::engine::{nanos_to_secs, Nanos, Packet, PacketId};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::topology::{NodeId, NodeLayout, Port};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MadrlPhase {
    Offline,
    Online,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient steps between target-network synchronizations.
    pub target_sync: u64,
    /// New experiences per agent between gradient steps.
    pub train_every: u64,
    pub double_dqn: bool,
    /// Global gradient-norm clip; 0 disables.
    pub max_grad_norm: f64,
    pub epsilon: EpsilonSchedule,
    pub reward: RewardSpec,
    /// Size of the probe-state reservoir kept for similarity analysis.
    pub probe_count: usize,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            hidden: vec![64, 64],
            learning_rate: 1e-3,
            gamma: 0.99,
            batch_size: 32,
            buffer_capacity: 10_000,
            target_sync: 500,
            train_every: 32,
            double_dqn: true,
            max_grad_norm: 10.0,
            epsilon: EpsilonSchedule::default(),
            reward: RewardSpec::default(),
            probe_count: 512,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config(
                "learning.hidden",
                "need at least one non-empty hidden layer",
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(
                "learning.learning_rate",
                "must be finite and non-negative",
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("learning.gamma", "must lie in [0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("learning.batch_size", "must be positive"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::config("learning.buffer_capacity", "must be at least batch_size"));
        }
        if self.target_sync == 0 || self.train_every == 0 {
            return Err(Error::config(
                "learning.target_sync",
                "target_sync and train_every must be positive",
            ));
        }
        self.epsilon.validate()?;
        self.reward.validate()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![STATE_DIM];
        s.extend_from_slice(&self.hidden);
        s.push(Port::COUNT);
        s
    }
}

fn argmax_masked(q: &[f64], mask: &[bool; Port::COUNT]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for a in 0..Port::COUNT {
        if mask[a] && best.is_none_or(|b| q[a] > q[b]) {
            best = Some(a);
        }
    }
    best
}

/// Bootstrapped regression target for `e`.
///
/// Double DQN evaluates the online network's choice with the target network;
/// plain DQN takes the target network's own maximum.
pub fn ddqn_target(online: &Mlp, target: &Mlp, e: &Experience, gamma: f64, double: bool) -> Result<f64> {
    if e.terminal {
        return Ok(e.reward);
    }
    let qt = target.forward(&e.next_state)?;
    let choice = if double {
        let qo = online.forward(&e.next_state)?;
        argmax_masked(&qo, &e.next_valid)
    } else {
        argmax_masked(&qt, &e.next_valid)
    };
    Ok(match choice {
        Some(a) => e.reward + gamma * qt[a],
        None => e.reward,
    })
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub online: Mlp,
    pub target: Mlp,
    pub buffer: ReplayBuffer,
    pub train_steps: u64,
    fresh: u64,
}

impl Agent {
    fn new(model: Mlp, capacity: usize) -> Self {
        Agent {
            target: model.clone(),
            online: model,
            buffer: ReplayBuffer::new(capacity),
            train_steps: 0,
            fresh: 0,
        }
    }
}

struct Pending {
    agent: usize,
    state: Vec<f64>,
    action: usize,
}

pub struct MadrlPolicy {
    pub cfg: DqnConfig,
    pub phase: MadrlPhase,
    layout: NodeLayout,
    agents: Vec<Agent>,
    encoder: StateEncoder,
    pending: HashMap<PacketId, Pending>,
    due: BTreeSet<usize>,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    probe_rng: ChaCha8Rng,
    probes: Vec<Vec<f64>>,
    probes_seen: u64,
    decisions: u64,
    experiences: u64,
    log: LearningLog,
}

impl MadrlPolicy {
    /// Fresh He-initialized network(s). Online agents all start from the same draw.
    pub fn new(cfg: DqnConfig, phase: MadrlPhase, layout: NodeLayout, seed: u64) -> Self {
        let mut init_rng = substream(seed, Stream::Init, 0);
        let model = Mlp::he_init(&cfg.layer_sizes(), &mut init_rng);
        if phase == MadrlPhase::Online {
            log::warn!("online phase started without a pre-trained model; using random initialization");
        }
        Self::from_model(cfg, phase, layout, model, seed)
    }

    /// Starts every agent from `model`.
    pub fn from_model(cfg: DqnConfig, phase: MadrlPhase, layout: NodeLayout, model: Mlp, seed: u64) -> Self {
        let n = match phase {
            MadrlPhase::Offline => 1,
            MadrlPhase::Online => layout.num_sats(),
        };
        Self::from_models(cfg, phase, layout, vec![model; n], seed).expect("uniform models")
    }

    /// One model for offline, one per satellite for online.
    pub fn from_models(
        cfg: DqnConfig,
        phase: MadrlPhase,
        layout: NodeLayout,
        models: Vec<Mlp>,
        seed: u64,
    ) -> Result<Self> {
        let expected = match phase {
            MadrlPhase::Offline => 1,
            MadrlPhase::Online => layout.num_sats(),
        };
        if models.len() != expected {
            return Err(Error::Incompatible(format!(
                "{phase:?} phase needs {expected} models, got {}",
                models.len()
            )));
        }
        let sizes = cfg.layer_sizes();
        if let Some(m) = models.iter().find(|m| m.sizes() != sizes.as_slice()) {
            return Err(Error::Incompatible(format!(
                "model layers {:?} do not match configured {:?}",
                m.sizes(),
                sizes
            )));
        }
        let agents = models.into_iter().map(|m| Agent::new(m, cfg.buffer_capacity)).collect();
        Ok(MadrlPolicy {
            phase,
            layout,
            agents,
            encoder: StateEncoder::default(),
            pending: HashMap::new(),
            due: BTreeSet::new(),
            explore_rng: substream(seed, Stream::Exploration, 0),
            replay_rng: substream(seed, Stream::Replay, 0),
            probe_rng: substream(seed, Stream::Probe, 0),
            probes: Vec::new(),
            probes_seen: 0,
            decisions: 0,
            experiences: 0,
            log: LearningLog::default(),
            cfg,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    fn agent_of(&self, node: NodeId) -> usize {
        match self.phase {
            MadrlPhase::Offline => 0,
            MadrlPhase::Online => node.0,
        }
    }

    pub fn model_for(&self, node: NodeId) -> &Mlp {
        &self.agents[self.agent_of(node)].online
    }

    /// Probe states gathered by reservoir sampling over every decision.
    pub fn probe_states(&self) -> &[Vec<f64>] {
        &self.probes
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    fn training_enabled(&self) -> bool {
        self.cfg.learning_rate > 0.0
    }

    fn record_probe(&mut self, state: &[f64]) {
        let k = self.cfg.probe_count;
        if k == 0 {
            return;
        }
        self.probes_seen += 1;
        if self.probes.len() < k {
            self.probes.push(state.to_vec());
        } else {
            let j = self.probe_rng.random_range(0..self.probes_seen);
            if (j as usize) < k {
                self.probes[j as usize] = state.to_vec();
            }
        }
    }

    fn remember(
        &mut self,
        view: &NetworkView<'_>,
        packet: &Packet,
        outcome: HopOutcome,
        next: Option<(Vec<f64>, [bool; Port::COUNT])>,
    ) -> bool {
        let Some(p) = self.pending.remove(&packet.id) else {
            return false;
        };
        let reward = self.cfg.reward.reward(packet.last_hop_latency(), outcome);
        let (next_state, next_valid, terminal) = match next {
            Some((s, v)) => (s, v, false),
            None => (vec![0.0; STATE_DIM], [false; Port::COUNT], true),
        };
        self.log
            .rewards
            .push((self.experiences, nanos_to_secs(view.now), reward));
        self.experiences += 1;
        if !self.training_enabled() {
            return false;
        }
        let agent = &mut self.agents[p.agent];
        agent.buffer.push(Experience {
            state: p.state,
            action: p.action,
            reward,
            next_state,
            next_valid,
            terminal,
        });
        agent.fresh += 1;
        if agent.fresh >= self.cfg.train_every {
            agent.fresh = 0;
            self.due.insert(p.agent);
            return true;
        }
        false
    }

    fn train_agent(&mut self, idx: usize) -> Result<()> {
        let cfg = &self.cfg;
        let agent = &mut self.agents[idx];
        if agent.buffer.len() < cfg.batch_size {
            return Ok(());
        }
        let batch = agent.buffer.sample(cfg.batch_size, &mut self.replay_rng);
        let mut targets = Vec::with_capacity(batch.len());
        for e in &batch {
            targets.push(ddqn_target(&agent.online, &agent.target, e, cfg.gamma, cfg.double_dqn)?);
        }
        let samples: Vec<Sample<'_>> = batch
            .iter()
            .zip(&targets)
            .map(|(e, &t)| Sample {
                input: &e.state,
                action: e.action,
                target: t,
            })
            .collect();
        let (_, mut grad) = agent.online.backward(&samples)?;
        if cfg.max_grad_norm > 0.0 {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > cfg.max_grad_norm {
                let s = cfg.max_grad_norm / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
        }
        agent.online.sgd_step(&grad, cfg.learning_rate)?;
        agent.train_steps += 1;
        if agent.train_steps.is_multiple_of(cfg.target_sync) {
            agent.target = agent.online.clone();
        }
        Ok(())
    }

    /// Writes the probe reservoir as CSV with columns `s0..s{d-1}`.
    pub fn write_probes(&self, out: &mut impl Write) -> std::io::Result<()> {
        let header: Vec<String> = (0..STATE_DIM).map(|i| format!("s{i}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for p in &self.probes {
            let row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// File name used for agent `i`'s model in an online-phase model directory.
pub fn agent_model_name(i: usize) -> String {
    format!("agent_{i:05}.mlp")
}

pub const GLOBAL_MODEL_NAME: &str = "global.mlp";
pub const PROBES_NAME: &str = "probe_states.csv";

impl RoutingPolicy for MadrlPolicy {
    fn name(&self) -> String {
        match self.phase {
            MadrlPhase::Offline => "madrl-offline".into(),
            MadrlPhase::Online => "madrl-online".into(),
        }
    }

    fn on_topology_update(&mut self, view: &NetworkView<'_>) -> Result<()> {
        self.encoder = StateEncoder::from_snapshot(view.snapshot);
        Ok(())
    }

    fn select(&mut self, view: &NetworkView<'_>, node: NodeId, packet: &Packet) -> Option<NodeId> {
        let (state, valid) = self.encoder.encode(view, node, packet.dst_gw);
        let mask = effective_mask(valid);
        if !mask.iter().any(|&m| m) {
            return None;
        }
        let eps = self.cfg.epsilon.value(self.decisions);
        self.log.log_epsilon(self.decisions, view.now, eps);
        self.decisions += 1;
        self.record_probe(&state);
        let agent = self.agent_of(node);
        let action = if eps > 0.0 && self.explore_rng.random::<f64>() < eps {
            let cands: Vec<usize> = (0..Port::COUNT).filter(|&a| mask[a]).collect();
            cands[self.explore_rng.random_range(0..cands.len())]
        } else {
            let q = self.agents[agent]
                .online
                .forward(&state)
                .expect("state dimension matches network input");
            argmax_masked(&q, &mask).expect("mask non-empty")
        };
        debug_assert!(mask[action], "selected a masked action");
        self.pending.insert(packet.id, Pending { agent, state, action });
        view.port_neighbor(node, Port::from_index(action).expect("action index"))
    }

    fn on_arrival(&mut self, view: &NetworkView<'_>, packet: &Packet, node: NodeId) -> bool {
        if !self.pending.contains_key(&packet.id) {
            return false;
        }
        let (s, valid) = self.encoder.encode(view, node, packet.dst_gw);
        self.remember(view, packet, HopOutcome::Forwarded, Some((s, effective_mask(valid))))
    }

    fn on_delivered(&mut self, view: &NetworkView<'_>, packet: &Packet) -> bool {
        self.remember(view, packet, HopOutcome::Delivered, None)
    }

    fn on_dropped(&mut self, view: &NetworkView<'_>, packet: &Packet, _node: NodeId) -> bool {
        self.remember(view, packet, HopOutcome::Dropped, None)
    }

    fn on_stuck(&mut self, packet: &Packet) {
        self.pending.remove(&packet.id);
    }

    fn train_step(&mut self, now: Nanos) -> Result<()> {
        let due: Vec<usize> = std::mem::take(&mut self.due).into_iter().collect();
        for idx in due {
            let before = self.agents[idx].train_steps;
            self.train_agent(idx)?;
            if self.agents[idx].train_steps > before {
                self.log.train_steps.push(nanos_to_secs(now));
            }
        }
        Ok(())
    }

    fn learning_log(&self) -> Option<&LearningLog> {
        Some(&self.log)
    }

    fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        match self.phase {
            MadrlPhase::Offline => {
                let p = dir.join(GLOBAL_MODEL_NAME);
                self.agents[0].online.save(&p)?;
                out.push(p);
            }
            MadrlPhase::Online => {
                for (i, a) in self.agents.iter().enumerate() {
                    let p = dir.join(agent_model_name(i));
                    a.online.save(&p)?;
                    out.push(p);
                }
            }
        }
        let p = dir.join(PROBES_NAME);
        let mut buf = Vec::new();
        self.write_probes(&mut buf).map_err(|e| Error::io(&p, e))?;
        std::fs::write(&p, buf).map_err(|e| Error::io(&p, e))?;
        out.push(p);
        debug_assert!(self.layout.num_sats() >= self.agents.len());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_action_net(q: [f64; 2]) -> Mlp {
        // 1 input -> 1 hidden -> 5 outputs; outputs are the biases
        let mut m = Mlp::zeros(&[1, 1, Port::COUNT]);
        m.biases_mut(1)[0] = q[0];
        m.biases_mut(1)[1] = q[1];
        m.biases_mut(1)[2..].fill(-100.0);
        m
    }

    fn exp(terminal: bool) -> Experience {
        Experience {
            state: vec![0.0],
            action: 0,
            reward: 0.5,
            next_state: vec![0.0],
            next_valid: [true, true, false, false, false],
            terminal,
        }
    }

    #[test]
    fn terminal_target_is_reward() {
        let m = two_action_net([1.0, 0.0]);
        assert_eq!(ddqn_target(&m, &m, &exp(true), 0.9, true).unwrap(), 0.5);
    }

    #[test]
    fn double_and_plain_differ_by_known_gap() {
        let online = two_action_net([1.0, 0.0]);
        let target = two_action_net([0.0, 1.0]);
        let e = exp(false);
        let gamma = 0.9;
        let ddqn = ddqn_target(&online, &target, &e, gamma, true).unwrap();
        let dqn = ddqn_target(&online, &target, &e, gamma, false).unwrap();
        assert_eq!(ddqn, 0.5);
        assert_eq!(dqn, 0.5 + gamma);
    }

    #[test]
    fn identical_nets_make_double_equal_plain() {
        let m = two_action_net([0.3, 0.7]);
        let e = exp(false);
        assert_eq!(
            ddqn_target(&m, &m, &e, 0.9, true).unwrap(),
            ddqn_target(&m, &m, &e, 0.9, false).unwrap()
        );
    }

    #[test]
    fn config_validation_names_fields() {
        let mut c = DqnConfig::default();
        assert!(c.validate().is_ok());
        c.batch_size = 0;
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "learning.batch_size"),
            other => panic!("{other:?}"),
        }
    }
}
