use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::event::{fmt_secs, nanos_to_secs, secs_to_nanos, EventQueue, Nanos};
use super::packet::{Hop, Packet, PacketId, PacketStatus};
use super::queue::TxQueue;
use super::trace::{Trace, TraceMode, TraceRecord};
use super::traffic::{TrafficGenerator, TrafficSpec};
use crate::channel::{propagation_time, ChannelModel};
use crate::error::{Error, Result};
use crate::geo::Vec3;
use crate::orbit::{gateway_position, positions_at, GatewaySite, SatelliteState};
use crate::routing::{NetworkView, RouteTable, RoutingPolicy};
use crate::topology::{NodeId, NodeLayout, TopologyParams, TopologySnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// A flow emits a new packet at its source gateway.
    FlowArrival {
        flow: usize,
    },
    /// A packet finishes propagating to `node`.
    PacketArrival {
        packet: PacketId,
        node: NodeId,
    },
    TxComplete {
        node: NodeId,
    },
    TopologyUpdate,
    TrainStep,
    QueueSample,
    SimEnd,
}

impl EventKind {
    fn code(&self) -> u8 {
        match self {
            EventKind::FlowArrival { .. } => 0,
            EventKind::PacketArrival { .. } => 1,
            EventKind::TxComplete { .. } => 2,
            EventKind::TopologyUpdate => 3,
            EventKind::TrainStep => 4,
            EventKind::QueueSample => 5,
            EventKind::SimEnd => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Simulated seconds.
    pub duration: f64,
    /// Q^max, packets.
    pub queue_capacity: usize,
    /// Seconds between constellation moves; `None` freezes the topology.
    pub update_interval: Option<f64>,
    /// Orbital seconds per simulated second.
    pub time_scale: f64,
    pub ttl_hops: usize,
    /// Seconds between queue-occupancy samples; defaults to the update interval.
    pub queue_sample_interval: Option<f64>,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            duration: 60.0,
            queue_capacity: 100,
            update_interval: Some(15.0),
            time_scale: 1.0,
            ttl_hops: 250,
            queue_sample_interval: None,
            seed: 1,
        }
    }
}

/// Everything physical about a run: where nodes are and how links behave.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub constellation: Vec<SatelliteState>,
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub gateways: Vec<GatewaySite>,
    pub topology: TopologyParams,
    pub channel: ChannelModel,
    pub traffic: TrafficSpec,
}

impl Scenario {
    pub fn layout(&self) -> NodeLayout {
        NodeLayout {
            num_planes: self.num_planes,
            sats_per_plane: self.sats_per_plane,
            num_gateways: self.gateways.len(),
        }
    }

    pub fn gateway_positions(&self) -> Vec<Vec3> {
        self.gateways.iter().map(gateway_position).collect()
    }

    /// Snapshot with rates at orbital epoch `epoch`.
    pub fn snapshot_at(&self, epoch: f64) -> TopologySnapshot {
        let states = positions_at(&self.constellation, epoch);
        let mut snap =
            TopologySnapshot::build(epoch, self.layout(), &states, &self.gateway_positions(), &self.topology);
        self.channel.assign_rates(&mut snap);
        snap
    }
}

/// Receives simulation output as it is produced.
pub trait Recorder {
    fn on_packet_finished(&mut self, _layout: &NodeLayout, _packet: &Packet) -> Result<()> {
        Ok(())
    }

    /// Called for the initial build (`rebuild == 0`) and every rebuild after it.
    fn on_topology(&mut self, _snapshot: &TopologySnapshot, _rebuild: u64) -> Result<()> {
        Ok(())
    }

    fn on_routes(&mut self, _table: &RouteTable) -> Result<()> {
        Ok(())
    }

    fn on_queue_sample(&mut self, _time: Nanos, _queues: &[TxQueue]) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default)]
pub struct NullRecorder;

impl Recorder for NullRecorder {}

/// Keeps finished packets in memory. Intended for tests and small runs.
#[derive(Debug, Default)]
pub struct MemoryRecorder {
    pub packets: Vec<Packet>,
    pub snapshots: Vec<TopologySnapshot>,
    pub keep_snapshots: bool,
    pub queue_samples: Vec<(Nanos, Vec<usize>)>,
}

impl Recorder for MemoryRecorder {
    fn on_packet_finished(&mut self, _layout: &NodeLayout, packet: &Packet) -> Result<()> {
        self.packets.push(packet.clone());
        Ok(())
    }

    fn on_topology(&mut self, snapshot: &TopologySnapshot, _rebuild: u64) -> Result<()> {
        if self.keep_snapshots {
            self.snapshots.push(snapshot.clone());
        }
        Ok(())
    }

    fn on_queue_sample(&mut self, time: Nanos, queues: &[TxQueue]) -> Result<()> {
        self.queue_samples
            .push((time, queues.iter().map(TxQueue::len).collect()));
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub created: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub stuck: u64,
    pub in_flight: u64,
}

impl Counts {
    pub fn balanced(&self) -> bool {
        self.created == self.delivered + self.dropped + self.stuck + self.in_flight
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub counts: Counts,
    /// Sums over delivered packets, nanoseconds.
    pub sum_e2e: u128,
    pub sum_queue: u128,
    pub sum_tx: u128,
    pub sum_prop: u128,
    pub sum_hops_delivered: u64,
    /// Undirected link traversals, keyed by `(min, max)` node id.
    pub link_usage: HashMap<(NodeId, NodeId), u64>,
    pub rebuilds: u64,
    pub events: u64,
    pub max_occupancy: usize,
}

impl RunStats {
    pub fn mean_secs(&self, sum: u128) -> f64 {
        if self.counts.delivered == 0 {
            0.0
        } else {
            sum as f64 * 1e-9 / self.counts.delivered as f64
        }
    }

    /// Links ordered by traversal count, ties by node ids.
    pub fn top_links(&self, n: usize) -> Vec<((NodeId, NodeId), u64)> {
        let mut v: Vec<_> = self.link_usage.iter().map(|(k, c)| (*k, *c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v.truncate(n);
        v
    }
}

/// Result of a completed run.
pub struct SimOutput<R> {
    pub stats: RunStats,
    pub trace_digest: String,
    pub trace: Trace,
    pub policy: Box<dyn RoutingPolicy>,
    pub recorder: R,
    pub final_snapshot: TopologySnapshot,
}

pub struct Simulator<R: Recorder> {
    cfg: EngineConfig,
    scenario: Scenario,
    layout: NodeLayout,
    gateway_positions: Vec<Vec3>,
    snapshot: TopologySnapshot,
    events: EventQueue<EventKind>,
    queues: Vec<TxQueue>,
    packets: HashMap<PacketId, Packet>,
    traffic: TrafficGenerator,
    policy: Box<dyn RoutingPolicy>,
    recorder: R,
    trace: Trace,
    stats: RunStats,
    next_packet: PacketId,
    end: Nanos,
    train_scheduled: bool,
}

impl<R: Recorder> Simulator<R> {
    pub fn new(
        scenario: Scenario,
        cfg: EngineConfig,
        policy: Box<dyn RoutingPolicy>,
        recorder: R,
        trace_mode: TraceMode,
    ) -> Result<Self> {
        if !(cfg.duration >= 0.0 && cfg.duration.is_finite()) {
            return Err(Error::config("duration_s", "must be a non-negative finite number"));
        }
        if let Some(i) = cfg.update_interval {
            if !(i > 0.0 && i.is_finite()) {
                return Err(Error::config("engine.update_interval_s", "must be positive"));
            }
        }
        let layout = scenario.layout();
        let gateway_positions = scenario.gateway_positions();
        let snapshot = scenario.snapshot_at(0.0);
        crate::topology::assert_valid(&snapshot)?;

        let min_uplink = scenario
            .traffic
            .active_gateways
            .iter()
            .filter_map(|&g| snapshot.gateway_edge(g).map(|e| e.rate_reverse))
            .filter(|&r| r > 0.0)
            .fold(f64::INFINITY, f64::min);
        let min_uplink = if min_uplink.is_finite() { min_uplink } else { 0.0 };
        let traffic = TrafficGenerator::new(&scenario.traffic, min_uplink, cfg.seed);

        let queues = (0..layout.num_nodes())
            .map(|i| TxQueue::new(NodeId(i), cfg.queue_capacity))
            .collect();
        let end = secs_to_nanos(cfg.duration);
        let mut sim = Simulator {
            cfg,
            scenario,
            layout,
            gateway_positions,
            snapshot,
            events: EventQueue::new(),
            queues,
            packets: HashMap::new(),
            traffic,
            policy,
            recorder,
            trace: Trace::new(trace_mode),
            stats: RunStats::default(),
            next_packet: 0,
            end,
            train_scheduled: false,
        };
        sim.after_topology_change(0)?;

        for flow in 0..sim.traffic.flows.len() {
            sim.schedule_flow(flow, 0)?;
        }
        if let Some(interval) = sim.cfg.update_interval {
            let t = secs_to_nanos(interval);
            if t <= sim.end {
                sim.events.schedule(t, EventKind::TopologyUpdate)?;
            }
        }
        sim.recorder.on_queue_sample(0, &sim.queues)?;
        if let Some(t) = sim.sample_interval().filter(|&t| t <= sim.end) {
            sim.events.schedule(t, EventKind::QueueSample)?;
        }
        sim.events.schedule(sim.end, EventKind::SimEnd)?;
        Ok(sim)
    }

    /// Per-flow Poisson rate in packets per second.
    pub fn flow_rate(&self) -> f64 {
        self.traffic.rate
    }

    pub fn layout(&self) -> NodeLayout {
        self.layout
    }

    pub fn snapshot(&self) -> &TopologySnapshot {
        &self.snapshot
    }

    pub fn now(&self) -> Nanos {
        self.events.now()
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    fn sample_interval(&self) -> Option<Nanos> {
        self.cfg
            .queue_sample_interval
            .or(self.cfg.update_interval)
            .map(secs_to_nanos)
            .filter(|&t| t > 0)
    }

    fn fault(&self, reason: impl Into<String>) -> Error {
        Error::Fault {
            time_s: nanos_to_secs(self.events.now()),
            reason: reason.into(),
        }
    }

    fn schedule_flow(&mut self, flow: usize, from: Nanos) -> Result<()> {
        if let Some(dt) = self.traffic.next_interarrival(flow) {
            let t = from.saturating_add(secs_to_nanos(dt).max(1));
            if t <= self.end {
                self.events.schedule(t, EventKind::FlowArrival { flow })?;
            }
        }
        Ok(())
    }

    /// Executes every event up to the configured duration.
    pub fn run(&mut self) -> Result<()> {
        self.run_until(self.end)
    }

    pub fn run_until(&mut self, t_end: Nanos) -> Result<()> {
        if t_end < self.events.now() {
            return Err(self.fault("run_until target precedes the clock"));
        }
        while let Some(ev) = self.events.pop_until(t_end.min(self.end)) {
            self.stats.events += 1;
            self.trace.push(TraceRecord::Event {
                time: ev.time,
                seq: ev.seq,
                code: ev.kind.code(),
            });
            match ev.kind {
                EventKind::FlowArrival { flow } => self.on_flow_arrival(flow)?,
                EventKind::PacketArrival { packet, node } => self.on_packet_arrival(packet, node)?,
                EventKind::TxComplete { node } => {
                    self.queues[node.0].busy_until = None;
                    self.serve(node)?;
                }
                EventKind::TopologyUpdate => self.on_topology_update()?,
                EventKind::TrainStep => {
                    self.train_scheduled = false;
                    let now = self.events.now();
                    self.policy.train_step(now)?;
                }
                EventKind::QueueSample => {
                    let now = self.events.now();
                    self.recorder.on_queue_sample(now, &self.queues)?;
                    if let Some(dt) = self.sample_interval() {
                        if now + dt <= self.end {
                            self.events.schedule(now + dt, EventKind::QueueSample)?;
                        }
                    }
                }
                EventKind::SimEnd => {}
            }
        }
        Ok(())
    }

    fn on_flow_arrival(&mut self, flow: usize) -> Result<()> {
        let now = self.events.now();
        let f = self.traffic.flows[flow];
        let id = self.next_packet;
        self.next_packet += 1;
        let node = self.layout.gateway(f.src_gw);
        let packet = Packet {
            id,
            src_gw: f.src_gw,
            dst_gw: f.dst_gw,
            size_bits: self.scenario.traffic.packet_bits,
            created_at: now,
            delivered_at: None,
            path: vec![Hop {
                node,
                arrival: now,
                queue: 0,
                tx: 0,
                prop: 0,
            }],
            status: PacketStatus::InFlight,
        };
        self.stats.counts.created += 1;
        self.trace.push(TraceRecord::Created {
            time: now,
            packet: id,
            node,
        });
        self.packets.insert(id, packet);
        self.enqueue(node, id)?;
        self.schedule_flow(flow, now)
    }

    fn on_packet_arrival(&mut self, id: PacketId, node: NodeId) -> Result<()> {
        let now = self.events.now();
        let packet = self.packets.get_mut(&id).ok_or_else(|| Error::Fault {
            time_s: nanos_to_secs(now),
            reason: format!("arrival of unknown packet {id}"),
        })?;
        let prev = packet.current_node();
        packet.path.push(Hop {
            node,
            arrival: now,
            queue: 0,
            tx: 0,
            prop: 0,
        });
        *self
            .stats
            .link_usage
            .entry((prev.min(node), prev.max(node)))
            .or_insert(0) += 1;

        if self.layout.gateway(packet.dst_gw) == node {
            packet.status = PacketStatus::Delivered;
            packet.delivered_at = Some(now);
            let (q, tx, prop) = packet.components();
            let e2e = now - packet.created_at;
            if q + tx + prop != e2e {
                return Err(self.fault(format!("packet {id} latency terms do not sum to E2E")));
            }
            self.stats.counts.delivered += 1;
            self.stats.sum_e2e += e2e as u128;
            self.stats.sum_queue += q as u128;
            self.stats.sum_tx += tx as u128;
            self.stats.sum_prop += prop as u128;
            self.stats.sum_hops_delivered += packet.hops() as u64;
            self.trace.push(TraceRecord::Delivered { time: now, packet: id });
            let packet = self.packets.remove(&id).expect("present");
            let due = {
                let view = NetworkView {
                    snapshot: &self.snapshot,
                    queues: &self.queues,
                    now,
                };
                self.policy.on_delivered(&view, &packet)
            };
            self.maybe_schedule_training(due)?;
            return self.recorder.on_packet_finished(&self.layout, &packet);
        }
        if self.layout.is_gateway(node) {
            return Err(self.fault(format!("packet {id} routed into non-destination gateway {node}")));
        }
        self.enqueue(node, id)
    }

    fn enqueue(&mut self, node: NodeId, id: PacketId) -> Result<()> {
        let now = self.events.now();
        if self.queues[node.0].is_full() {
            let mut packet = self.packets.remove(&id).expect("queued packet exists");
            packet.status = PacketStatus::Dropped;
            self.stats.counts.dropped += 1;
            self.trace.push(TraceRecord::Dropped {
                time: now,
                node,
                packet: id,
            });
            let due = {
                let view = NetworkView {
                    snapshot: &self.snapshot,
                    queues: &self.queues,
                    now,
                };
                self.policy.on_dropped(&view, &packet, node)
            };
            self.maybe_schedule_training(due)?;
            return self.recorder.on_packet_finished(&self.layout, &packet);
        }
        if self.layout.sat_id(node).is_some() {
            let due = {
                let packet = &self.packets[&id];
                let view = NetworkView {
                    snapshot: &self.snapshot,
                    queues: &self.queues,
                    now,
                };
                self.policy.on_arrival(&view, packet, node)
            };
            self.maybe_schedule_training(due)?;
        }
        let q = &mut self.queues[node.0];
        q.push(id, now);
        self.stats.max_occupancy = self.stats.max_occupancy.max(q.len());
        self.trace.push(TraceRecord::Enqueue {
            time: now,
            node,
            packet: id,
        });
        if !self.queues[node.0].is_busy() {
            self.serve(node)?;
        }
        Ok(())
    }

    fn mark_stuck(&mut self, node: NodeId, id: PacketId) -> Result<()> {
        let now = self.events.now();
        let mut packet = self.packets.remove(&id).expect("served packet exists");
        packet.status = PacketStatus::Stuck;
        self.stats.counts.stuck += 1;
        self.trace.push(TraceRecord::Stuck {
            time: now,
            node,
            packet: id,
        });
        self.policy.on_stuck(&packet);
        self.recorder.on_packet_finished(&self.layout, &packet)
    }

    /// Starts transmitting the head-of-line packet at an idle node.
    fn serve(&mut self, node: NodeId) -> Result<()> {
        let now = self.events.now();
        debug_assert!(!self.queues[node.0].is_busy());
        while let Some((id, ready)) = self.queues[node.0].pop() {
            let hops = self.packets[&id].hops();
            if hops >= self.cfg.ttl_hops {
                self.mark_stuck(node, id)?;
                continue;
            }
            let next = if let Some(g) = self.layout.gateway_index(node) {
                self.snapshot
                    .gateway_edge(g)
                    .filter(|e| e.rate_from(node) > 0.0)
                    .map(|e| e.other(node))
            } else {
                let view = NetworkView {
                    snapshot: &self.snapshot,
                    queues: &self.queues,
                    now,
                };
                self.policy.select(&view, node, &self.packets[&id])
            };
            let Some(next) = next else {
                self.mark_stuck(node, id)?;
                continue;
            };
            let edge = *self
                .snapshot
                .edge_between(node, next)
                .ok_or_else(|| self.fault(format!("policy chose non-adjacent hop {node} -> {next}")))?;
            if let Some(g) = self.layout.gateway_index(next) {
                if g != self.packets[&id].dst_gw {
                    return Err(self.fault(format!(
                        "policy sent packet {id} down to gateway {g}, not its destination"
                    )));
                }
            }
            let rate = edge.rate_from(node);
            let bits = self.packets[&id].size_bits as f64;
            let tx_s = crate::channel::transmission_time(bits, rate)
                .map_err(|_| self.fault(format!("policy chose dead link {node} -> {next}")))?;
            let tx = secs_to_nanos(tx_s).max(1);
            let prop = secs_to_nanos(propagation_time(edge.distance)).max(1);
            let queue_t = now - ready;

            let packet = self.packets.get_mut(&id).expect("present");
            let hop = packet.path.last_mut().expect("non-empty path");
            debug_assert_eq!(hop.node, node);
            hop.queue = queue_t;
            hop.tx = tx;
            hop.prop = prop;

            self.queues[node.0].busy_until = Some(now + tx);
            self.trace.push(TraceRecord::Serve {
                time: now,
                node,
                packet: id,
                next,
            });
            self.events.schedule(now + tx, EventKind::TxComplete { node })?;
            self.events
                .schedule(now + tx + prop, EventKind::PacketArrival { packet: id, node: next })?;
            return Ok(());
        }
        Ok(())
    }

    fn maybe_schedule_training(&mut self, due: bool) -> Result<()> {
        if due && !self.train_scheduled {
            self.train_scheduled = true;
            let now = self.events.now();
            self.events.schedule(now, EventKind::TrainStep)?;
        }
        Ok(())
    }

    fn on_topology_update(&mut self) -> Result<()> {
        let now = self.events.now();
        let epoch = nanos_to_secs(now) * self.cfg.time_scale;
        let states = positions_at(&self.scenario.constellation, epoch);
        let mut snap = TopologySnapshot::rebuild(
            &self.snapshot,
            epoch,
            &states,
            &self.gateway_positions,
            &self.scenario.topology,
        );
        self.scenario.channel.assign_rates(&mut snap);
        crate::topology::assert_valid(&snap)?;
        self.snapshot = snap;
        self.stats.rebuilds += 1;
        self.trace.push(TraceRecord::Rebuild {
            time: now,
            edges: self.snapshot.edges.len(),
        });
        self.after_topology_change(self.stats.rebuilds)?;
        if let Some(interval) = self.cfg.update_interval {
            let t = now + secs_to_nanos(interval);
            if t <= self.end {
                self.events.schedule(t, EventKind::TopologyUpdate)?;
            }
        }
        Ok(())
    }

    fn after_topology_change(&mut self, rebuild: u64) -> Result<()> {
        let view = NetworkView {
            snapshot: &self.snapshot,
            queues: &self.queues,
            now: self.events.now(),
        };
        self.policy.on_topology_update(&view)?;
        self.recorder.on_topology(&self.snapshot, rebuild)?;
        if let Some(table) = self.policy.route_table() {
            self.recorder.on_routes(table)?;
        }
        Ok(())
    }

    /// Flushes packets still in flight and checks packet conservation.
    pub fn finish(mut self) -> Result<SimOutput<R>> {
        let mut remaining: Vec<PacketId> = self.packets.keys().copied().collect();
        remaining.sort_unstable();
        self.stats.counts.in_flight = remaining.len() as u64;
        for id in remaining {
            let packet = self.packets.remove(&id).expect("present");
            self.recorder.on_packet_finished(&self.layout, &packet)?;
        }
        conservation_audit(&self.stats.counts).map_err(|reason| Error::Fault {
            time_s: nanos_to_secs(self.events.now()),
            reason,
        })?;
        log::debug!(
            "run finished at {}s after {} events",
            fmt_secs(self.events.now()),
            self.stats.events
        );
        Ok(SimOutput {
            trace_digest: self.trace.digest(),
            trace: self.trace,
            stats: self.stats,
            policy: self.policy,
            recorder: self.recorder,
            final_snapshot: self.snapshot,
        })
    }
}

/// Checks `created = delivered + dropped + stuck + in_flight`.
pub fn conservation_audit(counts: &Counts) -> std::result::Result<Counts, String> {
    if counts.balanced() {
        Ok(*counts)
    } else {
        Err(format!("packet conservation violated: {counts:?}"))
    }
}
