use serde::{Deserialize, Serialize};

use super::event::{nanos_to_secs, Nanos};
use crate::topology::NodeId;

pub type PacketId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketStatus {
    InFlight,
    Delivered,
    Dropped,
    Stuck,
}

impl PacketStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketStatus::InFlight => "in_flight",
            PacketStatus::Delivered => "delivered",
            PacketStatus::Dropped => "dropped",
            PacketStatus::Stuck => "stuck",
        }
    }
}

/// One visited node. The latency terms describe the departure from this node
/// and stay zero for the final node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub node: NodeId,
    pub arrival: Nanos,
    pub queue: Nanos,
    pub tx: Nanos,
    pub prop: Nanos,
}

impl Hop {
    pub fn latency(&self) -> Nanos {
        self.queue + self.tx + self.prop
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub id: PacketId,
    pub src_gw: usize,
    pub dst_gw: usize,
    pub size_bits: u64,
    pub created_at: Nanos,
    pub delivered_at: Option<Nanos>,
    pub path: Vec<Hop>,
    pub status: PacketStatus,
}

impl Packet {
    /// Links traversed so far.
    pub fn hops(&self) -> usize {
        self.path.len().saturating_sub(1)
    }

    pub fn current_node(&self) -> NodeId {
        self.path.last().expect("packet path is never empty").node
    }

    pub fn previous_node(&self) -> Option<NodeId> {
        self.path.len().checked_sub(2).map(|i| self.path[i].node)
    }

    /// Latency of the most recently completed hop, seconds.
    pub fn last_hop_latency(&self) -> f64 {
        self.path
            .len()
            .checked_sub(2)
            .map_or(0.0, |i| nanos_to_secs(self.path[i].latency()))
    }

    /// Sums of (queue, transmission, propagation) over completed hops.
    pub fn components(&self) -> (Nanos, Nanos, Nanos) {
        self.path
            .iter()
            .fold((0, 0, 0), |(q, t, p), h| (q + h.queue, t + h.tx, p + h.prop))
    }

    pub fn e2e(&self) -> Option<Nanos> {
        self.delivered_at.map(|d| d - self.created_at)
    }
}
