//! Append-only execution trace, hashed incrementally and optionally retained.

use sha2::{Digest, Sha256};

use super::event::Nanos;
use super::packet::PacketId;
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceRecord {
    Event {
        time: Nanos,
        seq: u64,
        code: u8,
    },
    Created {
        time: Nanos,
        packet: PacketId,
        node: NodeId,
    },
    Enqueue {
        time: Nanos,
        node: NodeId,
        packet: PacketId,
    },
    Serve {
        time: Nanos,
        node: NodeId,
        packet: PacketId,
        next: NodeId,
    },
    Delivered {
        time: Nanos,
        packet: PacketId,
    },
    Dropped {
        time: Nanos,
        node: NodeId,
        packet: PacketId,
    },
    Stuck {
        time: Nanos,
        node: NodeId,
        packet: PacketId,
    },
    Rebuild {
        time: Nanos,
        edges: usize,
    },
}

impl TraceRecord {
    pub fn time(&self) -> Nanos {
        match *self {
            TraceRecord::Event { time, .. }
            | TraceRecord::Created { time, .. }
            | TraceRecord::Enqueue { time, .. }
            | TraceRecord::Serve { time, .. }
            | TraceRecord::Delivered { time, .. }
            | TraceRecord::Dropped { time, .. }
            | TraceRecord::Stuck { time, .. }
            | TraceRecord::Rebuild { time, .. } => time,
        }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        let mut put = |tag: u8, words: &[u64]| {
            out.push(tag);
            for w in words {
                out.extend_from_slice(&w.to_le_bytes());
            }
        };
        match *self {
            TraceRecord::Event { time, seq, code } => put(0, &[time, seq, code as u64]),
            TraceRecord::Created { time, packet, node } => put(1, &[time, packet, node.0 as u64]),
            TraceRecord::Enqueue { time, node, packet } => put(2, &[time, node.0 as u64, packet]),
            TraceRecord::Serve {
                time,
                node,
                packet,
                next,
            } => put(3, &[time, node.0 as u64, packet, next.0 as u64]),
            TraceRecord::Delivered { time, packet } => put(4, &[time, packet]),
            TraceRecord::Dropped { time, node, packet } => put(5, &[time, node.0 as u64, packet]),
            TraceRecord::Stuck { time, node, packet } => put(6, &[time, node.0 as u64, packet]),
            TraceRecord::Rebuild { time, edges } => put(7, &[time, edges as u64]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// Only the running hash is kept.
    #[default]
    Hash,
    /// Every record is also retained in memory.
    Full,
}

pub struct Trace {
    hasher: Sha256,
    records: Option<Vec<TraceRecord>>,
    count: u64,
    buf: Vec<u8>,
}

impl Trace {
    pub fn new(mode: TraceMode) -> Self {
        Trace {
            hasher: Sha256::new(),
            records: matches!(mode, TraceMode::Full).then(Vec::new),
            count: 0,
            buf: Vec::with_capacity(64),
        }
    }

    pub fn push(&mut self, rec: TraceRecord) {
        self.buf.clear();
        rec.encode(&mut self.buf);
        self.hasher.update(&self.buf);
        self.count += 1;
        if let Some(r) = self.records.as_mut() {
            r.push(rec);
        }
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn records(&self) -> Option<&[TraceRecord]> {
        self.records.as_deref()
    }

    pub fn digest(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }
}
