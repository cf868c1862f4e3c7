use std::collections::VecDeque;

use super::event::Nanos;
use super::packet::PacketId;
use crate::topology::NodeId;

/// Drop-tail FIFO transmission buffer with a single server.
#[derive(Debug, Clone)]
pub struct TxQueue {
    pub owner: NodeId,
    pub capacity: usize,
    contents: VecDeque<(PacketId, Nanos)>,
    /// End of the transmission in progress, if any.
    pub busy_until: Option<Nanos>,
}

impl TxQueue {
    pub fn new(owner: NodeId, capacity: usize) -> Self {
        TxQueue {
            owner,
            capacity,
            contents: VecDeque::new(),
            busy_until: None,
        }
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.contents.len() >= self.capacity
    }

    pub fn is_busy(&self) -> bool {
        self.busy_until.is_some()
    }

    /// Appends unless full. Returns whether the packet was accepted.
    pub fn push(&mut self, packet: PacketId, ready_at: Nanos) -> bool {
        if self.is_full() {
            return false;
        }
        self.contents.push_back((packet, ready_at));
        true
    }

    /// Head-of-line packet and the time it became ready.
    pub fn pop(&mut self) -> Option<(PacketId, Nanos)> {
        self.contents.pop_front()
    }

    pub fn packets(&self) -> impl Iterator<Item = PacketId> + '_ {
        self.contents.iter().map(|(p, _)| *p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drop_tail_and_fifo() {
        let mut q = TxQueue::new(NodeId(0), 2);
        assert!(q.push(1, 0));
        assert!(q.push(2, 1));
        assert!(!q.push(3, 2));
        assert_eq!(q.pop(), Some((1, 0)));
        assert_eq!(q.pop(), Some((2, 1)));
        assert_eq!(q.pop(), None);
    }

    #[test]
    fn zero_capacity_rejects_everything() {
        let mut q = TxQueue::new(NodeId(0), 0);
        assert!(!q.push(1, 0));
        assert!(q.is_empty());
    }
}
