use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Simulation time in integer nanoseconds. Integer time keeps per-hop latency
/// components summing exactly to end-to-end latency.
pub type Nanos = u64;

pub fn secs_to_nanos(s: f64) -> Nanos {
    debug_assert!(s >= 0.0 && s.is_finite(), "bad duration {s}");
    (s * 1e9).round() as Nanos
}

pub fn nanos_to_secs(n: Nanos) -> f64 {
    n as f64 * 1e-9
}

/// Exact decimal seconds rendering of a nanosecond count.
pub fn fmt_secs(n: Nanos) -> String {
    format!("{}.{:09}", n / 1_000_000_000, n % 1_000_000_000)
}

/// Inverse of [`fmt_secs`]: parses `s` or `s.fraction` (up to 9 digits) exactly.
pub fn parse_secs(text: &str) -> Option<Nanos> {
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 9 || whole.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let whole: u64 = whole.parse().ok()?;
    let frac_ns: u64 = if frac.is_empty() {
        0
    } else {
        frac.parse::<u64>().ok()? * 10u64.pow(9 - frac.len() as u32)
    };
    whole.checked_mul(1_000_000_000)?.checked_add(frac_ns)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<K> {
    pub time: Nanos,
    pub seq: u64,
    pub kind: K,
}

impl<K: Eq> Ord for Event<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, seq)
        other.time.cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl<K: Eq> PartialOrd for Event<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Future event list ordered by `(time, seq)`; `seq` is the insertion counter.
#[derive(Debug)]
pub struct EventQueue<K> {
    heap: BinaryHeap<Event<K>>,
    next_seq: u64,
    now: Nanos,
}

impl<K: Eq> Default for EventQueue<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Eq> EventQueue<K> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: 0,
        }
    }

    pub fn now(&self) -> Nanos {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Scheduling before the current clock is a logic error.
    pub fn schedule(&mut self, time: Nanos, kind: K) -> Result<u64> {
        if time < self.now {
            return Err(Error::Fault {
                time_s: nanos_to_secs(self.now),
                reason: format!("event scheduled in the past at t={}", fmt_secs(time)),
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
        Ok(seq)
    }

    pub fn peek_time(&self) -> Option<Nanos> {
        self.heap.peek().map(|e| e.time)
    }

    /// Pops the next event if it is due at or before `t_end`, advancing the clock.
    pub fn pop_until(&mut self, t_end: Nanos) -> Option<Event<K>> {
        if self.heap.peek()?.time > t_end {
            return None;
        }
        let ev = self.heap.pop()?;
        debug_assert!(ev.time >= self.now);
        self.now = ev.time;
        Some(ev)
    }

    /// Runs every event with time ≤ `t_end` through `handler`, which may schedule
    /// further events. Returns the executed `(time, seq)` pairs in order.
    pub fn run_until<F>(&mut self, t_end: Nanos, mut handler: F) -> Result<Vec<(Nanos, u64)>>
    where
        F: FnMut(&mut Self, Event<K>) -> Result<()>,
    {
        if t_end < self.now {
            return Err(Error::Fault {
                time_s: nanos_to_secs(self.now),
                reason: "run_until target precedes the clock".into(),
            });
        }
        let mut trace = Vec::new();
        while let Some(ev) = self.pop_until(t_end) {
            trace.push((ev.time, ev.seq));
            handler(self, ev)?;
        }
        self.now = self.now.max(t_end);
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_schedule_returns_immediately() {
        let mut q: EventQueue<u8> = EventQueue::new();
        let trace = q.run_until(1_000, |_, _| Ok(())).unwrap();
        assert!(trace.is_empty());
        assert_eq!(q.now(), 1_000);
    }

    #[test]
    fn equal_times_run_in_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule(5, 'b').unwrap();
        q.schedule(5, 'a').unwrap();
        q.schedule(1, 'c').unwrap();
        let mut seen = Vec::new();
        q.run_until(10, |_, ev| {
            seen.push(ev.kind);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec!['c', 'b', 'a']);
    }

    #[test]
    fn past_schedule_is_a_fault() {
        let mut q = EventQueue::new();
        q.schedule(10, ()).unwrap();
        q.run_until(10, |_, _| Ok(())).unwrap();
        assert!(matches!(q.schedule(9, ()), Err(Error::Fault { .. })));
    }

    #[test]
    fn handler_can_chain_events() {
        let mut q = EventQueue::new();
        q.schedule(0, 0u32).unwrap();
        let trace = q
            .run_until(100, |q, ev| {
                if ev.kind < 5 {
                    q.schedule(ev.time + 10, ev.kind + 1)?;
                }
                Ok(())
            })
            .unwrap();
        assert_eq!(trace.len(), 6);
        assert!(trace.windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn seconds_formatting_is_exact() {
        assert_eq!(fmt_secs(1_500_000_001), "1.500000001");
        assert_eq!(fmt_secs(0), "0.000000000");
        assert_eq!(secs_to_nanos(0.648e-3), 648_000);
        for n in [0, 1, 999_999_999, 1_000_000_000, 123_456_789_012] {
            assert_eq!(parse_secs(&fmt_secs(n)), Some(n));
        }
        assert_eq!(parse_secs("2.5"), Some(2_500_000_000));
        assert_eq!(parse_secs("1.0000000001"), None);
        assert_eq!(parse_secs("-1"), None);
    }
}
