//! Discrete-event core: one monotonic clock, integer-nanosecond time, one
//! FIFO transmission queue per node.

mod event;
mod packet;
mod queue;
mod sim;
mod trace;
pub mod traffic;

pub use event::{fmt_secs, nanos_to_secs, parse_secs, secs_to_nanos, Event, EventQueue, Nanos};
pub use packet::{Hop, Packet, PacketId, PacketStatus};
pub use queue::TxQueue;
pub use sim::{
    conservation_audit, Counts, EngineConfig, EventKind, MemoryRecorder, NullRecorder, Recorder, RunStats, Scenario,
    SimOutput, Simulator,
};
pub use trace::{Trace, TraceMode, TraceRecord};
pub use traffic::{Flow, TrafficGenerator, TrafficSpec};
