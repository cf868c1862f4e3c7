//! Local observation of a satellite agent.
//!
//! Layout (25 values, all in [-1, 1]):
//! `[Δplane, Δindex, dir_x, dir_y, dir_z]` followed by, for each of the five
//! ports, `[neighbor queue fill, distance, rate, valid]`. Features of invalid
//! ports are zero.

use super::NetworkView;
use crate::topology::{NodeId, Port, TopologySnapshot};

pub const STATE_DIM: usize = 5 + 4 * Port::COUNT;

/// Normalization constants taken from the current snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEncoder {
    pub distance_scale: f64,
    pub rate_scale: f64,
}

impl Default for StateEncoder {
    fn default() -> Self {
        StateEncoder {
            distance_scale: 1.0,
            rate_scale: 1.0,
        }
    }
}

/// Signed offset `to - from` on a ring of size `n`, in `(-n/2, n/2]`.
pub fn wrapped_offset(from: usize, to: usize, n: usize) -> i64 {
    if n == 0 {
        return 0;
    }
    let n = n as i64;
    let mut d = (to as i64 - from as i64).rem_euclid(n);
    if d > n / 2 {
        d -= n;
    }
    d
}

impl StateEncoder {
    pub fn from_snapshot(snapshot: &TopologySnapshot) -> Self {
        let mut d: f64 = 0.0;
        let mut r: f64 = 0.0;
        for e in &snapshot.edges {
            d = d.max(e.distance);
            r = r.max(e.rate).max(e.rate_reverse);
        }
        StateEncoder {
            distance_scale: if d > 0.0 { d } else { 1.0 },
            rate_scale: if r > 0.0 { r } else { 1.0 },
        }
    }

    /// Observation of satellite `node` for a packet headed to `dst_gw`, and
    /// the port validity mask.
    pub fn encode(&self, view: &NetworkView<'_>, node: NodeId, dst_gw: usize) -> (Vec<f64>, [bool; Port::COUNT]) {
        let snap = view.snapshot;
        let layout = snap.layout;
        let mut s = vec![0.0; STATE_DIM];
        let me = layout.sat_id(node).expect("agents are satellites");
        if let Some(target) = snap.serving_satellite(dst_gw).and_then(|n| layout.sat_id(n)) {
            let half_p = (layout.num_planes as f64 / 2.0).max(1.0);
            let half_i = (layout.sats_per_plane as f64 / 2.0).max(1.0);
            s[0] = wrapped_offset(me.plane, target.plane, layout.num_planes) as f64 / half_p;
            s[1] = wrapped_offset(me.index, target.index, layout.sats_per_plane) as f64 / half_i;
        }
        let gw_pos = snap.positions[layout.gateway(dst_gw).0];
        let dir = (gw_pos - snap.positions[node.0]).unit();
        s[2] = dir.x;
        s[3] = dir.y;
        s[4] = dir.z;

        let valid = view.valid_ports(node, dst_gw);
        for port in Port::ALL {
            if !valid[port.index()] {
                continue;
            }
            let e = snap.port_edge(node, port).expect("valid port has an edge");
            let nb = e.other(node);
            let base = 5 + 4 * port.index();
            s[base] = if layout.is_gateway(nb) {
                0.0
            } else {
                view.queue_fill(nb)
            };
            s[base + 1] = (e.distance / self.distance_scale).min(1.0);
            s[base + 2] = (e.rate_from(node) / self.rate_scale).min(1.0);
            s[base + 3] = 1.0;
        }
        for x in s.iter_mut() {
            *x = x.clamp(-1.0, 1.0);
        }
        (s, valid)
    }
}

/// The ground port is forced whenever it reaches the destination.
pub fn effective_mask(valid: [bool; Port::COUNT]) -> [bool; Port::COUNT] {
    if valid[Port::DownToGateway.index()] {
        let mut m = [false; Port::COUNT];
        m[Port::DownToGateway.index()] = true;
        m
    } else {
        valid
    }
}
