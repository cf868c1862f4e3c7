//! Centralized Dijkstra routing on the current snapshot.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{NetworkView, RoutingPolicy};
use crate::engine::Packet;
use crate::error::{Error, Result};
use crate::topology::{Edge, NodeId, NodeLayout, TopologySnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `1 / R` in seconds per bit.
    DataRate,
    /// Link length in metres.
    SlantRange,
    /// Unit weight.
    Hop,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 3] = [WeightScheme::DataRate, WeightScheme::SlantRange, WeightScheme::Hop];

    pub fn as_str(self) -> &'static str {
        match self {
            WeightScheme::DataRate => "data_rate",
            WeightScheme::SlantRange => "slant_range",
            WeightScheme::Hop => "hop",
        }
    }

    /// Weight of traversing `edge` from `from`, or `None` if it cannot carry traffic.
    pub fn weight(self, edge: &Edge, from: NodeId) -> Option<f64> {
        let rate = edge.rate_from(from);
        if rate <= 0.0 {
            return None;
        }
        Some(match self {
            WeightScheme::DataRate => 1.0 / rate,
            WeightScheme::SlantRange => edge.distance,
            WeightScheme::Hop => 1.0,
        })
    }
}

impl std::fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WeightScheme::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| Error::config("routing.weight", format!("unknown weight scheme `{s}`")))
    }
}

/// Directed graph with non-negative arc weights.
#[derive(Debug, Clone, Default)]
pub struct WeightedGraph {
    out: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            out: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    pub fn add_arc(&mut self, from: usize, to: usize, w: f64) {
        debug_assert!(w >= 0.0 && w.is_finite());
        self.out[from].push((to, w));
    }

    pub fn arcs(&self, from: usize) -> &[(usize, f64)] {
        &self.out[from]
    }

    pub fn from_snapshot(snapshot: &TopologySnapshot, scheme: WeightScheme) -> Self {
        let mut g = WeightedGraph::new(snapshot.layout.num_nodes());
        for e in &snapshot.edges {
            if let Some(w) = scheme.weight(e, e.a) {
                g.add_arc(e.a.0, e.b.0, w);
            }
            if let Some(w) = scheme.weight(e, e.b) {
                g.add_arc(e.b.0, e.a.0, w);
            }
        }
        g
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest distance from every node to `dst` and the first hop of the
/// lexicographically smallest optimal path.
///
/// Nodes flagged in `no_transit` may start or end a path but never relay.
pub fn shortest_path_tree(graph: &WeightedGraph, dst: usize, no_transit: &[bool]) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = graph.len();
    let mut rev: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for u in 0..n {
        for &(v, w) in graph.arcs(u) {
            rev[v].push((u, w));
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[dst] = 0.0;
    heap.push(HeapItem { dist: 0.0, node: dst });
    while let Some(HeapItem { dist: d, node: v }) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        if v != dst && no_transit.get(v).copied().unwrap_or(false) {
            continue;
        }
        for &(u, w) in &rev[v] {
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(HeapItem { dist: nd, node: u });
            }
        }
    }

    // A node's first hop is the smallest-id neighbour achieving its distance,
    // which makes every table path the lexicographically smallest optimum.
    let mut next = vec![None; n];
    for u in 0..n {
        if u == dst || !dist[u].is_finite() {
            continue;
        }
        let mut best: Option<usize> = None;
        for &(v, w) in graph.arcs(u) {
            let relay_ok = v == dst || !no_transit.get(v).copied().unwrap_or(false);
            if relay_ok && dist[v] + w == dist[u] && best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
        next[u] = best;
    }
    (dist, next)
}

/// Next hops and costs for every (node, destination gateway).
#[derive(Debug, Clone)]
pub struct RouteTable {
    pub epoch: f64,
    pub scheme: WeightScheme,
    pub layout: NodeLayout,
    next: Vec<Vec<Option<NodeId>>>,
    cost: Vec<Vec<f64>>,
}

impl RouteTable {
    pub fn next_hop(&self, node: NodeId, dst_gw: usize) -> Option<NodeId> {
        self.next.get(dst_gw)?.get(node.0).copied().flatten()
    }

    pub fn cost(&self, node: NodeId, dst_gw: usize) -> f64 {
        self.cost[dst_gw][node.0]
    }

    /// Node sequence from `src` to the destination gateway, if connected.
    pub fn path(&self, src: NodeId, dst_gw: usize) -> Option<Vec<NodeId>> {
        let dst = self.layout.gateway(dst_gw);
        let mut path = vec![src];
        let mut cur = src;
        while cur != dst {
            cur = self.next_hop(cur, dst_gw)?;
            path.push(cur);
            if path.len() > self.layout.num_nodes() {
                return None;
            }
        }
        Some(path)
    }

    pub const CSV_HEADER: &'static str = "epoch,src,dst,path,scheme";

    /// One row per ordered gateway pair that is currently connected.
    pub fn write_csv(&self, out: &mut impl Write, with_header: bool) -> std::io::Result<()> {
        if with_header {
            writeln!(out, "{}", Self::CSV_HEADER)?;
        }
        let g = self.layout.num_gateways;
        for src in 0..g {
            for dst in 0..g {
                if src == dst {
                    continue;
                }
                if let Some(p) = self.path(self.layout.gateway(src), dst) {
                    let ids: Vec<String> = p.iter().map(|n| n.0.to_string()).collect();
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        self.epoch,
                        self.layout.gateway(src).0,
                        self.layout.gateway(dst).0,
                        ids.join(" "),
                        self.scheme
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Routing table for every destination gateway of `snapshot`.
pub fn shortest_paths(snapshot: &TopologySnapshot, scheme: WeightScheme) -> RouteTable {
    let layout = snapshot.layout;
    let graph = WeightedGraph::from_snapshot(snapshot, scheme);
    let no_transit: Vec<bool> = (0..layout.num_nodes()).map(|i| layout.is_gateway(NodeId(i))).collect();
    let mut next = Vec::with_capacity(layout.num_gateways);
    let mut cost = Vec::with_capacity(layout.num_gateways);
    for g in 0..layout.num_gateways {
        let (d, nh) = shortest_path_tree(&graph, layout.gateway(g).0, &no_transit);
        next.push(nh.into_iter().map(|o| o.map(NodeId)).collect());
        cost.push(d);
    }
    RouteTable {
        epoch: snapshot.epoch,
        scheme,
        layout,
        next,
        cost,
    }
}

/// Follows a [`RouteTable`] recomputed at every topology update.
pub struct ShortestPathPolicy {
    pub scheme: WeightScheme,
    table: Option<RouteTable>,
}

impl ShortestPathPolicy {
    pub fn new(scheme: WeightScheme) -> Self {
        ShortestPathPolicy { scheme, table: None }
    }
}

impl RoutingPolicy for ShortestPathPolicy {
    fn name(&self) -> String {
        format!("dijkstra-{}", self.scheme)
    }

    fn on_topology_update(&mut self, view: &NetworkView<'_>) -> Result<()> {
        self.table = Some(shortest_paths(view.snapshot, self.scheme));
        Ok(())
    }

    fn select(&mut self, _view: &NetworkView<'_>, node: NodeId, packet: &Packet) -> Option<NodeId> {
        self.table.as_ref()?.next_hop(node, packet.dst_gw)
    }

    fn route_table(&self) -> Option<&RouteTable> {
        self.table.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> WeightedGraph {
        let mut g = WeightedGraph::new(n);
        for i in 0..n - 1 {
            g.add_arc(i, i + 1, 1.0);
            g.add_arc(i + 1, i, 1.0);
        }
        g
    }

    #[test]
    fn line_next_hop() {
        let (d, nh) = shortest_path_tree(&line(3), 2, &[false; 3]);
        assert_eq!(nh[0], Some(1));
        assert_eq!(nh[1], Some(2));
        assert_eq!(nh[2], None);
        assert_eq!(d, vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn triangle_prefers_two_short_hops() {
        let mut g = WeightedGraph::new(3);
        for (a, b, w) in [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 2.5)] {
            g.add_arc(a, b, w);
            g.add_arc(b, a, w);
        }
        let (d, nh) = shortest_path_tree(&g, 2, &[false; 3]);
        assert_eq!(nh[0], Some(1));
        assert_eq!(d[0], 2.0);
    }

    #[test]
    fn ties_pick_smallest_first_hop() {
        // 0 -> {2, 1} -> 3, both cost 2
        let mut g = WeightedGraph::new(4);
        for (a, b) in [(0, 2), (0, 1), (2, 3), (1, 3)] {
            g.add_arc(a, b, 1.0);
            g.add_arc(b, a, 1.0);
        }
        let (_, nh) = shortest_path_tree(&g, 3, &[false; 4]);
        assert_eq!(nh[0], Some(1));
    }

    #[test]
    fn no_transit_nodes_are_bypassed() {
        let mut g = line(3);
        g.add_arc(0, 2, 5.0);
        let (d, nh) = shortest_path_tree(&g, 2, &[false, true, false]);
        assert_eq!(nh[0], Some(2));
        assert_eq!(d[0], 5.0);
        // the no-transit node can still originate
        assert_eq!(nh[1], Some(2));
    }

    #[test]
    fn unreachable_has_no_entry() {
        let g = WeightedGraph::new(2);
        let (d, nh) = shortest_path_tree(&g, 1, &[false; 2]);
        assert!(d[0].is_infinite());
        assert_eq!(nh[0], None);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in WeightScheme::ALL {
            assert_eq!(s.as_str().parse::<WeightScheme>().unwrap(), s);
        }
        assert!("fastest".parse::<WeightScheme>().is_err());
    }
}
