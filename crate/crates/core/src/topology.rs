//! Time-variant network graph: inter-satellite links from greedy matching and
//! ground-satellite links from nearest-free-satellite assignment.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Vec3;
use crate::orbit::{SatId, SatelliteState, WalkerKind, EARTH_RADIUS};

/// Dense node index. Satellites come first in `(plane, index)` order, then gateways.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLayout {
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub num_gateways: usize,
}

impl NodeLayout {
    pub fn num_sats(&self) -> usize {
        self.num_planes * self.sats_per_plane
    }

    pub fn num_nodes(&self) -> usize {
        self.num_sats() + self.num_gateways
    }

    pub fn sat(&self, plane: usize, index: usize) -> NodeId {
        NodeId(plane * self.sats_per_plane + index)
    }

    pub fn gateway(&self, gw: usize) -> NodeId {
        NodeId(self.num_sats() + gw)
    }

    pub fn sat_id(&self, node: NodeId) -> Option<SatId> {
        (node.0 < self.num_sats()).then(|| SatId {
            plane: node.0 / self.sats_per_plane,
            index: node.0 % self.sats_per_plane,
        })
    }

    pub fn gateway_index(&self, node: NodeId) -> Option<usize> {
        (node.0 >= self.num_sats() && node.0 < self.num_nodes()).then(|| node.0 - self.num_sats())
    }

    pub fn is_gateway(&self, node: NodeId) -> bool {
        self.gateway_index(node).is_some()
    }

    pub fn label(&self, node: NodeId) -> String {
        match self.sat_id(node) {
            Some(s) => format!("sat-{}-{}", s.plane, s.index),
            None => format!("gw-{}", node.0 - self.num_sats()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    IslIntra,
    IslInter,
    Gsl,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::IslIntra => "isl_intra",
            EdgeKind::IslInter => "isl_inter",
            EdgeKind::Gsl => "gsl",
        }
    }
}

/// A bidirectional link.
///
/// Orientation of `a`/`b` is meaningful: for intra-plane links `b` is the
/// forward neighbor of `a`; for inter-plane links `a` uses its east antenna and
/// `b` its west antenna; for ground links `a` is the satellite and `b` the gateway.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub kind: EdgeKind,
    /// Slant range, meters.
    pub distance: f64,
    /// Data rate from `a` to `b`, bits/s.
    pub rate: f64,
    /// Data rate from `b` to `a`, bits/s.
    pub rate_reverse: f64,
}

impl Edge {
    fn new(a: NodeId, b: NodeId, kind: EdgeKind, distance: f64) -> Self {
        Edge {
            a,
            b,
            kind,
            distance,
            rate: 0.0,
            rate_reverse: 0.0,
        }
    }

    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn rate_from(&self, node: NodeId) -> f64 {
        if node == self.a {
            self.rate
        } else {
            self.rate_reverse
        }
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.a == node || self.b == node
    }
}

/// The five antenna ports of a satellite, in action-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    IntraForward = 0,
    IntraBackward = 1,
    InterEast = 2,
    InterWest = 3,
    DownToGateway = 4,
}

impl Port {
    pub const COUNT: usize = 5;
    pub const ALL: [Port; 5] = [
        Port::IntraForward,
        Port::IntraBackward,
        Port::InterEast,
        Port::InterWest,
        Port::DownToGateway,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Port> {
        Port::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Visibility {
    /// The straight segment must clear the Earth sphere.
    Isl,
    /// Elevation above the local horizon of the first endpoint, radians.
    Gsl { min_elevation: f64 },
}

/// True if the segment `a`–`b` does not pass through the Earth sphere.
pub fn line_of_sight(a: Vec3, b: Vec3) -> bool {
    let d = b - a;
    let len2 = d.dot(d);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (-a.dot(d) / len2).clamp(0.0, 1.0)
    };
    (a + d * t).norm() > EARTH_RADIUS
}

/// Elevation of `target` seen from `ground`, radians.
pub fn elevation(ground: Vec3, target: Vec3) -> f64 {
    let d = target - ground;
    let n = d.norm();
    if n == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    (d.dot(ground.unit()) / n).clamp(-1.0, 1.0).asin()
}

pub fn visible(a: Vec3, b: Vec3, mode: Visibility) -> bool {
    match mode {
        Visibility::Isl => line_of_sight(a, b),
        Visibility::Gsl { min_elevation } => elevation(a, b) >= min_elevation,
    }
}

fn by_distance_then_ids(x: &(f64, NodeId, NodeId), y: &(f64, NodeId, NodeId)) -> Ordering {
    x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2))
}

/// Ring links between consecutive satellites of each plane.
pub fn match_intra_plane(layout: &NodeLayout, states: &[SatelliteState]) -> Vec<Edge> {
    let n = layout.sats_per_plane;
    let mut edges = Vec::new();
    if n < 2 {
        return edges;
    }
    let ring_len = if n == 2 { 1 } else { n };
    for plane in 0..layout.num_planes {
        for k in 0..ring_len {
            let a = layout.sat(plane, k);
            let b = layout.sat(plane, (k + 1) % n);
            let (pa, pb) = (states[a.0].position, states[b.0].position);
            if line_of_sight(pa, pb) {
                edges.push(Edge::new(a, b, EdgeKind::IslIntra, pa.distance(pb)));
            }
        }
    }
    edges
}

/// Pairs of planes `(west, east)` that may carry inter-plane links.
///
/// Star constellations have a counter-rotating seam between the last and the
/// first plane, so only delta constellations wrap around.
pub fn adjacent_plane_pairs(num_planes: usize, kind: WalkerKind) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..num_planes.saturating_sub(1)).map(|p| (p, p + 1)).collect();
    if kind == WalkerKind::Delta && num_planes > 2 {
        pairs.push((num_planes - 1, 0));
    }
    pairs
}

/// Greedy closest-first matching between adjacent planes. Each satellite gets at
/// most one link on its east side and one on its west side.
pub fn match_inter_plane_greedy(layout: &NodeLayout, states: &[SatelliteState], kind: WalkerKind) -> Vec<Edge> {
    let mut edges = Vec::new();
    let n = layout.sats_per_plane;
    for (west, east) in adjacent_plane_pairs(layout.num_planes, kind) {
        let mut candidates = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let a = layout.sat(west, i);
                let b = layout.sat(east, j);
                let (pa, pb) = (states[a.0].position, states[b.0].position);
                if line_of_sight(pa, pb) {
                    candidates.push((pa.distance(pb), a, b));
                }
            }
        }
        candidates.sort_by(by_distance_then_ids);
        let mut east_used = vec![false; n];
        let mut west_used = vec![false; n];
        for (distance, a, b) in candidates {
            let (i, j) = (a.0 % n, b.0 % n);
            if !east_used[i] && !west_used[j] {
                east_used[i] = true;
                west_used[j] = true;
                edges.push(Edge::new(a, b, EdgeKind::IslInter, distance));
            }
        }
    }
    edges
}

/// Closest-first ground link assignment; each satellite serves at most one gateway.
pub fn match_gsl(layout: &NodeLayout, states: &[SatelliteState], gateways: &[Vec3], min_elevation: f64) -> Vec<Edge> {
    let mut candidates = Vec::new();
    for (g, &gp) in gateways.iter().enumerate() {
        for (s, st) in states.iter().enumerate() {
            if visible(gp, st.position, Visibility::Gsl { min_elevation }) {
                candidates.push((gp.distance(st.position), layout.gateway(g), NodeId(s)));
            }
        }
    }
    candidates.sort_by(by_distance_then_ids);
    let mut gw_done = vec![false; gateways.len()];
    let mut sat_used = vec![false; states.len()];
    let mut edges = Vec::new();
    for (distance, gw, sat) in candidates {
        let g = gw.0 - layout.num_sats();
        if !gw_done[g] && !sat_used[sat.0] {
            gw_done[g] = true;
            sat_used[sat.0] = true;
            edges.push(Edge::new(sat, gw, EdgeKind::Gsl, distance));
        }
    }
    for (g, done) in gw_done.iter().enumerate() {
        if !done {
            log::debug!("gateway {g} has no visible satellite; unconnected in this snapshot");
        }
    }
    edges
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyParams {
    pub walker_kind: WalkerKind,
    /// Radians.
    pub min_elevation: f64,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            walker_kind: WalkerKind::Star,
            min_elevation: 10f64.to_radians(),
        }
    }
}

/// The graph at one epoch. Immutable once built apart from link rates.
#[derive(Debug, Clone)]
pub struct TopologySnapshot {
    pub epoch: f64,
    pub layout: NodeLayout,
    pub edges: Vec<Edge>,
    /// Earth-fixed positions of every node, indexed by `NodeId`.
    pub positions: Vec<Vec3>,
    adjacency: Vec<Vec<usize>>,
    ports: Vec<[Option<usize>; Port::COUNT]>,
    gateway_link: Vec<Option<usize>>,
}

impl TopologySnapshot {
    pub fn build(
        epoch: f64,
        layout: NodeLayout,
        states: &[SatelliteState],
        gateways: &[Vec3],
        params: &TopologyParams,
    ) -> Self {
        assert_eq!(states.len(), layout.num_sats());
        assert_eq!(gateways.len(), layout.num_gateways);
        let mut edges = match_intra_plane(&layout, states);
        edges.extend(match_inter_plane_greedy(&layout, states, params.walker_kind));
        edges.extend(match_gsl(&layout, states, gateways, params.min_elevation));
        let mut positions: Vec<Vec3> = states.iter().map(|s| s.position).collect();
        positions.extend_from_slice(gateways);
        Self::from_edges(epoch, layout, positions, edges)
    }

    /// Assembles a snapshot from an explicit edge list.
    pub fn from_edges(epoch: f64, layout: NodeLayout, positions: Vec<Vec3>, edges: Vec<Edge>) -> Self {
        let nn = layout.num_nodes();
        let mut adjacency = vec![Vec::new(); nn];
        let mut ports = vec![[None; Port::COUNT]; layout.num_sats()];
        let mut gateway_link = vec![None; layout.num_gateways];
        for (idx, e) in edges.iter().enumerate() {
            adjacency[e.a.0].push(idx);
            adjacency[e.b.0].push(idx);
            match e.kind {
                EdgeKind::IslIntra => {
                    ports[e.a.0][Port::IntraForward.index()] = Some(idx);
                    ports[e.b.0][Port::IntraBackward.index()] = Some(idx);
                    if layout.sats_per_plane == 2 {
                        ports[e.a.0][Port::IntraBackward.index()] = Some(idx);
                        ports[e.b.0][Port::IntraForward.index()] = Some(idx);
                    }
                }
                EdgeKind::IslInter => {
                    ports[e.a.0][Port::InterEast.index()] = Some(idx);
                    ports[e.b.0][Port::InterWest.index()] = Some(idx);
                }
                EdgeKind::Gsl => {
                    ports[e.a.0][Port::DownToGateway.index()] = Some(idx);
                    if let Some(g) = layout.gateway_index(e.b) {
                        gateway_link[g] = Some(idx);
                    }
                }
            }
        }
        for (node, list) in adjacency.iter_mut().enumerate() {
            list.sort_by_key(|&i| edges[i].other(NodeId(node)));
        }
        TopologySnapshot {
            epoch,
            layout,
            edges,
            positions,
            adjacency,
            ports,
            gateway_link,
        }
    }

    /// Re-matches every link at the new positions. Node identities (and thus any
    /// per-node state held elsewhere) carry over from `previous`.
    pub fn rebuild(
        previous: &TopologySnapshot,
        epoch: f64,
        states: &[SatelliteState],
        gateways: &[Vec3],
        params: &TopologyParams,
    ) -> Self {
        Self::build(epoch, previous.layout, states, gateways, params)
    }

    /// Edge indices incident to `node`, sorted by neighbor id.
    pub fn incident(&self, node: NodeId) -> &[usize] {
        &self.adjacency[node.0]
    }

    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = (NodeId, &Edge)> + '_ {
        self.adjacency[node.0].iter().map(move |&i| {
            let e = &self.edges[i];
            (e.other(node), e)
        })
    }

    /// Neighbors reachable over a link with positive rate from `node`.
    pub fn live_neighbors(&self, node: NodeId) -> impl Iterator<Item = (NodeId, &Edge)> + '_ {
        self.neighbors(node).filter(move |(_, e)| e.rate_from(node) > 0.0)
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<&Edge> {
        self.neighbors(a).find(|(n, _)| *n == b).map(|(_, e)| e)
    }

    pub fn port_edge(&self, sat: NodeId, port: Port) -> Option<&Edge> {
        self.ports
            .get(sat.0)
            .and_then(|p| p[port.index()])
            .map(|i| &self.edges[i])
    }

    /// The ground link of gateway `gw` (by gateway index), if connected.
    pub fn gateway_edge(&self, gw: usize) -> Option<&Edge> {
        self.gateway_link.get(gw).copied().flatten().map(|i| &self.edges[i])
    }

    /// Satellite currently serving gateway `gw`.
    pub fn serving_satellite(&self, gw: usize) -> Option<NodeId> {
        self.gateway_edge(gw).map(|e| e.a)
    }

    pub fn connected_gateways(&self) -> Vec<usize> {
        (0..self.layout.num_gateways)
            .filter(|&g| self.gateway_link[g].is_some())
            .collect()
    }

    /// Checks antenna budgets, symmetry and edge sanity. Returns a description
    /// of the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let nn = self.layout.num_nodes();
        let mut intra = vec![0usize; nn];
        let mut east = vec![0usize; nn];
        let mut west = vec![0usize; nn];
        let mut gsl = vec![0usize; nn];
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            if e.a.0 >= nn || e.b.0 >= nn || e.a == e.b {
                return Err(format!("edge {}-{} has invalid endpoints", e.a, e.b));
            }
            if e.distance.is_nan() || e.distance <= 0.0 {
                return Err(format!("edge {}-{} has non-positive distance", e.a, e.b));
            }
            if !(e.rate >= 0.0 && e.rate_reverse >= 0.0) {
                return Err(format!("edge {}-{} has negative rate", e.a, e.b));
            }
            let key = (e.a.min(e.b), e.a.max(e.b));
            if !seen.insert(key) {
                return Err(format!("duplicate edge {}-{}", key.0, key.1));
            }
            let sat_a = self.layout.sat_id(e.a);
            let sat_b = self.layout.sat_id(e.b);
            match e.kind {
                EdgeKind::IslIntra => {
                    let (Some(sa), Some(sb)) = (sat_a, sat_b) else {
                        return Err(format!("intra edge {}-{} touches a gateway", e.a, e.b));
                    };
                    if sa.plane != sb.plane {
                        return Err(format!("intra edge {}-{} crosses planes", e.a, e.b));
                    }
                    intra[e.a.0] += 1;
                    intra[e.b.0] += 1;
                }
                EdgeKind::IslInter => {
                    let (Some(sa), Some(sb)) = (sat_a, sat_b) else {
                        return Err(format!("inter edge {}-{} touches a gateway", e.a, e.b));
                    };
                    if sa.plane == sb.plane {
                        return Err(format!("inter edge {}-{} within one plane", e.a, e.b));
                    }
                    east[e.a.0] += 1;
                    west[e.b.0] += 1;
                }
                EdgeKind::Gsl => {
                    if sat_a.is_none() || !self.layout.is_gateway(e.b) {
                        return Err(format!("ground edge {}-{} is not satellite-gateway", e.a, e.b));
                    }
                    gsl[e.a.0] += 1;
                    gsl[e.b.0] += 1;
                }
            }
        }
        for node in 0..nn {
            if intra[node] > 2 || east[node] > 1 || west[node] > 1 || gsl[node] > 1 {
                return Err(format!(
                    "node {node} exceeds antenna budget (intra {}, east {}, west {}, gsl {})",
                    intra[node], east[node], west[node], gsl[node]
                ));
            }
        }
        for e in &self.edges {
            let ab = self.edge_between(e.a, e.b).map(|x| x.distance);
            let ba = self.edge_between(e.b, e.a).map(|x| x.distance);
            if ab.is_none() || ab != ba {
                return Err(format!("edge {}-{} is not symmetric", e.a, e.b));
            }
        }
        Ok(())
    }

    /// Number of connected components among satellites and connected gateways.
    pub fn component_count(&self, live_only: bool) -> usize {
        let nn = self.layout.num_nodes();
        let mut comp = vec![usize::MAX; nn];
        let mut count = 0;
        for start in 0..nn {
            if comp[start] != usize::MAX {
                continue;
            }
            if self.layout.gateway_index(NodeId(start)).is_some() && self.adjacency[start].is_empty() {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            comp[start] = count;
            while let Some(u) = stack.pop() {
                for (v, e) in self.neighbors(NodeId(u)) {
                    if live_only && e.rate_from(NodeId(u)) <= 0.0 {
                        continue;
                    }
                    if comp[v.0] == usize::MAX {
                        comp[v.0] = count;
                        stack.push(v.0);
                    }
                }
            }
        }
        count
    }

    pub const CSV_HEADER: &'static str = "epoch,node_a,node_b,kind,distance_m,rate_bps,rate_reverse_bps";

    pub fn write_edges_csv(&self, out: &mut impl Write, with_header: bool) -> std::io::Result<()> {
        if with_header {
            writeln!(out, "{}", Self::CSV_HEADER)?;
        }
        for e in &self.edges {
            writeln!(
                out,
                "{:.3},{},{},{},{:.3},{:.1},{:.1}",
                self.epoch,
                e.a,
                e.b,
                e.kind.as_str(),
                e.distance,
                e.rate,
                e.rate_reverse
            )?;
        }
        Ok(())
    }

    pub const NODES_CSV_HEADER: &'static str = "node,label,kind,plane,index,latitude_deg,longitude_deg";

    pub fn write_nodes_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", Self::NODES_CSV_HEADER)?;
        for (i, p) in self.positions.iter().enumerate() {
            let node = NodeId(i);
            let (lat, lon) = p.lat_lon();
            let (kind, plane, index) = match self.layout.sat_id(node) {
                Some(s) => ("satellite", s.plane.to_string(), s.index.to_string()),
                None => ("gateway", String::new(), String::new()),
            };
            writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6}",
                i,
                self.layout.label(node),
                kind,
                plane,
                index,
                lat.to_degrees(),
                lon.to_degrees()
            )?;
        }
        Ok(())
    }
}

/// Fails with a fault if a snapshot breaks its invariants.
pub fn assert_valid(snapshot: &TopologySnapshot) -> Result<()> {
    snapshot.check_invariants().map_err(|reason| Error::Fault {
        time_s: snapshot.epoch,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::{build_constellation, gateway_position, GatewaySite, Preset};

    fn layout_for(spec: &crate::orbit::ConstellationSpec, gws: usize) -> NodeLayout {
        NodeLayout {
            num_planes: spec.num_planes,
            sats_per_plane: spec.sats_per_plane,
            num_gateways: gws,
        }
    }

    #[test]
    fn layout_ids() {
        let l = NodeLayout {
            num_planes: 3,
            sats_per_plane: 4,
            num_gateways: 2,
        };
        assert_eq!(l.sat(2, 1), NodeId(9));
        assert_eq!(l.gateway(1), NodeId(13));
        assert_eq!(l.sat_id(NodeId(9)), Some(SatId { plane: 2, index: 1 }));
        assert_eq!(l.gateway_index(NodeId(12)), Some(0));
        assert_eq!(l.gateway_index(NodeId(14)), None);
        assert_eq!(l.label(NodeId(13)), "gw-1");
    }

    #[test]
    fn kepler_rings() {
        let spec = Preset::Kepler.spec();
        let sats = build_constellation(&spec).unwrap();
        let edges = match_intra_plane(&layout_for(&spec, 0), &sats);
        assert_eq!(edges.len(), 140);
    }

    #[test]
    fn two_satellite_plane_has_at_most_one_link() {
        // two satellites of a circular orbit are antipodal: the Earth blocks them
        let spec = crate::orbit::ConstellationSpec::walker(WalkerKind::Star, 1, 2, 30_000e3, 0.5);
        let sats = build_constellation(&spec).unwrap();
        let layout = layout_for(&spec, 0);
        assert!(match_intra_plane(&layout, &sats).is_empty());

        // when the link does exist it serves both ring directions
        let edge = Edge::new(NodeId(0), NodeId(1), EdgeKind::IslIntra, 1.0);
        let snap = TopologySnapshot::from_edges(0.0, layout, sats.iter().map(|s| s.position).collect(), vec![edge]);
        for port in [Port::IntraForward, Port::IntraBackward] {
            assert!(snap.port_edge(NodeId(0), port).is_some());
            assert!(snap.port_edge(NodeId(1), port).is_some());
        }
        assert!(snap.check_invariants().is_ok());
    }

    #[test]
    fn single_satellite_plane_has_no_links() {
        let spec = crate::orbit::ConstellationSpec::walker(WalkerKind::Star, 3, 1, 600e3, 0.5);
        let sats = build_constellation(&spec).unwrap();
        assert!(match_intra_plane(&layout_for(&spec, 0), &sats).is_empty());
    }

    #[test]
    fn single_plane_has_no_inter_links() {
        let spec = crate::orbit::ConstellationSpec::walker(WalkerKind::Delta, 1, 10, 600e3, 0.5);
        let sats = build_constellation(&spec).unwrap();
        assert!(match_inter_plane_greedy(&layout_for(&spec, 0), &sats, WalkerKind::Delta).is_empty());
    }

    #[test]
    fn aligned_planes_match_same_index() {
        let mut spec = crate::orbit::ConstellationSpec::walker(WalkerKind::Star, 8, 8, 1000e3, 1.5);
        spec.phasing_offset = 0.0;
        let sats = build_constellation(&spec).unwrap();
        let layout = layout_for(&spec, 0);
        let edges = match_inter_plane_greedy(&layout, &sats, WalkerKind::Star);
        assert!(!edges.is_empty());
        for e in edges {
            assert_eq!(e.a.0 % 8, e.b.0 % 8, "{e:?}");
        }
    }

    #[test]
    fn visibility_cases() {
        let r = EARTH_RADIUS + 600e3;
        let ground = Vec3::new(EARTH_RADIUS, 0.0, 0.0);
        let zenith = Vec3::new(r, 0.0, 0.0);
        assert!(visible(
            ground,
            zenith,
            Visibility::Gsl {
                min_elevation: 10f64.to_radians()
            }
        ));
        assert!((elevation(ground, zenith) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(!visible(zenith, -zenith, Visibility::Isl));
        let half = 9f64.to_radians();
        let a = Vec3::new(r * half.cos(), r * half.sin(), 0.0);
        let b = Vec3::new(r * half.cos(), -r * half.sin(), 0.0);
        assert!(visible(a, b, Visibility::Isl));
        // chord midpoint altitude (R_E+h)·cos 9° − R_E
        assert!((r * half.cos() - EARTH_RADIUS - 514e3).abs() < 1e3);
    }

    #[test]
    fn zenith_gateway_link_distance_is_altitude() {
        let spec = crate::orbit::ConstellationSpec::walker(WalkerKind::Star, 1, 1, 600e3, 0.0);
        let sats = crate::orbit::build_constellation_in_frame(&spec, 0.0).unwrap();
        let gw = gateway_position(&GatewaySite::new(0, "zenith", 0.0, 0.0).unwrap());
        let layout = layout_for(&spec, 1);
        let edges = match_gsl(&layout, &sats, &[gw], 10f64.to_radians());
        assert_eq!(edges.len(), 1);
        assert!((edges[0].distance - 600e3).abs() < 1e-6);
    }

    #[test]
    fn gateway_below_horizon_is_unconnected() {
        let spec = crate::orbit::ConstellationSpec::walker(WalkerKind::Star, 1, 1, 600e3, 0.0);
        let sats = crate::orbit::build_constellation_in_frame(&spec, 0.0).unwrap();
        let gw = gateway_position(&GatewaySite::new(0, "far", 0.0, 120.0).unwrap());
        let layout = layout_for(&spec, 1);
        assert!(match_gsl(&layout, &sats, &[gw], 10f64.to_radians()).is_empty());
    }

    #[test]
    fn rebuild_unchanged_positions_is_identical() {
        let spec = Preset::Kepler.spec();
        let sats = build_constellation(&spec).unwrap();
        let gws: Vec<Vec3> = crate::orbit::default_gateways().iter().map(gateway_position).collect();
        let params = TopologyParams {
            walker_kind: spec.walker_kind,
            ..Default::default()
        };
        let layout = layout_for(&spec, gws.len());
        let first = TopologySnapshot::build(0.0, layout, &sats, &gws, &params);
        let again = TopologySnapshot::rebuild(&first, 0.0, &sats, &gws, &params);
        assert_eq!(first.edges, again.edges);
        first.check_invariants().unwrap();
    }

    #[test]
    fn zero_gateways_gives_isl_only_graph() {
        let spec = Preset::IridiumNext.spec();
        let sats = build_constellation(&spec).unwrap();
        let snap = TopologySnapshot::build(0.0, layout_for(&spec, 0), &sats, &[], &TopologyParams::default());
        assert!(snap.edges.iter().all(|e| e.kind != EdgeKind::Gsl));
        snap.check_invariants().unwrap();
    }
}
