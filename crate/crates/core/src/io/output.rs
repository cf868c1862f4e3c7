//! Run artifacts: CSV streams, the run log and the hashed manifest.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::SnapshotMode;
use crate::engine::{fmt_secs, parse_secs, Nanos, Packet, PacketStatus, Recorder, RunStats, TxQueue};
use crate::error::{Error, Result};
use crate::routing::{LearningLog, RouteTable};
use crate::topology::{NodeId, NodeLayout, TopologySnapshot};

pub const PACKETS_CSV: &str = "packets.csv";
pub const PATHS_CSV: &str = "paths.csv";
pub const QUEUES_CSV: &str = "queues.csv";
pub const ROUTES_CSV: &str = "routes.csv";
pub const EDGES_CSV: &str = "edges.csv";
pub const NODES_CSV: &str = "nodes.csv";
pub const LINK_USAGE_CSV: &str = "link_usage.csv";
pub const REWARDS_CSV: &str = "rewards.csv";
pub const EPSILON_CSV: &str = "epsilon.csv";
pub const RUN_LOG: &str = "run.log";
pub const MANIFEST: &str = "manifest.json";

pub const PACKETS_HEADER: &str = "packet_id,src,dst,created_at,delivered_at,hops,queue_s,tx_s,prop_s,status";
pub const PATHS_HEADER: &str = "packet_id,hop,node,arrival_s,queue_s,tx_s,prop_s";
pub const QUEUES_HEADER: &str = "time,node,occupancy";
pub const LINK_USAGE_HEADER: &str = "node_a,node_b,kind,packets";
pub const REWARDS_HEADER: &str = "step,sim_time,reward";
pub const EPSILON_HEADER: &str = "step,sim_time,epsilon";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Streams engine output into a run directory.
pub struct FileRecorder {
    dir: PathBuf,
    packets: BufWriter<File>,
    paths: Option<BufWriter<File>>,
    queues: BufWriter<File>,
    routes: BufWriter<File>,
    edges: Option<BufWriter<File>>,
    snapshots: SnapshotMode,
    wrote_nodes: bool,
    /// Links of every snapshot, for labeling usage by kind.
    link_kinds: BTreeMap<(NodeId, NodeId), &'static str>,
}

impl FileRecorder {
    pub fn create(dir: &Path, snapshots: SnapshotMode, paths: bool) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut packets = create(&dir.join(PACKETS_CSV))?;
        let mut queues = create(&dir.join(QUEUES_CSV))?;
        let mut routes = create(&dir.join(ROUTES_CSV))?;
        let io = |p: &'static str| move |e| Error::io(dir.join(p), e);
        writeln!(packets, "{PACKETS_HEADER}").map_err(io(PACKETS_CSV))?;
        writeln!(queues, "{QUEUES_HEADER}").map_err(io(QUEUES_CSV))?;
        writeln!(routes, "{}", RouteTable::CSV_HEADER).map_err(io(ROUTES_CSV))?;
        let paths = if paths {
            let mut w = create(&dir.join(PATHS_CSV))?;
            writeln!(w, "{PATHS_HEADER}").map_err(io(PATHS_CSV))?;
            Some(w)
        } else {
            None
        };
        let edges = if snapshots == SnapshotMode::None {
            None
        } else {
            let mut w = create(&dir.join(EDGES_CSV))?;
            writeln!(w, "{}", TopologySnapshot::CSV_HEADER).map_err(io(EDGES_CSV))?;
            Some(w)
        };
        Ok(FileRecorder {
            dir: dir.to_path_buf(),
            packets,
            paths,
            queues,
            routes,
            edges,
            snapshots,
            wrote_nodes: false,
            link_kinds: BTreeMap::new(),
        })
    }

    /// Flushes every stream.
    pub fn finish(mut self) -> Result<BTreeMap<(NodeId, NodeId), &'static str>> {
        for (w, name) in [
            (&mut self.packets, PACKETS_CSV),
            (&mut self.queues, QUEUES_CSV),
            (&mut self.routes, ROUTES_CSV),
        ] {
            w.flush().map_err(|e| Error::io(self.dir.join(name), e))?;
        }
        if let Some(w) = self.paths.as_mut() {
            w.flush().map_err(|e| Error::io(self.dir.join(PATHS_CSV), e))?;
        }
        if let Some(w) = self.edges.as_mut() {
            w.flush().map_err(|e| Error::io(self.dir.join(EDGES_CSV), e))?;
        }
        Ok(self.link_kinds)
    }
}

/// One `packets.csv` row.
pub fn packet_row(p: &Packet) -> String {
    let (q, t, pr) = p.components();
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        p.id,
        p.src_gw,
        p.dst_gw,
        fmt_secs(p.created_at),
        p.delivered_at.map(fmt_secs).unwrap_or_default(),
        p.hops(),
        fmt_secs(q),
        fmt_secs(t),
        fmt_secs(pr),
        p.status.as_str()
    )
}

impl Recorder for FileRecorder {
    fn on_packet_finished(&mut self, _layout: &NodeLayout, p: &Packet) -> Result<()> {
        let row = packet_row(p);
        writeln!(self.packets, "{row}").map_err(|e| Error::io(self.dir.join(PACKETS_CSV), e))?;
        if let Some(w) = self.paths.as_mut() {
            for (i, h) in p.path.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    p.id,
                    i,
                    h.node,
                    fmt_secs(h.arrival),
                    fmt_secs(h.queue),
                    fmt_secs(h.tx),
                    fmt_secs(h.prop)
                )
                .map_err(|e| Error::io(self.dir.join(PATHS_CSV), e))?;
            }
        }
        Ok(())
    }

    fn on_topology(&mut self, snapshot: &TopologySnapshot, rebuild: u64) -> Result<()> {
        for e in &snapshot.edges {
            self.link_kinds.insert((e.a.min(e.b), e.a.max(e.b)), e.kind.as_str());
        }
        let write = match self.snapshots {
            SnapshotMode::All => true,
            SnapshotMode::First => rebuild == 0,
            SnapshotMode::None => false,
        };
        if write {
            if let Some(w) = self.edges.as_mut() {
                snapshot
                    .write_edges_csv(w, false)
                    .map_err(|e| Error::io(self.dir.join(EDGES_CSV), e))?;
            }
        }
        if !self.wrote_nodes {
            let p = self.dir.join(NODES_CSV);
            let mut w = create(&p)?;
            snapshot.write_nodes_csv(&mut w).map_err(|e| Error::io(&p, e))?;
            w.flush().map_err(|e| Error::io(&p, e))?;
            self.wrote_nodes = true;
        }
        Ok(())
    }

    fn on_routes(&mut self, table: &RouteTable) -> Result<()> {
        table
            .write_csv(&mut self.routes, false)
            .map_err(|e| Error::io(self.dir.join(ROUTES_CSV), e))
    }

    fn on_queue_sample(&mut self, time: Nanos, queues: &[TxQueue]) -> Result<()> {
        let t = fmt_secs(time);
        for q in queues {
            writeln!(self.queues, "{t},{},{}", q.owner, q.len())
                .map_err(|e| Error::io(self.dir.join(QUEUES_CSV), e))?;
        }
        Ok(())
    }
}

pub fn write_link_usage(path: &Path, stats: &RunStats, kinds: &BTreeMap<(NodeId, NodeId), &'static str>) -> Result<()> {
    let mut w = create(path)?;
    let mut rows: Vec<_> = stats.link_usage.iter().collect();
    rows.sort();
    let io = |e| Error::io(path, e);
    writeln!(w, "{LINK_USAGE_HEADER}").map_err(io)?;
    for ((a, b), n) in rows {
        let kind = kinds.get(&(*a, *b)).copied().unwrap_or("unknown");
        writeln!(w, "{a},{b},{kind},{n}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_learning_log(dir: &Path, log: &LearningLog) -> Result<Vec<PathBuf>> {
    let rp = dir.join(REWARDS_CSV);
    let mut w = create(&rp)?;
    writeln!(w, "{REWARDS_HEADER}").map_err(|e| Error::io(&rp, e))?;
    for (step, t, r) in &log.rewards {
        writeln!(w, "{step},{t},{r}").map_err(|e| Error::io(&rp, e))?;
    }
    w.flush().map_err(|e| Error::io(&rp, e))?;
    let ep = dir.join(EPSILON_CSV);
    let mut w = create(&ep)?;
    writeln!(w, "{EPSILON_HEADER}").map_err(|e| Error::io(&ep, e))?;
    for (step, t, eps) in &log.epsilon {
        writeln!(w, "{step},{t},{eps}").map_err(|e| Error::io(&ep, e))?;
    }
    w.flush().map_err(|e| Error::io(&ep, e))?;
    Ok(vec![rp, ep])
}

/// Parsed `packets.csv` row with exact nanosecond times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRow {
    pub packet_id: u64,
    pub src: usize,
    pub dst: usize,
    pub created_at: Nanos,
    pub delivered_at: Option<Nanos>,
    pub hops: u64,
    pub queue: Nanos,
    pub tx: Nanos,
    pub prop: Nanos,
    pub status: PacketStatus,
}

impl PacketRow {
    pub fn e2e(&self) -> Option<Nanos> {
        self.delivered_at.map(|d| d - self.created_at)
    }
}

#[derive(Deserialize)]
struct RawPacketRow {
    packet_id: u64,
    src: usize,
    dst: usize,
    created_at: String,
    delivered_at: String,
    hops: u64,
    queue_s: String,
    tx_s: String,
    prop_s: String,
    status: PacketStatus,
}

/// Reads every row of a `packets.csv` file.
pub fn read_packets(path: &Path) -> Result<Vec<PacketRow>> {
    let mut out = Vec::new();
    for_each_packet(path, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

/// Streams rows of a `packets.csv` file.
pub fn for_each_packet(path: &Path, mut f: impl FnMut(PacketRow) -> Result<()>) -> Result<()> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let bad = |what: &str, v: &str| Error::Analysis(format!("{}: bad {what} `{v}`", path.display()));
    for raw in rdr.deserialize::<RawPacketRow>() {
        let r = raw?;
        let t = |v: &str, what: &str| parse_secs(v).ok_or_else(|| bad(what, v));
        f(PacketRow {
            packet_id: r.packet_id,
            src: r.src,
            dst: r.dst,
            created_at: t(&r.created_at, "created_at")?,
            delivered_at: if r.delivered_at.is_empty() {
                None
            } else {
                Some(t(&r.delivered_at, "delivered_at")?)
            },
            hops: r.hops,
            queue: t(&r.queue_s, "queue_s")?,
            tx: t(&r.tx_s, "tx_s")?,
            prop: t(&r.prop_s, "prop_s")?,
            status: r.status,
        })?;
    }
    Ok(())
}

/// Aggregates that appear in `run.log` and can be recomputed from `packets.csv`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PacketSummary {
    pub created: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub stuck: u64,
    pub in_flight: u64,
    pub total_hops: u64,
    pub mean_e2e_s: f64,
    pub mean_queue_s: f64,
    pub mean_tx_s: f64,
    pub mean_prop_s: f64,
}

impl PacketSummary {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a PacketRow>) -> Self {
        let mut s = PacketSummary::default();
        let (mut e2e, mut q, mut t, mut p) = (0u128, 0u128, 0u128, 0u128);
        for r in rows {
            s.created += 1;
            s.total_hops += r.hops;
            match r.status {
                PacketStatus::Delivered => {
                    s.delivered += 1;
                    e2e += r.e2e().unwrap_or(0) as u128;
                    q += r.queue as u128;
                    t += r.tx as u128;
                    p += r.prop as u128;
                }
                PacketStatus::Dropped => s.dropped += 1,
                PacketStatus::Stuck => s.stuck += 1,
                PacketStatus::InFlight => s.in_flight += 1,
            }
        }
        let mean = |x: u128| {
            if s.delivered == 0 {
                0.0
            } else {
                x as f64 * 1e-9 / s.delivered as f64
            }
        };
        s.mean_e2e_s = mean(e2e);
        s.mean_queue_s = mean(q);
        s.mean_tx_s = mean(t);
        s.mean_prop_s = mean(p);
        s
    }

    pub fn from_stats(stats: &RunStats) -> Self {
        let c = stats.counts;
        PacketSummary {
            created: c.created,
            delivered: c.delivered,
            dropped: c.dropped,
            stuck: c.stuck,
            in_flight: c.in_flight,
            total_hops: stats.link_usage.values().sum(),
            mean_e2e_s: stats.mean_secs(stats.sum_e2e),
            mean_queue_s: stats.mean_secs(stats.sum_queue),
            mean_tx_s: stats.mean_secs(stats.sum_tx),
            mean_prop_s: stats.mean_secs(stats.sum_prop),
        }
    }
}

/// Human-readable summary. Contains no wall-clock data so reruns match byte for byte.
pub fn write_run_log(
    path: &Path,
    policy: &str,
    stats: &RunStats,
    layout: &NodeLayout,
    trace_digest: &str,
    flow_rate: f64,
) -> Result<()> {
    let s = PacketSummary::from_stats(stats);
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "policy: {policy}").map_err(io)?;
    writeln!(w, "flow_rate_pps: {flow_rate}").map_err(io)?;
    writeln!(w, "events: {}", stats.events).map_err(io)?;
    writeln!(w, "topology_rebuilds: {}", stats.rebuilds).map_err(io)?;
    writeln!(w, "created: {}", s.created).map_err(io)?;
    writeln!(w, "delivered: {}", s.delivered).map_err(io)?;
    writeln!(w, "dropped: {}", s.dropped).map_err(io)?;
    writeln!(w, "stuck: {}", s.stuck).map_err(io)?;
    writeln!(w, "in_flight: {}", s.in_flight).map_err(io)?;
    writeln!(w, "total_hops: {}", s.total_hops).map_err(io)?;
    writeln!(w, "mean_e2e_s: {}", s.mean_e2e_s).map_err(io)?;
    writeln!(w, "mean_queue_s: {}", s.mean_queue_s).map_err(io)?;
    writeln!(w, "mean_tx_s: {}", s.mean_tx_s).map_err(io)?;
    writeln!(w, "mean_prop_s: {}", s.mean_prop_s).map_err(io)?;
    writeln!(w, "max_queue_occupancy: {}", stats.max_occupancy).map_err(io)?;
    writeln!(w, "trace_sha256: {trace_digest}").map_err(io)?;
    writeln!(w, "most_used_links:").map_err(io)?;
    for ((a, b), n) in stats.top_links(20) {
        writeln!(w, "  {} <-> {}: {n}", layout.label(a), layout.label(b)).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads `key: value` lines of a run log.
pub fn read_run_log(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with(' '))
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Relative paths of every regular file under `dir`, sorted, using `/` separators.
pub fn list_files(dir: &Path) -> Result<Vec<String>> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let p = entry.path();
            if p.is_dir() {
                walk(base, &p, out)?;
            } else {
                let rel = p.strip_prefix(base).expect("under base");
                out.push(
                    rel.components()
                        .map(|c| c.as_os_str().to_string_lossy())
                        .collect::<Vec<_>>()
                        .join("/"),
                );
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub policy: String,
    pub fingerprint: super::config::Fingerprint,
    pub config: serde_json::Value,
    pub summary: PacketSummary,
    pub trace_sha256: String,
    /// Relative path → sha256 of every other file in the run directory.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let p = dir.join(MANIFEST);
        if !p.exists() {
            return Err(Error::MissingInput(p));
        }
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let p = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&p, text + "\n").map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    /// Hashes every file currently in `dir` except the manifest itself.
    pub fn hash_dir(dir: &Path) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for rel in list_files(dir)? {
            if rel == MANIFEST {
                continue;
            }
            out.insert(rel.clone(), sha256_file(&dir.join(&rel))?);
        }
        Ok(out)
    }

    /// Files whose hash no longer matches, plus files missing from either side.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let now = Self::hash_dir(dir)?;
        let mut bad = Vec::new();
        for (k, v) in &self.files {
            if now.get(k) != Some(v) {
                bad.push(k.clone());
            }
        }
        for k in now.keys() {
            if !self.files.contains_key(k) {
                bad.push(k.clone());
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Hop;

    fn packet() -> Packet {
        Packet {
            id: 3,
            src_gw: 0,
            dst_gw: 1,
            size_bits: 10,
            created_at: 5,
            delivered_at: Some(5 + 7 + 11 + 13),
            path: vec![
                Hop {
                    node: NodeId(9),
                    arrival: 5,
                    queue: 7,
                    tx: 11,
                    prop: 13,
                },
                Hop {
                    node: NodeId(4),
                    arrival: 36,
                    queue: 0,
                    tx: 0,
                    prop: 0,
                },
            ],
            status: PacketStatus::Delivered,
        }
    }

    #[test]
    fn packet_rows_parse_back_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(PACKETS_CSV);
        std::fs::write(&p, format!("{PACKETS_HEADER}\n{}\n", packet_row(&packet()))).unwrap();
        let rows = read_packets(&p).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!(r.e2e(), Some(31));
        assert_eq!(r.queue + r.tx + r.prop, 31);
        assert_eq!(r.status, PacketStatus::Delivered);
        let s = PacketSummary::from_rows(&rows);
        assert_eq!((s.delivered, s.total_hops), (1, 1));
    }

    #[test]
    fn manifest_detects_changes() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "x\n").unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        std::fs::write(dir.path().join("sub/b.txt"), "y\n").unwrap();
        let files = Manifest::hash_dir(dir.path()).unwrap();
        assert_eq!(files.keys().cloned().collect::<Vec<_>>(), vec!["a.csv", "sub/b.txt"]);
        let m = Manifest {
            format_version: 1,
            tool_version: "t".into(),
            seed: 0,
            policy: "p".into(),
            fingerprint: crate::io::config::ScenarioConfig::default().fingerprint().unwrap(),
            config: serde_json::Value::Null,
            summary: PacketSummary::default(),
            trace_sha256: String::new(),
            files,
        };
        m.write(dir.path()).unwrap();
        assert!(m.verify(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("a.csv"), "z\n").unwrap();
        assert_eq!(m.verify(dir.path()).unwrap(), vec!["a.csv"]);
        assert_eq!(Manifest::load(dir.path()).unwrap(), m);
    }
}
