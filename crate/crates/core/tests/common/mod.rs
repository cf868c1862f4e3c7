#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::HashMap;

use leosim::engine::{MemoryRecorder, SimOutput, Simulator, TraceMode, TraceRecord};
use leosim::io::{build_policy, ScenarioConfig};
use leosim::routing::RoutingPolicy;
use leosim::topology::NodeId;

/// Parses a config from `key=value` overrides on top of the defaults.
pub fn config(sets: &[(&str, &str)]) -> ScenarioConfig {
    let pairs: Vec<(String, String)> = sets.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    ScenarioConfig::from_toml_str("", &pairs).expect("valid test config")
}

/// Frozen 2-plane x 4-satellite constellation with two gateways.
pub fn small_static(extra: &[(&str, &str)]) -> ScenarioConfig {
    let mut sets = vec![
        ("constellation.preset", "\"test-small\""),
        ("ground.gateways", "2"),
        ("radio.isl.eirp_dbw", "50.0"),
        ("engine.update_interval_s", "0"),
        ("duration_s", "20"),
    ];
    sets.extend_from_slice(extra);
    config(&sets)
}

/// Runs `cfg` in memory with the policy it describes.
pub fn run_memory(cfg: &ScenarioConfig, mode: TraceMode) -> SimOutput<MemoryRecorder> {
    let scenario = cfg.scenario().expect("scenario");
    let policy = build_policy(cfg, scenario.layout()).expect("policy");
    run_with_policy(cfg, policy, mode)
}

pub fn run_with_policy(
    cfg: &ScenarioConfig,
    policy: Box<dyn RoutingPolicy>,
    mode: TraceMode,
) -> SimOutput<MemoryRecorder> {
    let scenario = cfg.scenario().expect("scenario");
    let mut sim =
        Simulator::new(scenario, cfg.engine_config(), policy, MemoryRecorder::default(), mode).expect("simulator");
    sim.run().expect("run");
    sim.finish().expect("finish")
}

/// Checks that every node dequeues packets in the order it enqueued them.
/// Returns the number of violations.
pub fn fifo_violations(records: &[TraceRecord]) -> usize {
    let mut enq: HashMap<NodeId, Vec<u64>> = HashMap::new();
    let mut deq: HashMap<NodeId, Vec<u64>> = HashMap::new();
    for r in records {
        match *r {
            TraceRecord::Enqueue { node, packet, .. } => enq.entry(node).or_default().push(packet),
            TraceRecord::Serve { node, packet, .. } | TraceRecord::Stuck { node, packet, .. } => {
                deq.entry(node).or_default().push(packet)
            }
            _ => {}
        }
    }
    let mut bad = 0;
    for (node, out) in &deq {
        let inn = enq.get(node).map(Vec::as_slice).unwrap_or(&[]);
        if out.len() > inn.len() {
            bad += out.len() - inn.len();
        }
        bad += out.iter().zip(inn).filter(|(a, b)| a != b).count();
    }
    bad
}

/// Mean E2E of delivered packets in seconds.
pub fn mean_e2e(out: &SimOutput<MemoryRecorder>) -> f64 {
    out.stats.mean_secs(out.stats.sum_e2e)
}

pub mod graphs {
    use leosim::geo::Vec3;
    use leosim::routing::classic::WeightScheme;
    use leosim::topology::{Edge, EdgeKind, NodeId, NodeLayout, TopologySnapshot};
    use rand::Rng;

    /// Random connected graph of at most `max_nodes` nodes. Satellite links get
    /// integer lengths and power-of-two rates so every path cost is exact in
    /// floating point. Gateways hang off one or two satellites each.
    pub fn random_snapshot<R: Rng>(rng: &mut R, max_nodes: usize) -> TopologySnapshot {
        let n_g = rng.random_range(2..=3);
        let n_s = rng.random_range(2..=(max_nodes - n_g));
        let layout = NodeLayout {
            num_planes: 1,
            sats_per_plane: n_s,
            num_gateways: n_g,
        };
        let mut edges = Vec::new();
        let add = |rng: &mut R, a: usize, b: usize, kind: EdgeKind| {
            let rate = (2f64).powi(rng.random_range(10..30));
            let rate_reverse = if rng.random_bool(0.1) {
                0.0
            } else {
                (2f64).powi(rng.random_range(10..30))
            };
            Edge {
                a: NodeId(a),
                b: NodeId(b),
                kind,
                distance: rng.random_range(1..2000) as f64,
                rate,
                rate_reverse,
            }
        };
        let mut present = vec![vec![false; n_s]; n_s];
        for v in 1..n_s {
            let u = rng.random_range(0..v);
            present[u][v] = true;
            edges.push(add(rng, u, v, EdgeKind::IslInter));
        }
        for u in 0..n_s {
            for v in u + 1..n_s {
                if !present[u][v] && rng.random_bool(0.3) {
                    present[u][v] = true;
                    edges.push(add(rng, u, v, EdgeKind::IslInter));
                }
            }
        }
        for g in 0..n_g {
            let k = rng.random_range(1..=2.min(n_s));
            let mut used = Vec::new();
            while used.len() < k {
                let s = rng.random_range(0..n_s);
                if !used.contains(&s) {
                    used.push(s);
                    edges.push(add(rng, s, n_s + g, EdgeKind::Gsl));
                }
            }
        }
        let positions = vec![Vec3::new(0.0, 0.0, 0.0); layout.num_nodes()];
        TopologySnapshot::from_edges(0.0, layout, positions, edges)
    }

    /// Minimum cost and lexicographically smallest optimal path from every node
    /// to gateway `dst_gw`, by exhaustive enumeration of simple paths that do
    /// not relay through other gateways.
    pub fn brute_force(snap: &TopologySnapshot, scheme: WeightScheme, dst_gw: usize) -> Vec<Option<(f64, Vec<usize>)>> {
        let layout = snap.layout;
        let n = layout.num_nodes();
        let dst = layout.gateway(dst_gw).0;
        let mut best: Vec<Option<(f64, Vec<usize>)>> = vec![None; n];
        best[dst] = Some((0.0, vec![dst]));

        fn dfs(
            snap: &TopologySnapshot,
            scheme: WeightScheme,
            dst: usize,
            path: &mut Vec<usize>,
            cost: f64,
            out: &mut Option<(f64, Vec<usize>)>,
        ) {
            let u = *path.last().unwrap();
            if u == dst {
                let better = match out {
                    None => true,
                    Some((c, p)) => cost < *c || (cost == *c && path.as_slice() < p.as_slice()),
                };
                if better {
                    *out = Some((cost, path.clone()));
                }
                return;
            }
            if path.len() > 1 && snap.layout.is_gateway(NodeId(u)) {
                return;
            }
            for e in &snap.edges {
                if !e.touches(NodeId(u)) {
                    continue;
                }
                let v = e.other(NodeId(u)).0;
                if path.contains(&v) {
                    continue;
                }
                let Some(w) = scheme.weight(e, NodeId(u)) else { continue };
                path.push(v);
                dfs(snap, scheme, dst, path, cost + w, out);
                path.pop();
            }
        }

        for src in 0..n {
            if src == dst {
                continue;
            }
            let mut out = None;
            dfs(snap, scheme, dst, &mut vec![src], 0.0, &mut out);
            best[src] = out.map(|(_, p)| (path_cost(snap, scheme, &p), p));
        }
        best
    }

    /// Path cost summed from the destination backwards.
    pub fn path_cost(snap: &TopologySnapshot, scheme: WeightScheme, path: &[usize]) -> f64 {
        let mut c = 0.0;
        for w in path.windows(2).rev() {
            let e = snap.edge_between(NodeId(w[0]), NodeId(w[1])).expect("edge");
            c += scheme.weight(e, NodeId(w[0])).expect("live");
        }
        c
    }
}

pub mod gradcheck {
    use leosim::routing::mlp::{Mlp, Sample};
    use rand::Rng;

    pub struct Batch {
        pub inputs: Vec<Vec<f64>>,
        pub actions: Vec<usize>,
        pub targets: Vec<f64>,
    }

    impl Batch {
        pub fn random<R: Rng>(rng: &mut R, size: usize, input_dim: usize, output_dim: usize) -> Self {
            Batch {
                inputs: (0..size)
                    .map(|_| (0..input_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect(),
                actions: (0..size).map(|_| rng.random_range(0..output_dim)).collect(),
                targets: (0..size).map(|_| rng.random_range(-2.0..2.0)).collect(),
            }
        }

        pub fn samples(&self) -> Vec<Sample<'_>> {
            self.inputs
                .iter()
                .zip(&self.actions)
                .zip(&self.targets)
                .map(|((x, &a), &t)| Sample {
                    input: x,
                    action: a,
                    target: t,
                })
                .collect()
        }
    }

    /// He-initialized weights with small random biases, so no pre-activation
    /// sits exactly on the rectifier kink.
    pub fn generic_model<R: Rng>(sizes: &[usize], rng: &mut R) -> Mlp {
        let mut m = Mlp::he_init(sizes, rng);
        for l in 0..m.num_layers() {
            for b in m.biases_mut(l) {
                *b = rng.random_range(-0.1..0.1);
            }
        }
        m
    }

    /// Largest relative error between analytic and central-difference gradients.
    /// Relative error is `|a − n| / max(|a|, |n|, 1e-6)`.
    pub fn max_relative_error(model: &Mlp, batch: &Batch, h: f64) -> f64 {
        let samples = batch.samples();
        let (_, analytic) = model.backward(&samples).unwrap();
        let base = model.params();
        let mut probe = model.clone();
        let mut worst: f64 = 0.0;
        for (j, &a) in analytic.iter().enumerate() {
            let mut p = base.clone();
            p[j] = base[j] + h;
            probe.set_params(&p).unwrap();
            let (up, _) = probe.backward(&samples).unwrap();
            p[j] = base[j] - h;
            probe.set_params(&p).unwrap();
            let (down, _) = probe.backward(&samples).unwrap();
            let n = (up - down) / (2.0 * h);
            worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-6));
        }
        worst
    }
}

pub mod convergence {
    use super::{mean_e2e, run_memory, small_static};
    use leosim::engine::TraceMode;

    #[derive(Debug, Clone, Copy)]
    pub struct Outcome {
        pub dijkstra: f64,
        pub learned: f64,
    }

    impl Outcome {
        pub fn ratio(&self) -> f64 {
            self.learned / self.dijkstra
        }
    }

    /// Trains `policy` with ε decaying to zero, saves it, then evaluates the saved
    /// state greedily over a fresh run of `eval_s` seconds.
    pub fn train_then_evaluate(policy: &str, train_s: &str, eval_s: &str, seed: &str) -> Outcome {
        let dir = tempfile::tempdir().unwrap();
        let train_dir = dir.path().join("train");
        let quoted = format!("\"{policy}\"");
        let out_dir = format!("{:?}", train_dir.display().to_string());
        let train = small_static(&[
            ("routing.policy", &quoted),
            ("duration_s", train_s),
            ("seed", seed),
            ("learning.epsilon.start", "1.0"),
            ("learning.epsilon.end", "0.0"),
            ("learning.epsilon.horizon", "20000"),
            ("output.dir", &out_dir),
            ("output.charts", "false"),
        ]);
        leosim::io::run_scenario(&train).unwrap();
        let import = format!("{:?}", train_dir.join("models").display().to_string());
        let eval = small_static(&[
            ("routing.policy", &quoted),
            ("routing.import", &import),
            ("duration_s", eval_s),
            ("seed", seed),
            ("learning.epsilon.start", "0.0"),
            ("learning.epsilon.end", "0.0"),
            ("learning.learning_rate", "0.0"),
        ]);
        let out = run_memory(&eval, TraceMode::Hash);
        assert!(out.stats.counts.balanced());
        Outcome {
            dijkstra: dijkstra_baseline_seeded(eval_s, seed),
            learned: mean_e2e(&out),
        }
    }

    pub fn dijkstra_baseline_seeded(eval_s: &str, seed: &str) -> f64 {
        let cfg = small_static(&[
            ("routing.weight", "\"slant_range\""),
            ("duration_s", eval_s),
            ("seed", seed),
        ]);
        mean_e2e(&run_memory(&cfg, TraceMode::Hash))
    }
}
