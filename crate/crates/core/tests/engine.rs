mod common;

use common::{config, fifo_violations, mean_e2e, run_memory, small_static};
use leosim::channel::SPEED_OF_LIGHT;
use leosim::engine::{PacketStatus, TraceMode, TrafficGenerator, TrafficSpec};

fn kepler(extra: &[(&str, &str)]) -> leosim::io::ScenarioConfig {
    let mut sets = vec![("duration_s", "10"), ("routing.weight", "\"hop\"")];
    sets.extend_from_slice(extra);
    config(&sets)
}

#[test]
fn packets_are_conserved_and_served_in_order() {
    let cases = [
        kepler(&[]),
        kepler(&[("engine.queue_capacity", "2"), ("traffic.load_fraction", "1.2")]),
        kepler(&[("engine.ttl_hops", "3")]),
        small_static(&[("routing.policy", "\"q_routing\""), ("traffic.load_fraction", "0.9")]),
        small_static(&[("routing.policy", "\"madrl\""), ("duration_s", "5")]),
    ];
    for (i, cfg) in cases.iter().enumerate() {
        let out = run_memory(cfg, TraceMode::Full);
        let c = out.stats.counts;
        assert!(c.balanced(), "case {i}: {c:?}");
        assert!(c.created > 0, "case {i}");
        assert_eq!(out.recorder.packets.len() as u64, c.created, "case {i}");
        for status in [
            PacketStatus::Delivered,
            PacketStatus::Dropped,
            PacketStatus::Stuck,
            PacketStatus::InFlight,
        ] {
            let n = out.recorder.packets.iter().filter(|p| p.status == status).count() as u64;
            let want = match status {
                PacketStatus::Delivered => c.delivered,
                PacketStatus::Dropped => c.dropped,
                PacketStatus::Stuck => c.stuck,
                PacketStatus::InFlight => c.in_flight,
            };
            assert_eq!(n, want, "case {i} {status:?}");
        }
        assert_eq!(fifo_violations(out.trace.records().unwrap()), 0, "case {i}");
        assert!(out.stats.max_occupancy <= cfg.engine.queue_capacity, "case {i}");
    }
}

#[test]
fn overload_and_short_ttl_produce_drops_and_stuck_packets() {
    let out = run_memory(
        &kepler(&[("engine.queue_capacity", "2"), ("traffic.load_fraction", "1.2")]),
        TraceMode::Hash,
    );
    assert!(out.stats.counts.dropped > 0);
    let out = run_memory(&kepler(&[("engine.ttl_hops", "3")]), TraceMode::Hash);
    assert!(out.stats.counts.stuck > 0);
    assert!(out
        .recorder
        .packets
        .iter()
        .filter(|p| p.status == PacketStatus::Stuck)
        .all(|p| p.hops() >= 3));
}

#[test]
fn identical_seeds_give_identical_traces() {
    let a = run_memory(&kepler(&[]), TraceMode::Hash);
    let b = run_memory(&kepler(&[]), TraceMode::Hash);
    assert_eq!(a.trace_digest, b.trace_digest);
    assert_eq!(a.stats.counts, b.stats.counts);
    let c = run_memory(&kepler(&[("seed", "2")]), TraceMode::Hash);
    assert_ne!(a.trace_digest, c.trace_digest);
}

#[test]
fn learning_runs_are_deterministic_too() {
    for policy in ["\"q_routing\"", "\"madrl\""] {
        let cfg = small_static(&[("routing.policy", policy), ("duration_s", "5")]);
        let a = run_memory(&cfg, TraceMode::Hash);
        let b = run_memory(&cfg, TraceMode::Hash);
        assert_eq!(a.trace_digest, b.trace_digest, "{policy}");
    }
}

#[test]
fn static_low_load_latency_is_an_exact_sum_of_hop_terms() {
    let cfg = kepler(&[
        ("traffic.load_fraction", "0.01"),
        ("engine.update_interval_s", "0"),
        ("duration_s", "30"),
    ]);
    let out = run_memory(&cfg, TraceMode::Hash);
    let snap = cfg.scenario().unwrap().snapshot_at(0.0);
    let bits = cfg.traffic.packet_bits as f64;
    let delivered: Vec<_> = out
        .recorder
        .packets
        .iter()
        .filter(|p| p.status == PacketStatus::Delivered)
        .collect();
    assert!(delivered.len() > 100);
    for p in &delivered {
        let (q, tx, prop) = p.components();
        assert_eq!(q + tx + prop, p.e2e().unwrap());
        for w in p.path.windows(2) {
            let (h, nxt) = (&w[0], &w[1]);
            let e = snap.edge_between(h.node, nxt.node).expect("hop follows a link");
            let tx_want = ((bits / e.rate_from(h.node)) * 1e9).round().max(1.0) as u64;
            let prop_want = ((e.distance / SPEED_OF_LIGHT) * 1e9).round().max(1.0) as u64;
            assert_eq!(h.tx, tx_want);
            assert_eq!(h.prop, prop_want);
            assert_eq!(nxt.arrival, h.arrival + h.queue + h.tx + h.prop);
        }
    }
    let s = &out.stats;
    assert!(s.mean_secs(s.sum_queue) < 0.05 * mean_e2e(&out));
}

#[test]
fn flow_rate_follows_weakest_uplink() {
    let cfg = kepler(&[("traffic.load_fraction", "0.3")]);
    let scenario = cfg.scenario().unwrap();
    let snap = scenario.snapshot_at(0.0);
    let min_up = (0..8)
        .filter_map(|g| snap.gateway_edge(g))
        .map(|e| e.rate_reverse)
        .fold(f64::INFINITY, f64::min);
    let out = run_memory(
        &kepler(&[("traffic.load_fraction", "0.3"), ("duration_s", "0.5")]),
        TraceMode::Hash,
    );
    let want = 0.3 * min_up / (64_800.0 * 7.0);
    let got = out.stats.counts.created as f64 / (56.0 * 0.5);
    assert!((got - want).abs() / want < 0.1, "{got} vs {want}");
}

#[test]
fn interarrival_times_are_exponential() {
    let spec = TrafficSpec {
        load_fraction: 0.5,
        packet_bits: 1000,
        active_gateways: vec![0, 1, 2],
    };
    assert_eq!(spec.flow_count(), 6);
    let mut g = TrafficGenerator::new(&spec, 1e6, 7);
    let rate = g.rate;
    assert!((rate - 0.5 * 1e6 / (1000.0 * 2.0)).abs() < 1e-9);
    let xs: Vec<f64> = (0..40_000).map(|_| g.next_interarrival(1).unwrap()).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    assert!((mean * rate - 1.0).abs() < 0.03, "mean {mean}");
    assert!((var.sqrt() * rate - 1.0).abs() < 0.05, "std {}", var.sqrt());
    // memorylessness: P(X > 2/λ) ≈ e^-2
    let tail = xs.iter().filter(|&&x| x > 2.0 / rate).count() as f64 / xs.len() as f64;
    assert!((tail - (-2f64).exp()).abs() < 0.01);
}

#[test]
fn rebuilds_happen_on_every_interval_boundary() {
    let out = run_memory(
        &kepler(&[("duration_s", "60"), ("traffic.load_fraction", "0.01")]),
        TraceMode::Hash,
    );
    assert_eq!(out.stats.rebuilds, 4);
    let out = run_memory(
        &kepler(&[("duration_s", "59.9"), ("traffic.load_fraction", "0.01")]),
        TraceMode::Hash,
    );
    assert_eq!(out.stats.rebuilds, 3);
    let out = run_memory(
        &kepler(&[("engine.update_interval_s", "0"), ("traffic.load_fraction", "0.01")]),
        TraceMode::Hash,
    );
    assert_eq!(out.stats.rebuilds, 0);
}

#[test]
fn delivered_packets_only_traverse_existing_links_and_end_at_their_gateway() {
    let cfg = kepler(&[("engine.update_interval_s", "0")]);
    let out = run_memory(&cfg, TraceMode::Hash);
    let snap = &out.final_snapshot;
    let layout = snap.layout;
    for p in out
        .recorder
        .packets
        .iter()
        .filter(|p| p.status == PacketStatus::Delivered)
    {
        assert_eq!(p.path[0].node, layout.gateway(p.src_gw));
        assert_eq!(p.current_node(), layout.gateway(p.dst_gw));
        for w in p.path.windows(2) {
            assert!(snap.edge_between(w[0].node, w[1].node).is_some());
        }
        for h in &p.path[1..p.path.len() - 1] {
            assert!(layout.sat_id(h.node).is_some(), "relayed through gateway {}", h.node);
        }
    }
}
