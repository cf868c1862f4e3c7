//! Poisson traffic between every ordered pair of active gateways.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    /// Offered load ℓ relative to the weakest gateway uplink.
    pub load_fraction: f64,
    pub packet_bits: u64,
    /// Gateway indices that send and receive traffic.
    pub active_gateways: Vec<usize>,
}

impl TrafficSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.load_fraction > 0.0 && self.load_fraction <= 1.5) {
            return Err(Error::config(
                "traffic.load_fraction",
                format!("{} is outside (0, 1.5]", self.load_fraction),
            ));
        }
        if self.packet_bits == 0 {
            return Err(Error::config("traffic.packet_bits", "must be positive"));
        }
        Ok(())
    }

    /// Number of unidirectional flows, `n_g · (n_g − 1)`.
    pub fn flow_count(&self) -> usize {
        let n = self.active_gateways.len();
        n * n.saturating_sub(1)
    }

    /// Per-flow Poisson rate in packets/s given the minimum uplink rate.
    pub fn flow_rate(&self, min_uplink_bps: f64) -> f64 {
        let n = self.active_gateways.len();
        if n < 2 {
            return 0.0;
        }
        self.load_fraction * min_uplink_bps / (self.packet_bits as f64 * (n - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flow {
    pub id: usize,
    pub src_gw: usize,
    pub dst_gw: usize,
}

/// All ordered gateway pairs, source-major.
pub fn flows(spec: &TrafficSpec) -> Vec<Flow> {
    let mut out = Vec::with_capacity(spec.flow_count());
    for &s in &spec.active_gateways {
        for &d in &spec.active_gateways {
            if s != d {
                out.push(Flow {
                    id: out.len(),
                    src_gw: s,
                    dst_gw: d,
                });
            }
        }
    }
    out
}

/// Independent exponential inter-arrival sampler per flow.
pub struct TrafficGenerator {
    pub flows: Vec<Flow>,
    pub rate: f64,
    rngs: Vec<ChaCha8Rng>,
    exp: Option<Exp<f64>>,
}

impl TrafficGenerator {
    pub fn new(spec: &TrafficSpec, min_uplink_bps: f64, seed: u64) -> Self {
        let flows = flows(spec);
        let rate = spec.flow_rate(min_uplink_bps);
        let rngs = flows
            .iter()
            .map(|f| substream(seed, Stream::Traffic, f.id as u64))
            .collect();
        let exp = (rate > 0.0 && rate.is_finite()).then(|| Exp::new(rate).expect("positive rate"));
        TrafficGenerator { flows, rate, rngs, exp }
    }

    /// Seconds until the next packet of `flow`, or `None` if the flow is silent.
    pub fn next_interarrival(&mut self, flow: usize) -> Option<f64> {
        let exp = self.exp.as_ref()?;
        let rng = &mut self.rngs[flow];
        // guard against a zero draw so packet creation times stay strictly increasing
        loop {
            let x = exp.sample(rng);
            if x > 0.0 {
                return Some(x);
            }
            let _: u32 = rng.random();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, load: f64) -> TrafficSpec {
        TrafficSpec {
            load_fraction: load,
            packet_bits: 64_800,
            active_gateways: (0..n).collect(),
        }
    }

    #[test]
    fn flow_counts() {
        assert_eq!(flows(&spec(8, 0.5)).len(), 56);
        assert_eq!(flows(&spec(18, 0.5)).len(), 306);
        assert_eq!(spec(1, 0.5).flow_count(), 0);
        assert!(flows(&spec(8, 0.5)).iter().all(|f| f.src_gw != f.dst_gw));
    }

    #[test]
    fn load_validation() {
        assert!(spec(2, -1.0).validate().is_err());
        assert!(spec(2, 1.6).validate().is_err());
        assert!(spec(2, 1.5).validate().is_ok());
    }

    #[test]
    fn rate_formula() {
        let s = spec(8, 0.5);
        let r = s.flow_rate(44.53e6);
        assert!((r - 0.5 * 44.53e6 / (64_800.0 * 7.0)).abs() < 1e-9);
    }

    #[test]
    fn mean_interarrival_matches_rate() {
        let s = spec(2, 0.5);
        let mut g = TrafficGenerator::new(&s, 10e6, 99);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| g.next_interarrival(0).unwrap()).sum::<f64>() / n as f64;
        let expect = 1.0 / g.rate;
        assert!((mean - expect).abs() / expect < 0.01, "{mean} vs {expect}");
    }

    #[test]
    fn flows_do_not_share_draws() {
        let s = spec(3, 0.5);
        let mut a = TrafficGenerator::new(&s, 10e6, 5);
        let mut b = TrafficGenerator::new(&spec(4, 0.5), 10e6, 5);
        // flow 0 of both is gw0 -> gw1 and draws from the same stream
        let rate_ratio = b.rate / a.rate;
        let xa = a.next_interarrival(0).unwrap();
        let xb = b.next_interarrival(0).unwrap();
        assert!((xa / xb - rate_ratio).abs() < 1e-9);
    }
}
