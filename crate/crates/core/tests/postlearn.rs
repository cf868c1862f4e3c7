use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use leosim::postlearn::{
    aggregate, aggregation_group, cka_matrix, linear_cka, parameter_variance, ActivationMatrix, AggregationTier,
};
use leosim::routing::mlp::Mlp;
use leosim::topology::{Edge, EdgeKind, NodeId, NodeLayout, TopologySnapshot};

fn random_rows(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn act(rows: &[Vec<f64>]) -> ActivationMatrix {
    ActivationMatrix::new(rows).unwrap()
}

/// Textbook linear CKA through a centering matrix and Gram matrices.
fn oracle_cka(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let h = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let k = &h * (x * x.transpose()) * &h;
    let l = &h * (y * y.transpose()) * &h;
    let hsic = |a: &DMatrix<f64>, b: &DMatrix<f64>| a.component_mul(b).sum();
    hsic(&k, &l) / (hsic(&k, &k).sqrt() * hsic(&l, &l).sqrt())
}

fn random_orthogonal(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

#[test]
fn matches_gram_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let n = rng.random_range(3..30);
        let (p, q) = (rng.random_range(1..8), rng.random_range(1..8));
        let x = random_rows(&mut rng, n, p);
        let y = random_rows(&mut rng, n, q);
        let got = linear_cka(&act(&x), &act(&y)).unwrap();
        let want = oracle_cka(&to_matrix(&x), &to_matrix(&y));
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn invariances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let n = rng.random_range(4..40);
        let p = rng.random_range(2..10);
        let x = random_rows(&mut rng, n, p);
        let py = rng.random_range(2..10);
        let y = random_rows(&mut rng, n, py);
        let (ax, ay) = (act(&x), act(&y));
        assert!((linear_cka(&ax, &ax).unwrap() - 1.0).abs() < 1e-12);

        let base = linear_cka(&ax, &ay).unwrap();
        let q = random_orthogonal(&mut rng, p);
        let rotated = from_matrix(&(to_matrix(&x) * q));
        assert!((linear_cka(&act(&rotated), &ay).unwrap() - base).abs() < 1e-10);

        let s = rng.random_range(0.01..100.0);
        let scaled: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|v| v * s).collect()).collect();
        assert!((linear_cka(&act(&scaled), &ay).unwrap() - base).abs() < 1e-10);

        assert!((linear_cka(&ay, &ax).unwrap() - base).abs() < 1e-12);
    }
}

#[test]
fn independent_noise_is_dissimilar() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_rows(&mut rng, 500, 2);
    let y = random_rows(&mut rng, 500, 2);
    assert!(linear_cka(&act(&x), &act(&y)).unwrap() < 0.05);
}

fn ring_snapshot(planes: usize, per_plane: usize) -> TopologySnapshot {
    let layout = NodeLayout {
        num_planes: planes,
        sats_per_plane: per_plane,
        num_gateways: 1,
    };
    let edge = |a: usize, b: usize, kind| Edge {
        a: NodeId(a),
        b: NodeId(b),
        kind,
        distance: 1.0e6,
        rate: 1.0e9,
        rate_reverse: 1.0e9,
    };
    let mut edges = Vec::new();
    for p in 0..planes {
        for k in 0..per_plane {
            let i = p * per_plane + k;
            edges.push(edge(i, p * per_plane + (k + 1) % per_plane, EdgeKind::IslIntra));
            if p + 1 < planes {
                edges.push(edge(i, i + per_plane, EdgeKind::IslInter));
            }
        }
    }
    edges.push(edge(0, planes * per_plane, EdgeKind::Gsl));
    TopologySnapshot::from_edges(0.0, layout, vec![Default::default(); layout.num_nodes()], edges)
}

fn distinct_models(n: usize, seed: u64) -> Vec<Mlp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Mlp::he_init(&[4, 6, 6, 3], &mut rng)).collect()
}

#[test]
fn aggregation_groups_follow_the_topology() {
    let snap = ring_snapshot(2, 4);
    assert_eq!(
        aggregation_group(0, AggregationTier::OrbitalPlane, &snap),
        vec![0, 1, 2, 3]
    );
    assert_eq!(
        aggregation_group(5, AggregationTier::OrbitalPlane, &snap),
        vec![4, 5, 6, 7]
    );
    assert_eq!(
        aggregation_group(0, AggregationTier::ModelAnticipation, &snap),
        vec![0, 1, 3, 4]
    );
    assert_eq!(
        aggregation_group(6, AggregationTier::ModelAnticipation, &snap),
        vec![2, 5, 6, 7]
    );
    assert_eq!(
        aggregation_group(3, AggregationTier::FullConstellation, &snap),
        (0..8).collect::<Vec<_>>()
    );
}

#[test]
fn plane_tier_homogenizes_within_planes_only() {
    let snap = ring_snapshot(2, 4);
    let models = distinct_models(8, 4);
    let out = aggregate(&models, AggregationTier::OrbitalPlane, &snap).unwrap();
    assert_eq!(parameter_variance(&out[0..4]).unwrap(), 0.0);
    assert_eq!(parameter_variance(&out[4..8]).unwrap(), 0.0);
    assert!(parameter_variance(&out).unwrap() > 0.0);
    let manual: Vec<f64> = (0..models[0].num_params())
        .map(|j| models[0..4].iter().map(|m| m.params()[j]).sum::<f64>() / 4.0)
        .collect();
    for (a, b) in out[2].params().iter().zip(&manual) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn full_tier_gives_unit_cka_and_zero_variance() {
    let snap = ring_snapshot(3, 5);
    let models = distinct_models(15, 5);
    assert!(parameter_variance(&models).unwrap() > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let probes = random_rows(&mut rng, 40, 4);
    let before = cka_matrix(&models, &probes).unwrap();
    assert!(before.iter().flatten().any(|&v| v < 0.99));
    let out = aggregate(&models, AggregationTier::FullConstellation, &snap).unwrap();
    assert_eq!(parameter_variance(&out).unwrap(), 0.0);
    for v in cka_matrix(&out, &probes).unwrap().iter().flatten() {
        assert!((v - 1.0).abs() < 1e-12);
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let snap = ring_snapshot(2, 4);
    assert!(aggregate(&distinct_models(7, 1), AggregationTier::FullConstellation, &snap).is_err());
    let mut mixed = distinct_models(7, 1);
    mixed.push(Mlp::zeros(&[4, 2, 3]));
    assert!(aggregate(&mixed, AggregationTier::OrbitalPlane, &snap).is_err());
    assert!(parameter_variance(&mixed).is_err());
}

proptest! {
    #[test]
    fn cka_is_bounded_and_symmetric(seed in any::<u64>(), n in 3usize..20, p in 1usize..6, q in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = act(&random_rows(&mut rng, n, p));
        let y = act(&random_rows(&mut rng, n, q));
        let a = linear_cka(&x, &y).unwrap();
        let b = linear_cka(&y, &x).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn aggregation_never_increases_variance(seed in any::<u64>(), tier in 0usize..3) {
        let snap = ring_snapshot(2, 4);
        let models = distinct_models(8, seed);
        let out = aggregate(&models, AggregationTier::ALL[tier], &snap).unwrap();
        prop_assert!(parameter_variance(&out).unwrap() <= parameter_variance(&models).unwrap() + 1e-15);
    }
}
