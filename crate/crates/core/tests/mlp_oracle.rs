mod common;

use common::gradcheck::{generic_model, max_relative_error, Batch};
use leosim::routing::mlp::{Mlp, Sample};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn nalgebra_forward(model: &Mlp, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let sizes = model.sizes();
    let mut a = DVector::from_column_slice(x);
    let mut hidden = a.clone();
    for l in 0..model.num_layers() {
        let w = DMatrix::from_row_slice(sizes[l + 1], sizes[l], model.weights(l));
        let b = DVector::from_column_slice(model.biases(l));
        let z = w * &a + b;
        if l + 1 < model.num_layers() {
            a = z.map(|v| v.max(0.0));
            hidden = a.clone();
        } else {
            a = z;
        }
    }
    (a.as_slice().to_vec(), hidden.as_slice().to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_matches_matrix_oracle(
        seed in any::<u64>(),
        hidden in prop::collection::vec(1usize..12, 1..4),
        input in 1usize..10,
        output in 1usize..6,
    ) {
        let mut sizes = vec![input];
        sizes.extend(hidden);
        sizes.push(output);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = Mlp::he_init(&sizes, &mut rng);
        let batch = Batch::random(&mut rng, 4, input, output);
        for x in &batch.inputs {
            let (want, want_hidden) = nalgebra_forward(&model, x);
            let got = model.forward(x).unwrap();
            let got_hidden = model.forward_hidden(x).unwrap();
            for (g, w) in got.iter().zip(&want).chain(got_hidden.iter().zip(&want_hidden)) {
                prop_assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()));
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences_on_small_nets(
        seed in any::<u64>(),
        hidden in prop::collection::vec(2usize..8, 1..3),
    ) {
        let mut sizes = vec![5];
        sizes.extend(hidden);
        sizes.push(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = generic_model(&sizes, &mut rng);
        let batch = Batch::random(&mut rng, 6, 5, 3);
        prop_assert!(max_relative_error(&model, &batch, 1e-6) < 1e-4);
    }

    #[test]
    fn text_format_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = Mlp::he_init(&[4, 7, 3], &mut rng);
        let back = Mlp::from_text(&model.to_text(), std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back, model);
    }
}

#[test]
fn loss_is_mean_squared_error_on_selected_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = Mlp::he_init(&[3, 4, 2], &mut rng);
    let batch = Batch::random(&mut rng, 5, 3, 2);
    let (loss, _) = model.backward(&batch.samples()).unwrap();
    let want: f64 = batch
        .inputs
        .iter()
        .zip(&batch.actions)
        .zip(&batch.targets)
        .map(|((x, &a), t)| (nalgebra_forward(&model, x).0[a] - t).powi(2))
        .sum::<f64>()
        / 5.0;
    assert!((loss - want).abs() < 1e-12);
}

#[test]
fn gradient_descent_fits_a_linear_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut model = Mlp::he_init(&[2, 16, 1], &mut rng);
    let inputs: Vec<Vec<f64>> = (0..64)
        .map(|i| vec![(i % 8) as f64 / 8.0, (i / 8) as f64 / 8.0])
        .collect();
    let targets: Vec<f64> = inputs.iter().map(|x| 0.5 * x[0] - 0.25 * x[1] + 0.1).collect();
    let samples: Vec<Sample> = inputs
        .iter()
        .zip(&targets)
        .map(|(x, &t)| Sample {
            input: x,
            action: 0,
            target: t,
        })
        .collect();
    let (first, _) = model.backward(&samples).unwrap();
    for _ in 0..2000 {
        let (_, g) = model.backward(&samples).unwrap();
        model.sgd_step(&g, 0.05).unwrap();
    }
    let (last, _) = model.backward(&samples).unwrap();
    assert!(last < first * 0.01, "{first} -> {last}");
}

#[test]
fn malformed_model_files_are_rejected() {
    let p = std::path::Path::new("bad.mlp");
    for text in [
        "",
        "leosim-mlp 2\n",
        "leosim-mlp 1\nactivation relu identity\nsizes 2 1\nw0 1\nb0 0\nend\n",
    ] {
        assert!(Mlp::from_text(text, p).is_err(), "{text:?}");
    }
}
