//! Fully connected network: rectifier on hidden layers, identity output.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

const MAGIC: &str = "leosim-mlp 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    /// Row-major `out × in` matrices, one per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// One training sample: input, index of the output being fitted, target value.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<'a> {
    pub input: &'a [f64],
    pub action: usize,
    pub target: f64,
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let weights = sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect();
        let biases = sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
        }
    }

    /// He-normal weights, zero biases.
    pub fn he_init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut m = Self::zeros(sizes);
        for (l, w) in m.weights.iter_mut().enumerate() {
            let std = (2.0 / sizes[l] as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("finite std");
            for x in w.iter_mut() {
                *x = normal.sample(rng);
            }
        }
        m
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.biases[layer]
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Incompatible(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut i = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let (nw, nb) = (w.len(), b.len());
            w.copy_from_slice(&flat[i..i + nw]);
            i += nw;
            b.copy_from_slice(&flat[i..i + nb]);
            i += nb;
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Incompatible(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Activations of every layer, input first.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(x.to_vec());
        let last = self.num_layers() - 1;
        for l in 0..self.num_layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &acts[l];
            let w = &self.weights[l];
            let mut out = self.biases[l].clone();
            for (o, y) in out.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *y += row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                if l != last {
                    *y = y.max(0.0);
                }
            }
            debug_assert_eq!(out.len(), n_out);
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.activations(x).pop().expect("output layer"))
    }

    /// Output of the last hidden layer (the input itself for a single-layer net).
    pub fn forward_hidden(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut acts = self.activations(x);
        acts.pop();
        Ok(acts.pop().expect("hidden layer"))
    }

    /// Mean squared error over the fitted outputs and its gradient with respect
    /// to [`Mlp::params`].
    pub fn backward(&self, batch: &[Sample<'_>]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Incompatible("empty training batch".into()));
        }
        let nl = self.num_layers();
        let mut gw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for s in batch {
            self.check_input(s.input)?;
            if s.action >= self.output_dim() {
                return Err(Error::Incompatible(format!("output index {} out of range", s.action)));
            }
            let acts = self.activations(s.input);
            let err = acts[nl][s.action] - s.target;
            loss += err * err * scale;
            let mut delta = vec![0.0; self.output_dim()];
            delta[s.action] = 2.0 * err * scale;
            for l in (0..nl).rev() {
                let n_in = self.sizes[l];
                let input = &acts[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[l][o] += d;
                    let row = &mut gw[l][o * n_in..(o + 1) * n_in];
                    for (g, &a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l == 0 {
                    break;
                }
                let w = &self.weights[l];
                let mut prev = vec![0.0; n_in];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (p, &wv) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *p += d * wv;
                    }
                }
                for (p, &a) in prev.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        if !loss.is_finite() {
            let bad = batch.iter().filter(|s| !s.target.is_finite()).count();
            return Err(Error::Fault {
                time_s: f64::NAN,
                reason: format!(
                    "non-finite training loss ({loss}); {bad} of {} targets non-finite",
                    batch.len()
                ),
            });
        }
        let mut flat = Vec::with_capacity(self.num_params());
        for (w, b) in gw.into_iter().zip(gb) {
            flat.extend(w);
            flat.extend(b);
        }
        Ok((loss, flat))
    }

    /// `θ ← θ − lr·grad`.
    pub fn sgd_step(&mut self, grad: &[f64], lr: f64) -> Result<()> {
        if grad.len() != self.num_params() {
            return Err(Error::Incompatible("gradient length mismatch".into()));
        }
        if lr == 0.0 {
            return Ok(());
        }
        let mut i = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for x in w.iter_mut().chain(b.iter_mut()) {
                *x -= lr * grad[i];
                i += 1;
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sizes: Vec<String> = self.sizes.iter().map(usize::to_string).collect();
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "activation relu identity").unwrap();
        writeln!(s, "sizes {}", sizes.join(" ")).unwrap();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            for (tag, vals) in [("w", w), ("b", b)] {
                write!(s, "{tag}{l}").unwrap();
                for v in vals {
                    write!(s, " {v:e}").unwrap();
                }
                s.push('\n');
            }
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let err = |reason: String| Error::Model {
            path: origin.to_path_buf(),
            reason,
        };
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(err(format!("missing `{MAGIC}` header")));
        }
        match lines.next() {
            Some("activation relu identity") => {}
            other => return Err(err(format!("unsupported activation line {other:?}"))),
        }
        let sizes: Vec<usize> = lines
            .next()
            .and_then(|l| l.strip_prefix("sizes "))
            .ok_or_else(|| err("missing sizes line".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(format!("bad layer size `{t}`"))))
            .collect::<Result<_>>()?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(err(format!("invalid layer sizes {sizes:?}")));
        }
        let mut m = Mlp::zeros(&sizes);
        for l in 0..m.num_layers() {
            for tag in ["w", "b"] {
                let line = lines.next().ok_or_else(|| err(format!("truncated before {tag}{l}")))?;
                let mut toks = line.split_whitespace();
                let label = format!("{tag}{l}");
                if toks.next() != Some(label.as_str()) {
                    return Err(err(format!("expected `{label}` line")));
                }
                let vals: Vec<f64> = toks
                    .map(|t| t.parse().map_err(|_| err(format!("bad number `{t}` in {label}"))))
                    .collect::<Result<_>>()?;
                let dst = if tag == "w" {
                    &mut m.weights[l]
                } else {
                    &mut m.biases[l]
                };
                if vals.len() != dst.len() {
                    return Err(err(format!(
                        "{label} has {} values, expected {}",
                        vals.len(),
                        dst.len()
                    )));
                }
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(err(format!("{label} contains non-finite values")));
                }
                dst.copy_from_slice(&vals);
            }
        }
        if lines.next() != Some("end") {
            return Err(err("missing end marker (file truncated?)".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn zero_model_outputs_zero() {
        let m = Mlp::zeros(&[3, 4, 2]);
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_path() {
        let mut m = Mlp::zeros(&[1, 1, 1]);
        m.weights_mut(0)[0] = 1.0;
        m.weights_mut(1)[0] = 1.0;
        assert_eq!(m.forward(&[0.75]).unwrap(), vec![0.75]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = Mlp::zeros(&[3, 2]);
        assert!(m.forward(&[1.0]).is_err());
    }

    #[test]
    fn target_equal_prediction_gives_zero_gradient() {
        let m = Mlp::he_init(&[4, 8, 3], &mut rng());
        let x = [0.1, -0.2, 0.3, 0.4];
        let y = m.forward(&x).unwrap()[1];
        let (loss, g) = m
            .backward(&[Sample {
                input: &x,
                action: 1,
                target: y,
            }])
            .unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_lr_keeps_params() {
        let mut m = Mlp::he_init(&[4, 8, 3], &mut rng());
        let before = m.params();
        let g = vec![1.0; m.num_params()];
        m.sgd_step(&g, 0.0).unwrap();
        assert_eq!(m.params(), before);
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let m = Mlp::he_init(&[5, 7, 6, 5], &mut rng());
        let back = Mlp::from_text(&m.to_text(), Path::new("mem")).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn truncated_text_is_rejected() {
        let m = Mlp::he_init(&[5, 7, 5], &mut rng());
        let text = m.to_text();
        let cut = &text[..text.len() / 2];
        assert!(Mlp::from_text(cut, Path::new("mem")).is_err());
        let no_end = text.trim_end().trim_end_matches("end");
        assert!(Mlp::from_text(no_end, Path::new("mem")).is_err());
    }

    #[test]
    fn non_finite_loss_faults() {
        let m = Mlp::zeros(&[1, 1]);
        let r = m.backward(&[Sample {
            input: &[1.0],
            action: 0,
            target: f64::NAN,
        }]);
        assert!(matches!(r, Err(Error::Fault { .. })));
    }
}
