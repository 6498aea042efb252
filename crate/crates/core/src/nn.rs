//! Small fully connected networks with hand-written backpropagation.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix
//! (row-major, `out × in`) followed by the bias vector. Hidden layers use
//! `tanh`; the output layer is affine.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
}

impl Layout {
    pub fn new(input: usize, hidden: Vec<usize>, output: usize) -> Self {
        Self { input, hidden, output }
    }

    /// Width of every layer including input and output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input);
        w.extend_from_slice(&self.hidden);
        w.push(self.output);
        w
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }
}

/// Per-sample activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Cache {
    /// `acts[0]` is the input, `acts[l]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layout: Layout,
    pub params: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four fixed lanes: faster than a serial sum and still deterministic.
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

impl Mlp {
    pub fn zeros(layout: Layout) -> Self {
        let n = layout.param_count();
        Self {
            layout,
            params: vec![0.0; n],
        }
    }

    /// Uniform Glorot initialization with zero biases; the output layer is
    /// scaled by `output_gain`.
    pub fn glorot<R: Rng>(layout: Layout, output_gain: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(layout);
        let widths = net.layout.widths();
        let n_layers = widths.len() - 1;
        let mut off = 0;
        for (l, w) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let gain = if l + 1 == n_layers { output_gain } else { 1.0 };
            let bound = gain * (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[off..off + fan_in * fan_out] {
                *p = (rng.random::<f64>() * 2.0 - 1.0) * bound;
            }
            off += fan_in * fan_out + fan_out;
        }
        net
    }

    pub fn from_params(layout: Layout, params: Vec<f64>) -> Result<Self> {
        if params.len() != layout.param_count() {
            return Err(Error::LayoutMismatch(format!(
                "layout needs {} parameters, got {}",
                layout.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation("non-finite network parameter".into()));
        }
        Ok(Self { layout, params })
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.layout.input {
            return Err(Error::Validation(format!(
                "network expects {} inputs, got {}",
                self.layout.input,
                x.len()
            )));
        }
        Ok(())
    }

    /// Forward pass recording activations into `cache`.
    pub fn forward_cached<'c>(&self, x: &[f64], cache: &'c mut Cache) -> Result<&'c [f64]> {
        self.check_input(x)?;
        let widths = self.layout.widths();
        let n_layers = widths.len() - 1;
        cache.acts.resize_with(widths.len(), Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x);
        let mut off = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (widths[l], widths[l + 1]);
            let (w, rest) = self.params[off..].split_at(n_in * n_out);
            let b = &rest[..n_out];
            let (head, tail) = cache.acts.split_at_mut(l + 1);
            let input = &head[l];
            let out = &mut tail[0];
            out.clear();
            out.extend(w.chunks_exact(n_in).zip(b).map(|(row, bias)| dot(row, input) + bias));
            if l + 1 < n_layers {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            off += n_in * n_out + n_out;
        }
        Ok(cache.output())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = Cache::default();
        Ok(self.forward_cached(x, &mut cache)?.to_vec())
    }

    /// Accumulates `d_out`-weighted parameter gradients of the last
    /// [`forward_cached`](Self::forward_cached) call into `grad`.
    pub fn backward(&self, cache: &mut Cache, d_out: &[f64], grad: &mut [f64]) {
        let widths = self.layout.widths();
        let n_layers = widths.len() - 1;
        debug_assert_eq!(d_out.len(), self.layout.output);
        debug_assert_eq!(grad.len(), self.params.len());
        let offsets: Vec<usize> = widths
            .windows(2)
            .scan(0, |off, w| {
                let o = *off;
                *off += w[0] * w[1] + w[1];
                Some(o)
            })
            .collect();
        let Cache {
            acts,
            delta,
            delta_prev,
        } = cache;
        delta.clear();
        delta.extend_from_slice(d_out);
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (widths[l], widths[l + 1]);
            let off = offsets[l];
            let input = &acts[l];
            let (gw, gb) = grad[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            for ((row, gbias), &d) in gw.chunks_exact_mut(n_in).zip(gb.iter_mut()).zip(delta.iter()) {
                *gbias += d;
                for (g, &xi) in row.iter_mut().zip(input) {
                    *g += d * xi;
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[off..off + n_in * n_out];
            delta_prev.clear();
            delta_prev.resize(n_in, 0.0);
            for (row, &d) in w.chunks_exact(n_in).zip(delta.iter()) {
                for (dp, &wi) in delta_prev.iter_mut().zip(row) {
                    *dp += d * wi;
                }
            }
            // Through tanh: d/dz tanh(z) = 1 - tanh(z)².
            for (dp, &a) in delta_prev.iter_mut().zip(input) {
                *dp *= 1.0 - a * a;
            }
            std::mem::swap(delta, delta_prev);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

/// Gradient-descent state for one flat parameter vector.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd,
    Adam { m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, n_params: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::Adam {
                m: vec![0.0; n_params],
                v: vec![0.0; n_params],
                t: 0,
            },
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        match self {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adam { m, v, t } => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                *t += 1;
                let c1 = 1.0 - B1.powi(*t);
                let c2 = 1.0 - B2.powi(*t);
                for (((p, g), m), v) in params.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *m = B1 * *m + (1.0 - B1) * g;
                    *v = B2 * *v + (1.0 - B2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
                }
            }
        }
    }
}

/// Rescales `grad` in place so its L2 norm is at most `max_norm`.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) {
    let n = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if n > max_norm && n > 0.0 {
        let s = max_norm / n;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss(net: &Mlp, x: &[f64], w: &[f64]) -> f64 {
        net.forward(x).unwrap().iter().zip(w).map(|(o, w)| o * w).sum()
    }

    #[test]
    fn param_count_matches_layout() {
        let l = Layout::new(12, vec![64, 64], 3);
        assert_eq!(l.param_count(), 12 * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(Layout::new(4, vec![5], 2));
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn wrong_input_size_is_rejected() {
        let net = Mlp::zeros(Layout::new(4, vec![5], 2));
        assert!(matches!(net.forward(&[1.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::glorot(Layout::new(5, vec![7, 6], 3), 1.0, &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let w = [0.3, -1.2, 0.7];
        let mut cache = Cache::default();
        net.forward_cached(&x, &mut cache).unwrap();
        let mut grad = vec![0.0; net.params.len()];
        net.backward(&mut cache, &w, &mut grad);
        let h = 1e-6;
        for (k, &g) in grad.iter().enumerate() {
            let mut p = net.clone();
            p.params[k] += h;
            let up = loss(&p, &x, &w);
            p.params[k] -= 2.0 * h;
            let down = loss(&p, &x, &w);
            let fd = (up - down) / (2.0 * h);
            assert!((fd - g).abs() <= 1e-7 + 1e-6 * fd.abs(), "param {k}: {fd} vs {g}");
        }
    }

    #[test]
    fn dot_handles_remainders() {
        let a: Vec<f64> = (1..=7).map(f64::from).collect();
        assert_eq!(dot(&a, &a), 140.0);
    }

    #[test]
    fn sgd_and_adam_descend_a_quadratic() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
            let mut p = vec![3.0, -2.0];
            let mut opt = Optimizer::new(kind, 2);
            for _ in 0..2000 {
                let g: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
                opt.step(&mut p, &g, 0.01);
            }
            assert!(p.iter().all(|x| x.abs() < 1e-2), "{kind:?}: {p:?}");
        }
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
            let mut p = vec![0.25, -4.0];
            Optimizer::new(kind, 2).step(&mut p, &[1.0, 1.0], 0.0);
            assert_eq!(p, vec![0.25, -4.0]);
        }
    }

    #[test]
    fn grad_clipping_bounds_norm() {
        let mut g = vec![3.0, 4.0];
        clip_grad_norm(&mut g, 1.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
    }
}
