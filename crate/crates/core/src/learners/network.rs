//! Dense layers, forward pass and backpropagation.
//!
//! Hidden layers use `tanh`; the single output unit is a raw logit (the
//! caller applies the sigmoid or the clamp). Weights are stored input-major
//! (`weights[k * n_out + o]` connects input `k` to output `o`) so that the
//! inner loops of both passes run over contiguous memory.

use rand::RngExt;

use crate::dataset::FeatureMatrix;
use crate::rng::SimRng;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F = f64> {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Real> Dense<F> {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Dense {
            n_in,
            n_out,
            weights: vec![F::zero(); n_in * n_out],
            bias: vec![F::zero(); n_out],
        }
    }

    /// Weights uniform in `[-1/sqrt(n_in), 1/sqrt(n_in)]`, zero biases.
    pub fn random(n_in: usize, n_out: usize, rng: &mut SimRng) -> Self {
        let bound = 1.0 / (n_in as f64).sqrt();
        let weights = (0..n_in * n_out)
            .map(|_| F::lit(rng.random_range(-bound..=bound)))
            .collect();
        Dense {
            n_in,
            n_out,
            weights,
            bias: vec![F::zero(); n_out],
        }
    }

    pub fn weight(&self, input: usize, output: usize) -> F {
        self.weights[input * self.n_out + output]
    }
}

/// Parameters of a feedforward network with one output unit. Logistic and
/// linear models are the zero-hidden-layer case.
#[derive(Debug, Clone, PartialEq)]
pub struct NnParams<F = f64> {
    pub layers: Vec<Dense<F>>,
}

impl<F: Real> NnParams<F> {
    pub fn zeros(n_in: usize, hidden: &[usize]) -> Self {
        Self::build(n_in, hidden, |i, o| Dense::zeros(i, o))
    }

    pub fn random(n_in: usize, hidden: &[usize], rng: &mut SimRng) -> Self {
        Self::build(n_in, hidden, |i, o| Dense::random(i, o, rng))
    }

    fn build(n_in: usize, hidden: &[usize], mut layer: impl FnMut(usize, usize) -> Dense<F>) -> Self {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(n_in);
        widths.extend_from_slice(hidden);
        widths.push(1);
        NnParams {
            layers: widths.windows(2).map(|w| layer(w[0], w[1])).collect(),
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn hidden_layout(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.n_out)
            .collect()
    }

    /// Shapes chain from the input through the hidden widths to one output.
    pub fn is_consistent(&self) -> bool {
        !self.layers.is_empty()
            && self.layers.windows(2).all(|w| w[0].n_out == w[1].n_in)
            && self.layers.last().map(|l| l.n_out) == Some(1)
            && self
                .layers
                .iter()
                .all(|l| l.weights.len() == l.n_in * l.n_out && l.bias.len() == l.n_out)
    }

    /// Squared L2 norm of the weights (biases excluded).
    pub fn weight_norm2(&self) -> F {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .map(|&w| w * w)
            .sum()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Every parameter, layer by layer, weights before biases.
    pub fn flat(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat(&mut self, values: &[F]) {
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().expect("flat parameter vector too short");
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Output logit for one input row.
    pub fn logit(&self, x: &[F]) -> F {
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = layer.bias.clone();
            for (k, &a) in cur.iter().enumerate() {
                axpy(a, &layer.weights[k * layer.n_out..(k + 1) * layer.n_out], &mut z);
            }
            if li != last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            cur = z;
        }
        cur[0]
    }
}

#[inline]
fn axpy<F: Real>(a: F, x: &[F], y: &mut [F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot<F: Real>(x: &[F], y: &[F]) -> F {
    let mut acc = [F::zero(); 4];
    let cx = x.chunks_exact(4);
    let cy = y.chunks_exact(4);
    let (rx, ry) = (cx.remainder(), cy.remainder());
    for (a, b) in cx.zip(cy) {
        acc[0] += a[0] * b[0];
        acc[1] += a[1] * b[1];
        acc[2] += a[2] * b[2];
        acc[3] += a[3] * b[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (&a, &b) in rx.iter().zip(ry) {
        s += a * b;
    }
    s
}

pub fn sigmoid<F: Real>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

/// `-y ln(sigmoid(z)) - (1-y) ln(1 - sigmoid(z))` computed from the logit.
fn logit_cross_entropy<F: Real>(z: F, y: F) -> F {
    // softplus(z) - y z, stable for either sign of z
    let softplus = if z > F::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - y * z
}

/// Reusable activation buffers for a batch.
#[derive(Debug, Default)]
pub(crate) struct Workspace<F> {
    /// `acts[0]` is the input batch, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<F>>,
    deltas: Vec<Vec<F>>,
}

impl<F: Real> Workspace<F> {
    pub(crate) fn new() -> Self {
        Workspace {
            acts: Vec::new(),
            deltas: Vec::new(),
        }
    }
}

/// Forward pass over `rows` rows stored contiguously in `x`; returns the
/// logits (one per row). Activations are kept in `ws` for backprop.
pub(crate) fn forward_batch<F: Real>(params: &NnParams<F>, x: &[F], rows: usize, ws: &mut Workspace<F>) {
    let n_layers = params.layers.len();
    ws.acts.resize_with(n_layers + 1, Vec::new);
    ws.acts[0].clear();
    ws.acts[0].extend_from_slice(x);
    for (li, layer) in params.layers.iter().enumerate() {
        let (head, tail) = ws.acts.split_at_mut(li + 1);
        let input = &head[li];
        let out = &mut tail[0];
        out.clear();
        out.resize(rows * layer.n_out, F::zero());
        for r in 0..rows {
            let z = &mut out[r * layer.n_out..(r + 1) * layer.n_out];
            z.copy_from_slice(&layer.bias);
            let a_row = &input[r * layer.n_in..(r + 1) * layer.n_in];
            for (k, &a) in a_row.iter().enumerate() {
                axpy(a, &layer.weights[k * layer.n_out..(k + 1) * layer.n_out], z);
            }
        }
        if li + 1 != n_layers {
            out.iter_mut().for_each(|v| *v = v.tanh());
        }
    }
}

/// Summed cross-entropy over the batch plus `alpha/2 * ||W||^2`, and its
/// gradient accumulated into `grad` (overwritten).
pub(crate) fn loss_and_gradient_into<F: Real>(
    params: &NnParams<F>,
    x: &[F],
    labels: &[u8],
    alpha: F,
    ws: &mut Workspace<F>,
    grad: &mut NnParams<F>,
) -> F {
    let rows = labels.len();
    forward_batch(params, x, rows, ws);
    let n_layers = params.layers.len();
    let logits = &ws.acts[n_layers];

    ws.deltas.resize_with(n_layers + 1, Vec::new);
    let out_delta = &mut ws.deltas[n_layers];
    out_delta.clear();
    let mut loss = F::zero();
    for (r, &y) in labels.iter().enumerate() {
        let y = if y == 1 { F::one() } else { F::zero() };
        let z = logits[r];
        loss += logit_cross_entropy(z, y);
        out_delta.push(sigmoid(z) - y);
    }
    loss += F::lit(0.5) * alpha * params.weight_norm2();

    for li in (0..n_layers).rev() {
        let layer = &params.layers[li];
        let g = &mut grad.layers[li];
        g.weights.iter_mut().for_each(|v| *v = F::zero());
        g.bias.iter_mut().for_each(|v| *v = F::zero());
        let (acts_in, delta) = (&ws.acts[li], &ws.deltas[li + 1]);
        for r in 0..rows {
            let d_row = &delta[r * layer.n_out..(r + 1) * layer.n_out];
            let a_row = &acts_in[r * layer.n_in..(r + 1) * layer.n_in];
            for (k, &a) in a_row.iter().enumerate() {
                axpy(a, d_row, &mut g.weights[k * layer.n_out..(k + 1) * layer.n_out]);
            }
            axpy(F::one(), d_row, &mut g.bias);
        }
        for (gw, &w) in g.weights.iter_mut().zip(&layer.weights) {
            *gw += alpha * w;
        }
        if li > 0 {
            // delta of the previous (tanh) layer
            let mut prev = std::mem::take(&mut ws.deltas[li]);
            prev.clear();
            prev.resize(rows * layer.n_in, F::zero());
            let delta = &ws.deltas[li + 1];
            for r in 0..rows {
                let d_row = &delta[r * layer.n_out..(r + 1) * layer.n_out];
                let a_row = &acts_in[r * layer.n_in..(r + 1) * layer.n_in];
                let p_row = &mut prev[r * layer.n_in..(r + 1) * layer.n_in];
                for k in 0..layer.n_in {
                    let back = dot(d_row, &layer.weights[k * layer.n_out..(k + 1) * layer.n_out]);
                    p_row[k] = back * (F::one() - a_row[k] * a_row[k]);
                }
            }
            ws.deltas[li] = prev;
        }
    }
    loss
}

/// Gradient of `sum_i CE_i + alpha/2 * ||W||^2` over the rows of `batch`
/// (biases unregularized), together with that loss.
pub fn loss_gradient<F: Real>(params: &NnParams<F>, batch: &FeatureMatrix<F>, alpha: F) -> (F, NnParams<F>) {
    let mut grad = NnParams {
        layers: params
            .layers
            .iter()
            .map(|l| Dense::zeros(l.n_in, l.n_out))
            .collect(),
    };
    let mut ws = Workspace::new();
    let loss = loss_and_gradient_into(params, batch.values(), batch.labels(), alpha, &mut ws, &mut grad);
    (loss, grad)
}

/// The objective [`loss_gradient`] differentiates, without the gradient.
pub fn regularized_loss<F: Real>(params: &NnParams<F>, batch: &FeatureMatrix<F>, alpha: F) -> F {
    let ce: F = (0..batch.n_rows())
        .map(|r| {
            let y = if batch.labels()[r] == 1 { F::one() } else { F::zero() };
            logit_cross_entropy(params.logit(batch.row(r)), y)
        })
        .sum();
    ce + F::lit(0.5) * alpha * params.weight_norm2()
}

/// Logits for every row of `x` (`rows` rows, contiguous).
pub(crate) fn batch_logits<F: Real>(params: &NnParams<F>, x: &[F], rows: usize, ws: &mut Workspace<F>) -> Vec<F> {
    forward_batch(params, x, rows, ws);
    ws.acts[params.layers.len()].clone()
}
