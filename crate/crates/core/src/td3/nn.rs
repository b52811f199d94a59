//! Dense feed-forward networks with hand-written backpropagation.
//!
//! Activations are stored row-major as `(batch, features)`; a layer computes
//! `z = x · W + b` with `W` of shape `(inputs, outputs)`.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply_inplace(self, z: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
        }
    }

    /// Multiplies `grad` (w.r.t. the activation output `a`) by `da/dz`.
    fn backprop_inplace(self, grad: &mut Array2<f64>, out: &Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => Zip::from(grad).and(out).for_each(|g, &a| {
                if a <= 0.0 {
                    *g = 0.0;
                }
            }),
            Activation::Tanh => Zip::from(grad).and(out).for_each(|g, &a| *g *= 1.0 - a * a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Shape `(inputs, outputs)`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Uniform fan-in initialisation, `U(−1/√inputs, 1/√inputs)` for both
    /// weights and biases.
    pub fn uniform<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut layer = Self::zeros(inputs, outputs);
        layer
            .weights
            .iter_mut()
            .chain(layer.bias.iter_mut())
            .for_each(|w| *w = rng.random_range(-bound..=bound));
        layer
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }
}

/// Multi-layer perceptron: `hidden` activation between layers, `output`
/// activation on the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub hidden: Activation,
    pub output: Activation,
}

/// Per-layer gradients, same shapes as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    /// All gradient entries in parameter order.
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `outputs[0]` is the network input; `outputs[l + 1]` is layer l's
    /// activated output.
    outputs: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("cache holds at least the input")
    }
}

impl Mlp {
    /// Network with the given layer sizes (`[inputs, hidden..., outputs]`).
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self {
            layers: sizes
                .windows(2)
                .map(|w| Dense::uniform(w[0], w[1], rng))
                .collect(),
            hidden,
            output,
        })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Dense::outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut a = self.layer_forward(0, x);
        for l in 1..self.layers.len() {
            a = self.layer_forward(l, a.view());
        }
        Ok(a)
    }

    fn layer_forward(&self, l: usize, x: ArrayView2<f64>) -> Array2<f64> {
        let layer = &self.layers[l];
        let mut z = x.dot(&layer.weights);
        z += &layer.bias;
        self.activation_for(l).apply_inplace(&mut z);
        z
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(&x)?;
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(x.to_owned());
        for l in 0..self.layers.len() {
            let next = self.layer_forward(l, outputs[l].view());
            outputs.push(next);
        }
        Ok(ForwardCache { outputs })
    }

    /// Gradients of a scalar loss w.r.t. parameters and input, given
    /// `d_out = ∂loss/∂output` for the cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, d_out: Array2<f64>) -> (Gradients, Array2<f64>) {
        self.backward_impl(cache, d_out, true)
    }

    /// Only the gradient w.r.t. the input; skips the weight gradients.
    pub fn backward_input(&self, cache: &ForwardCache, d_out: Array2<f64>) -> Array2<f64> {
        self.backward_impl(cache, d_out, false).1
    }

    fn backward_impl(
        &self,
        cache: &ForwardCache,
        d_out: Array2<f64>,
        with_params: bool,
    ) -> (Gradients, Array2<f64>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_out;
        for l in (0..self.layers.len()).rev() {
            self.activation_for(l)
                .backprop_inplace(&mut delta, &cache.outputs[l + 1]);
            let input = &cache.outputs[l];
            if with_params {
                grads.push(Dense {
                    weights: input.t().dot(&delta),
                    bias: delta.sum_axis(Axis(0)),
                });
            }
            delta = delta.dot(&self.layers[l].weights.t());
        }
        grads.reverse();
        (Gradients { layers: grads }, delta)
    }

    /// `self ← τ·online + (1 − τ)·self`.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) {
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            Zip::from(&mut t.weights)
                .and(&o.weights)
                .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
            Zip::from(&mut t.bias)
                .and(&o.bias)
                .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
        }
    }

    /// All parameters in the same order as [`Gradients::flat`].
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    /// Mutable access to parameter `idx` in flat order.
    pub fn param_mut(&mut self, mut idx: usize) -> Option<&mut f64> {
        for l in &mut self.layers {
            let nw = l.weights.len();
            if idx < nw {
                return l.weights.as_slice_mut()?.get_mut(idx);
            }
            idx -= nw;
            let nb = l.bias.len();
            if idx < nb {
                return l.bias.get_mut(idx);
            }
            idx -= nb;
        }
        None
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use ndarray::array;

    #[test]
    fn zero_weights_give_zero() {
        let mut net = Mlp::new(&[3, 4, 1], Activation::Relu, Activation::Tanh, &mut seeded_rng(0)).unwrap();
        for l in &mut net.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        let y = net.forward(array![[1.0, -2.0, 3.0]].view()).unwrap();
        assert_eq!(y, array![[0.0]]);
    }

    #[test]
    fn linear_network_is_affine() {
        let mut net = Mlp::new(&[2, 2, 1], Activation::Identity, Activation::Identity, &mut seeded_rng(0)).unwrap();
        net.layers[0].weights = array![[1.0, 2.0], [3.0, 4.0]];
        net.layers[0].bias = array![0.5, -0.5];
        net.layers[1].weights = array![[2.0], [-1.0]];
        net.layers[1].bias = array![0.25];
        // hidden = [1 + 3·2 + 0.5, 2 + 4·2 − 0.5] = [7.5, 9.5]; out = 15 − 9.5 + 0.25
        let y = net.forward(array![[1.0, 2.0]].view()).unwrap();
        assert_eq!(y, array![[5.75]]);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = Mlp::new(&[3, 2], Activation::Relu, Activation::Identity, &mut seeded_rng(0)).unwrap();
        assert!(matches!(
            net.forward(array![[1.0, 2.0]].view()),
            Err(Error::Shape { expected: 3, actual: 2 })
        ));
        assert!(Mlp::new(&[3], Activation::Relu, Activation::Identity, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn init_within_fan_in_bound() {
        let net = Mlp::new(&[16, 8, 2], Activation::Relu, Activation::Tanh, &mut seeded_rng(1)).unwrap();
        assert!(net.layers[0].weights.iter().all(|w| w.abs() <= 0.25));
        assert!(net.layers[1].weights.iter().all(|w| w.abs() <= 1.0 / 8f64.sqrt()));
    }

    #[test]
    fn tau_one_copies() {
        let a = Mlp::new(&[3, 5, 1], Activation::Relu, Activation::Identity, &mut seeded_rng(1)).unwrap();
        let mut b = Mlp::new(&[3, 5, 1], Activation::Relu, Activation::Identity, &mut seeded_rng(2)).unwrap();
        b.soft_update_from(&a, 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn flat_param_indexing_round_trips() {
        let mut net = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Tanh, &mut seeded_rng(5)).unwrap();
        let flat = net.flat_params();
        assert_eq!(flat.len(), net.param_count());
        for (i, v) in flat.iter().enumerate() {
            assert_eq!(*net.param_mut(i).unwrap(), *v);
        }
        assert!(net.param_mut(flat.len()).is_none());
    }
}
