//! Fully connected stacks with hand-written reverse mode.

use std::cell::Cell;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::axpy;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// `y = act(W x + b)` with `W` stored row-major, `output_dim × input_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    input_dim: usize,
    output_dim: usize,
    weight: Vec<T>,
    bias: Vec<T>,
    activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        weight: Vec<T>,
        bias: Vec<T>,
        activation: Activation,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::ShapeMismatch("layer dimensions must be positive".into()));
        }
        if weight.len() != input_dim * output_dim {
            return Err(Error::DimMismatch {
                expected: input_dim * output_dim,
                found: weight.len(),
            });
        }
        if bias.len() != output_dim {
            return Err(Error::DimMismatch {
                expected: output_dim,
                found: bias.len(),
            });
        }
        Ok(Self {
            input_dim,
            output_dim,
            weight,
            bias,
            activation,
        })
    }

    /// He-scaled Gaussian weights; biases Gaussian with standard deviation
    /// 0.01, so an input with every relu unit dead still maps to a nonzero
    /// output.
    pub fn random<R: Rng + ?Sized>(
        input_dim: usize,
        output_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let gain = match activation {
            Activation::Relu => 2.0,
            Activation::Identity => 1.0,
        };
        let std = (gain / input_dim as f64).sqrt();
        let weight = (0..input_dim * output_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                T::of(z * std)
            })
            .collect();
        let bias = (0..output_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                T::of(0.01 * z)
            })
            .collect();
        Self {
            input_dim,
            output_dim,
            weight,
            bias,
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight(&self) -> &[T] {
        &self.weight
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    fn forward(&self, x: &[T]) -> Vec<T> {
        let mut out = self.bias.clone();
        for (o, row) in out.iter_mut().zip(self.weight.chunks_exact(self.input_dim)) {
            let pre = row.iter().zip(x).fold(*o, |acc, (&w, &xi)| acc + w * xi);
            *o = match self.activation {
                Activation::Relu => pre.max(T::zero()),
                Activation::Identity => pre,
            };
        }
        out
    }
}

thread_local! {
    static LIVE_TRACES: Cell<usize> = const { Cell::new(0) };
    static PEAK_TRACES: Cell<usize> = const { Cell::new(0) };
}

/// Number of [`ForwardTrace`]s alive on this thread.
pub fn live_traces() -> usize {
    LIVE_TRACES.with(Cell::get)
}

/// High-water mark of [`live_traces`] since the last reset.
pub fn peak_traces() -> usize {
    PEAK_TRACES.with(Cell::get)
}

pub fn reset_peak_traces() {
    PEAK_TRACES.with(|p| p.set(live_traces()));
}

/// Retained activations of one forward pass through one stack: the input,
/// then every layer output. Instances are counted per thread so tests can
/// bound how many per-sample activation records coexist.
#[derive(Debug)]
pub struct ForwardTrace<T> {
    activations: Vec<Vec<T>>,
}

impl<T> ForwardTrace<T> {
    fn new(activations: Vec<Vec<T>>) -> Self {
        LIVE_TRACES.with(|l| {
            let now = l.get() + 1;
            l.set(now);
            PEAK_TRACES.with(|p| p.set(p.get().max(now)));
        });
        Self { activations }
    }

    pub fn activations(&self) -> &[Vec<T>] {
        &self.activations
    }

    pub fn output(&self) -> &[T] {
        self.activations.last().expect("trace holds at least the input")
    }
}

impl<T> Drop for ForwardTrace<T> {
    fn drop(&mut self) {
        LIVE_TRACES.with(|l| l.set(l.get() - 1));
    }
}

/// Gradient buffers shaped like one [`Layer`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Gradient buffers shaped like one [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct StackGrad<T> {
    pub layers: Vec<LayerGrad<T>>,
}

impl<T: Scalar> StackGrad<T> {
    pub fn zeros_like(stack: &MlpParams<T>) -> Self {
        Self {
            layers: stack
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weight: vec![T::zero(); l.weight.len()],
                    bias: vec![T::zero(); l.bias.len()],
                })
                .collect(),
        }
    }

    /// Weights then bias, layer by layer.
    pub fn flat(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_zero(&self) -> bool {
        self.flat().iter().all(|&x| x == T::zero())
    }
}

/// One fully connected stack (the encoder or a projector).
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    layers: Vec<Layer<T>>,
    version: u64,
}

impl<T: Scalar> MlpParams<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("stack needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].output_dim != w[1].input_dim {
                return Err(Error::DimMismatch {
                    expected: w[0].output_dim,
                    found: w[1].input_dim,
                });
            }
        }
        Ok(Self { layers, version: 0 })
    }

    /// Random stack with widths `dims[0] → dims[1] → …`; hidden layers use
    /// relu, the last layer uses `last`.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], last: Activation, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::ShapeMismatch("need an input and an output width".into()));
        }
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 2 == dims.len() { last } else { Activation::Relu };
                Layer::random(w[0], w[1], act, rng)
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Bumped on every in-place parameter write.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.input_dim == b.input_dim
                    && a.output_dim == b.output_dim
                    && a.activation == b.activation
            })
    }

    /// Weights then bias, layer by layer.
    pub fn flat(&self) -> Vec<T> {
        self.params().copied().collect()
    }

    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(&l.bias))
    }

    /// Mutable access to every parameter; bumps the version.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.version += 1;
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Overwrites every parameter from `values` in declaration order.
    pub fn set_flat(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::DimMismatch {
                expected: self.param_count(),
                found: values.len(),
            });
        }
        for (p, &v) in self.params_mut().zip(values) {
            *p = v;
        }
        Ok(())
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        for l in &self.layers {
            h = l.forward(&h);
        }
        Ok(h)
    }

    /// Forward pass that keeps every intermediate activation for
    /// [`MlpParams::backward_trace`].
    pub fn forward_trace(&self, x: &[T]) -> Result<ForwardTrace<T>> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for l in &self.layers {
            let next = l.forward(acts.last().expect("nonempty"));
            acts.push(next);
        }
        Ok(ForwardTrace::new(acts))
    }

    /// Gradient of `⟨upstream, output(x)⟩` with respect to every parameter.
    pub fn backward(&self, x: &[T], upstream: &[T]) -> Result<StackGrad<T>> {
        let trace = self.forward_trace(x)?;
        let mut grad = StackGrad::zeros_like(self);
        self.backward_trace(&trace, upstream, &mut grad)?;
        Ok(grad)
    }

    /// Accumulates the parameter gradient of `⟨upstream, output⟩` into
    /// `grad` and returns the gradient with respect to the input.
    pub fn backward_trace(
        &self,
        trace: &ForwardTrace<T>,
        upstream: &[T],
        grad: &mut StackGrad<T>,
    ) -> Result<Vec<T>> {
        if upstream.len() != self.output_dim() {
            return Err(Error::DimMismatch {
                expected: self.output_dim(),
                found: upstream.len(),
            });
        }
        let acts = &trace.activations;
        let mut g = upstream.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            if layer.activation == Activation::Relu {
                for (gk, &a) in g.iter_mut().zip(&acts[idx + 1]) {
                    if a <= T::zero() {
                        *gk = T::zero();
                    }
                }
            }
            let input = &acts[idx];
            let lg = &mut grad.layers[idx];
            for (o, &go) in g.iter().enumerate() {
                lg.bias[o] = lg.bias[o] + go;
                let row = &mut lg.weight[o * layer.input_dim..(o + 1) * layer.input_dim];
                axpy(go, input, row);
            }
            let mut prev = vec![T::zero(); layer.input_dim];
            for (o, &go) in g.iter().enumerate() {
                axpy(go, &layer.weight[o * layer.input_dim..(o + 1) * layer.input_dim], &mut prev);
            }
            g = prev;
        }
        Ok(g)
    }
}

/// Row softmax, shifted by the max logit.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = logits.iter().map(|&x| (x - m).exp()).collect();
    let s = e.iter().fold(T::zero(), |acc, &x| acc + x);
    e.into_iter().map(|x| x / s).collect()
}

/// Pulls `∂/∂y` back through `y = softmax(logits)`: `y ⊙ (g − ⟨g, y⟩)`.
pub fn softmax_backward<T: Scalar>(y: &[T], upstream: &[T]) -> Vec<T> {
    let inner = y.iter().zip(upstream).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    y.iter().zip(upstream).map(|(&yi, &gi)| yi * (gi - inner)).collect()
}
