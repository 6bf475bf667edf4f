//! Small dense ReLU network trained with Adam.
//!
//! Everything is batched: a batch of `B` inputs is a row-major `B × in`
//! matrix and each layer is one GEMM. Single-sample calls are batches of one.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Strides};

const CHECKPOINT_MAGIC: &str = "swarm-nd-mlp";
const CHECKPOINT_VERSION: u32 = 1;

/// Fully connected layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    /// `out ← x·Wᵀ + b` for a `batch × inputs` block `x`.
    fn apply(&self, x: &[T], batch: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(batch * self.outputs);
        for _ in 0..batch {
            out.extend_from_slice(&self.bias);
        }
        T::gemm(
            batch,
            self.inputs,
            self.outputs,
            T::one(),
            x,
            Strides::row_major(self.inputs),
            &self.weights,
            Strides::transposed(self.inputs),
            T::one(),
            &mut out,
            Strides::row_major(self.outputs),
        );
        out
    }
}

/// Feed-forward network: ReLU on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Dense<T>>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    batch: usize,
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<T>>,
}

impl<T> Tape<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// `batch × outputs`, row-major.
    pub fn output(&self) -> &[T] {
        self.acts.last().expect("tape holds the input at least")
    }
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros_like(net: &Mlp<T>) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }
}

impl<T: Scalar> Mlp<T> {
    fn check_sizes(sizes: &[usize]) -> Result<()> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config(
                "layers",
                "need at least input and output sizes, all non-zero",
            ));
        }
        Ok(())
    }

    /// All-zero network.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        Self::check_sizes(sizes)?;
        Ok(Mlp {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        })
    }

    /// He-uniform weights `U(±√(6/fan_in))`, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = T::lit(rng.random_range(-bound..bound));
            }
        }
        Ok(net)
    }

    pub fn from_layers(layers: Vec<Dense<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("layers", "empty network"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::config("layers", "consecutive layer sizes disagree"));
            }
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::config(
                    "layers",
                    "parameter buffer has the wrong length",
                ));
            }
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_size())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn parameters(&self) -> impl Iterator<Item = &T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().all(|p| p.is_finite())
    }

    /// Forward pass over `batch` row-major inputs, keeping activations.
    pub fn forward_batch(&self, x: &[T], batch: usize) -> Tape<T> {
        assert_eq!(x.len(), batch * self.input_size(), "input shape mismatch");
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.apply(&acts[l], batch);
            if l < last {
                for v in &mut z {
                    *v = v.max(T::zero());
                }
            }
            acts.push(z);
        }
        Tape { batch, acts }
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let mut tape = self.forward_batch(x, 1);
        tape.acts.pop().expect("output present")
    }

    /// Reverse-mode gradients of `Σ grad_out ⊙ output` over the batch.
    pub fn backward(&self, tape: &Tape<T>, grad_out: &[T]) -> Gradients<T> {
        let batch = tape.batch;
        assert_eq!(
            grad_out.len(),
            batch * self.output_size(),
            "output gradient shape mismatch"
        );
        let mut grads = Gradients::zeros_like(self);
        let mut delta = grad_out.to_vec();
        let last = self.layers.len() - 1;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if l < last {
                for (d, &a) in delta.iter_mut().zip(&tape.acts[l + 1]) {
                    if a <= T::zero() {
                        *d = T::zero();
                    }
                }
            }
            let input = &tape.acts[l];
            let g = &mut grads.layers[l];
            T::gemm(
                layer.outputs,
                batch,
                layer.inputs,
                T::one(),
                &delta,
                Strides::transposed(layer.outputs),
                input,
                Strides::row_major(layer.inputs),
                T::zero(),
                &mut g.weights,
                Strides::row_major(layer.inputs),
            );
            for row in delta.chunks_exact(layer.outputs) {
                for (b, &d) in g.bias.iter_mut().zip(row) {
                    *b = *b + d;
                }
            }
            if l > 0 {
                let mut prev = vec![T::zero(); batch * layer.inputs];
                T::gemm(
                    batch,
                    layer.outputs,
                    layer.inputs,
                    T::one(),
                    &delta,
                    Strides::row_major(layer.outputs),
                    &layer.weights,
                    Strides::row_major(layer.inputs),
                    T::zero(),
                    &mut prev,
                    Strides::row_major(layer.inputs),
                );
                delta = prev;
            }
        }
        grads
    }

    /// Text checkpoint: a versioned header, then every parameter row-major,
    /// layer by layer, weights before biases, one value per line.
    pub fn write_checkpoint<W: Write>(
        &self,
        out: &mut W,
        window: usize,
        sectors: usize,
    ) -> std::io::Result<()> {
        writeln!(out, "{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}")?;
        writeln!(out, "window {window}")?;
        writeln!(out, "sectors {sectors}")?;
        let sizes: Vec<String> = self.sizes().iter().map(usize::to_string).collect();
        writeln!(out, "layers {}", sizes.join(" "))?;
        for p in self.parameters() {
            writeln!(out, "{p}")?;
        }
        Ok(())
    }

    /// Returns the network and its `(window, sectors)` header fields.
    pub fn read_checkpoint<R: BufRead>(input: R) -> Result<(Self, usize, usize)> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut lines = input.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| bad("truncated"))?
                .map_err(|e| Error::Checkpoint(e.to_string()))
        };
        if next()? != format!("{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}") {
            return Err(bad("unknown header or version"));
        }
        let mut field = |name: &str| -> Result<Vec<usize>> {
            let line = next()?;
            let rest = line
                .strip_prefix(name)
                .ok_or_else(|| bad(&format!("missing `{name}`")))?;
            rest.split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(&format!("bad `{name}` value"))))
                .collect()
        };
        let window = *field("window")?
            .first()
            .ok_or_else(|| bad("empty window"))?;
        let sectors = *field("sectors")?
            .first()
            .ok_or_else(|| bad("empty sectors"))?;
        let sizes = field("layers")?;
        let mut net = Self::zeros(&sizes)?;
        for p in net.parameters_mut() {
            *p = next()?.trim().parse().map_err(|_| bad("bad parameter"))?;
        }
        if next().is_ok_and(|l| !l.trim().is_empty()) {
            return Err(bad("trailing data"));
        }
        Ok((net, window, sectors))
    }
}

/// Adam optimiser state for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    step: u64,
    m: Gradients<T>,
    v: Gradients<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(net: &Mlp<T>, lr: T) -> Self {
        Adam {
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            step: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of `net` along `grads`.
    pub fn update(&mut self, net: &mut Mlp<T>, grads: &Gradients<T>) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = T::one() - self.beta1.powi(t);
        let c2 = T::one() - self.beta2.powi(t);
        let (b1, b2) = (self.beta1, self.beta2);
        let step_size = self.lr / c1;
        let c2_sqrt = c2.sqrt();
        for (((layer, g), m), v) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m.layers)
            .zip(&mut self.v.layers)
        {
            let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
            let gs = g.weights.iter().chain(g.bias.iter());
            let ms = m.weights.iter_mut().chain(m.bias.iter_mut());
            let vs = v.weights.iter_mut().chain(v.bias.iter_mut());
            for (((p, &g), m), v) in params.zip(gs).zip(ms).zip(vs) {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                *p = *p - step_size * *m / ((*v).sqrt() / c2_sqrt + self.eps);
            }
        }
        debug_assert!(net.is_finite(), "non-finite parameter after Adam step");
    }
}
