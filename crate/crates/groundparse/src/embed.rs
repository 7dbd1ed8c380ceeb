//! Embedding storage and the small dense networks used by the model: the
//! dimensionality-reduction net applied after lookup and the pair scorer.
//! Backward passes are hand-written; forward caches are recomputed rather
//! than stored, which keeps parse traces lightweight.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath::{dot, scaled_add};

/// Nonlinearity of a dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// Fully connected layer, weights row-major `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub act: Activation,
}

impl Dense {
    /// Uniform Xavier initialization `U(-sqrt(6/(in+out)), +sqrt(6/(in+out)))`
    /// for weights (drawn row-major), zero biases.
    pub fn init(rng: &mut impl Rng, in_dim: usize, out_dim: usize, act: Activation) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Dense {
            in_dim,
            out_dim,
            w,
            b: vec![0.0; out_dim],
            act,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        (0..self.out_dim)
            .map(|o| {
                let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
                self.act.apply(dot(row, x) + self.b[o])
            })
            .collect()
    }

    /// Backpropagate `dy` (gradient at the layer output) through the layer.
    /// `x` is the forward input and `y` the forward output. Accumulates
    /// weight and bias gradients into `grad` and returns the input gradient.
    pub fn backward(&self, x: &[f64], y: &[f64], dy: &[f64], grad: &mut DenseGrad) -> Vec<f64> {
        debug_assert_eq!(dy.len(), self.out_dim);
        let mut dx = vec![0.0; self.in_dim];
        for o in 0..self.out_dim {
            let dz = dy[o] * self.act.derivative_from_output(y[o]);
            grad.db[o] += dz;
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            scaled_add(&mut grad.dw[o * self.in_dim..(o + 1) * self.in_dim], dz, x);
            scaled_add(&mut dx, dz, row);
        }
        dx
    }
}

/// Gradient accumulator matching a [`Dense`] layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

impl DenseGrad {
    pub fn zeros_like(layer: &Dense) -> Self {
        DenseGrad {
            dw: vec![0.0; layer.w.len()],
            db: vec![0.0; layer.b.len()],
        }
    }
}

/// Two-layer perceptron: tanh hidden layer, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp2 {
    pub l1: Dense,
    pub l2: Dense,
}

impl Mlp2 {
    /// Initializes both layers; draw order is first layer then second.
    pub fn init(rng: &mut impl Rng, in_dim: usize, hidden: usize, out_dim: usize) -> Self {
        Mlp2 {
            l1: Dense::init(rng, in_dim, hidden, Activation::Tanh),
            l2: Dense::init(rng, hidden, out_dim, Activation::Linear),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.l1.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.l2.out_dim
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.l2.forward(&self.l1.forward(x))
    }

    /// Backward through both layers, recomputing the hidden activations.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Mlp2Grad) -> Vec<f64> {
        let h = self.l1.forward(x);
        let y = self.l2.forward(&h);
        let dh = self.l2.backward(&h, &y, dy, &mut grad.l2);
        self.l1.backward(x, &h, &dh, &mut grad.l1)
    }
}

/// Gradient accumulator matching an [`Mlp2`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp2Grad {
    pub l1: DenseGrad,
    pub l2: DenseGrad,
}

impl Mlp2Grad {
    pub fn zeros_like(net: &Mlp2) -> Self {
        Mlp2Grad {
            l1: DenseGrad::zeros_like(&net.l1),
            l2: DenseGrad::zeros_like(&net.l2),
        }
    }
}

/// Row-major matrix of token embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl EmbeddingTable {
    /// Rows drawn uniformly from `(-0.1, 0.1)`, in row-major order.
    pub fn init(rng: &mut impl Rng, rows: usize, dim: usize) -> Self {
        let data = (0..rows * dim).map(|_| rng.random_range(-0.1..0.1)).collect();
        EmbeddingTable { rows, dim, data }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.rows * self.dim {
            return Err(Error::DimMismatch {
                expected: self.rows * self.dim,
                got: self.data.len(),
            });
        }
        Ok(())
    }
}
