//! One-hidden-layer perceptron: `input -> ReLU(hidden) -> linear output`,
//! trained against mean squared error.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
}

/// Weight initialization scheme. Biases always start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Normal(0, sd = 1/sqrt(fan_in)).
    #[default]
    NormalFanIn,
    /// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
    GlorotUniform,
}

impl Init {
    fn draw(self, rng: &mut SeededRng, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            Init::NormalFanIn => rng.standard_normal() / (fan_in as f64).sqrt(),
            Init::GlorotUniform => {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                (2.0 * rng.uniform() - 1.0) * limit
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub activation: Activation,
}

/// Intermediates of a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub hidden_pre: Matrix,
    pub hidden_post: Matrix,
    pub output: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl Gradients {
    pub fn blocks(&self) -> [&[f64]; 4] {
        [self.w1.as_slice(), &self.b1, self.w2.as_slice(), &self.b2]
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
        ]
    }
}

/// Builds a network with `Init::NormalFanIn` weights drawn from `seed`.
pub fn init_mlp(input_dim: usize, hidden_dim: usize, output_dim: usize, seed: u64) -> Result<Mlp> {
    Mlp::new(
        input_dim,
        hidden_dim,
        output_dim,
        Init::NormalFanIn,
        &mut SeededRng::new(seed),
    )
}

impl Mlp {
    /// Draws `w1` then `w2`, each in row-major order.
    pub fn new(
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
        init: Init,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "layer sizes must be positive, got {input_dim}->{hidden_dim}->{output_dim}"
            )));
        }
        let n1 = input_dim
            .checked_mul(hidden_dim)
            .ok_or_else(|| Error::InvalidConfig("input_dim * hidden_dim overflows".into()))?;
        let n2 = hidden_dim
            .checked_mul(output_dim)
            .ok_or_else(|| Error::InvalidConfig("hidden_dim * output_dim overflows".into()))?;
        let w1 = (0..n1).map(|_| init.draw(rng, input_dim, hidden_dim)).collect();
        let w2 = (0..n2).map(|_| init.draw(rng, hidden_dim, output_dim)).collect();
        Ok(Self {
            w1: Matrix::from_parts(input_dim, hidden_dim, w1),
            b1: vec![0.0; hidden_dim],
            w2: Matrix::from_parts(hidden_dim, output_dim, w2),
            b2: vec![0.0; output_dim],
            activation: Activation::Relu,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.cols()
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
        ]
    }

    pub fn forward(&self, x: &Matrix) -> Result<ForwardCache> {
        if x.cols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} columns, network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let mut hidden_pre = x.matmul(&self.w1)?;
        hidden_pre.add_row_broadcast(&self.b1)?;
        let hidden_post = match self.activation {
            Activation::Relu => hidden_pre.map(|v| v.max(0.0)),
        };
        let mut output = hidden_post.matmul(&self.w2)?;
        output.add_row_broadcast(&self.b2)?;
        Ok(ForwardCache {
            hidden_pre,
            hidden_post,
            output,
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x)?.output)
    }

    /// Analytic gradients of `mse_loss(cache.output, target)`.
    pub fn backward(&self, x: &Matrix, cache: &ForwardCache, target: &Matrix) -> Result<Gradients> {
        let output = &cache.output;
        if output.shape() != target.shape() {
            return Err(Error::ShapeMismatch(format!(
                "output {:?} vs target {:?}",
                output.shape(),
                target.shape()
            )));
        }
        if x.rows() != output.rows() || cache.hidden_pre.shape() != (x.rows(), self.hidden_dim()) {
            return Err(Error::ShapeMismatch("forward cache does not match input".into()));
        }
        let count = output.as_slice().len();
        if count == 0 {
            return Err(Error::EmptyBatch);
        }
        let factor = 2.0 / count as f64;
        let d_out = Matrix::from_parts(
            output.rows(),
            output.cols(),
            output
                .as_slice()
                .iter()
                .zip(target.as_slice())
                .map(|(o, t)| factor * (o - t))
                .collect(),
        );
        let w2 = cache.hidden_post.t_matmul(&d_out)?;
        let b2 = d_out.column_sums();
        let mut d_hidden = d_out.matmul_t(&self.w2)?;
        for (d, &pre) in d_hidden.as_mut_slice().iter_mut().zip(cache.hidden_pre.as_slice()) {
            if pre <= 0.0 {
                *d = 0.0;
            }
        }
        let w1 = x.t_matmul(&d_hidden)?;
        let b1 = d_hidden.column_sums();
        Ok(Gradients { w1, b1, w2, b2 })
    }
}

/// Mean of squared differences over every entry.
pub fn mse_loss(output: &Matrix, target: &Matrix) -> Result<f64> {
    if output.shape() != target.shape() {
        return Err(Error::ShapeMismatch(format!(
            "output {:?} vs target {:?}",
            output.shape(),
            target.shape()
        )));
    }
    let n = output.as_slice().len();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let sum: f64 = output
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(o, t)| (o - t) * (o - t))
        .sum();
    Ok(sum / n as f64)
}

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
pub fn accuracy(output: &Matrix, labels: &[usize]) -> Result<f64> {
    if output.rows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} output rows for {} labels",
            output.rows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let hits = labels
        .iter()
        .enumerate()
        .filter(|&(r, &label)| argmax(output.row(r)) == Some(label))
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
