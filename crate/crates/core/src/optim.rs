//! SGD, ADAM, and the loss-transform gradient wrapper.
//!
//! Parameters and gradients are passed as lists of flat blocks so the same
//! code drives a scalar problem (one block of length one) and a network (four
//! blocks). `ayla_wrap` rescales gradients in place before they reach the base
//! optimizer, so ADAM's moment estimates accumulate the scaled gradients.

use crate::error::{Error, Result};
use crate::transform::{transform_loss, TransformConfig, TransformedLoss};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    lr: f64,
}

impl SgdConfig {
    pub fn new(lr: f64) -> Result<Self> {
        check_lr(lr)?;
        Ok(Self { lr })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamConfig {
    pub const DEFAULT_BETA1: f64 = 0.9;
    pub const DEFAULT_BETA2: f64 = 0.999;
    pub const DEFAULT_EPS: f64 = 1e-8;

    /// Standard betas (0.9, 0.999) and eps 1e-8.
    pub fn new(lr: f64) -> Result<Self> {
        Self::with_params(lr, Self::DEFAULT_BETA1, Self::DEFAULT_BETA2, Self::DEFAULT_EPS)
    }

    pub fn with_params(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        check_lr(lr)?;
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { lr, beta1, beta2, eps })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

fn check_lr(lr: f64) -> Result<()> {
    if lr.is_finite() && lr > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "learning rate must be positive, got {lr}"
        )))
    }
}

/// Per-run optimizer state. Moment buffers are allocated on the first ADAM step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerState {
    pub step_count: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new() -> Self {
        Self::default()
    }
}

fn check_shapes(params: &[&mut [f64]], grads: &[&[f64]]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameter blocks, {} gradient blocks",
            params.len(),
            grads.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() {
            return Err(Error::ShapeMismatch(format!(
                "block {i}: {} parameters, {} gradients",
                p.len(),
                g.len()
            )));
        }
    }
    if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(())
}

/// `p <- p - lr * g`.
pub fn sgd_step(params: &mut [&mut [f64]], grads: &[&[f64]], cfg: &SgdConfig) -> Result<()> {
    check_shapes(params, grads)?;
    for (p, g) in params.iter_mut().zip(grads) {
        for (pi, gi) in p.iter_mut().zip(g.iter()) {
            *pi -= cfg.lr * gi;
        }
    }
    Ok(())
}

/// Bias-corrected ADAM update.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    cfg: &AdamConfig,
    state: &mut OptimizerState,
) -> Result<()> {
    check_shapes(params, grads)?;
    if state.m.is_empty() && state.v.is_empty() && state.step_count == 0 {
        state.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
        state.v = state.m.clone();
    }
    let matches =
        |buf: &Vec<Vec<f64>>| buf.len() == grads.len() && buf.iter().zip(grads).all(|(b, g)| b.len() == g.len());
    if !matches(&state.m) || !matches(&state.v) {
        return Err(Error::ShapeMismatch("optimizer state does not match parameters".into()));
    }

    state.step_count += 1;
    let t = i32::try_from(state.step_count).unwrap_or(i32::MAX);
    let correction1 = 1.0 - cfg.beta1.powi(t);
    let correction2 = 1.0 - cfg.beta2.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for (((pi, &gi), mi), vi) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = *mi / correction1;
            let v_hat = *vi / correction2;
            *pi -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

/// Multiplies every gradient entry by the transform's `grad_scale` for the
/// scalar batch loss `raw_loss`, returning the transform record.
pub fn ayla_wrap(raw_loss: f64, grads: &mut [&mut [f64]], cfg: &TransformConfig) -> TransformedLoss {
    let t = transform_loss(raw_loss, cfg);
    if t.grad_scale != 1.0 {
        for g in grads.iter_mut() {
            for gi in g.iter_mut() {
                *gi *= t.grad_scale;
            }
        }
    }
    t
}

/// A base optimizer together with its state.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd(SgdConfig),
    Adam(AdamConfig, OptimizerState),
}

impl Optimizer {
    pub fn sgd(lr: f64) -> Result<Self> {
        Ok(Optimizer::Sgd(SgdConfig::new(lr)?))
    }

    pub fn adam(lr: f64) -> Result<Self> {
        Ok(Optimizer::Adam(AdamConfig::new(lr)?, OptimizerState::new()))
    }

    pub fn lr(&self) -> f64 {
        match self {
            Optimizer::Sgd(c) => c.lr(),
            Optimizer::Adam(c, _) => c.lr(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        match self {
            Optimizer::Sgd(cfg) => sgd_step(params, grads, cfg),
            Optimizer::Adam(cfg, state) => adam_step(params, grads, cfg, state),
        }
    }
}
