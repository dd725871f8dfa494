//! Power-law loss transformation.
//!
//! A raw loss `l` is mapped to `sign(l) * |l|^n`, where the power `n` is
//! picked from the magnitude of `l`: `n2` above one, `n1` below one, and 1 at
//! exactly one or at (numerical) zero. Differentiating through the transform
//! multiplies the raw gradient by `n * |l|^(n-1)`, which is the only quantity
//! an optimizer needs from this module.

use crate::error::{Error, Result};

pub const DEFAULT_ZERO_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformConfig {
    n1: f64,
    n2: f64,
    zero_eps: f64,
}

impl TransformConfig {
    pub fn new(n1: f64, n2: f64) -> Result<Self> {
        Self::with_zero_eps(n1, n2, DEFAULT_ZERO_EPS)
    }

    pub fn with_zero_eps(n1: f64, n2: f64, zero_eps: f64) -> Result<Self> {
        if !(n1.is_finite() && n1 > 0.0) {
            return Err(Error::InvalidConfig(format!("n1 must be positive, got {n1}")));
        }
        if !(n2.is_finite() && n2 > 0.0) {
            return Err(Error::InvalidConfig(format!("n2 must be positive, got {n2}")));
        }
        if !(zero_eps.is_finite() && zero_eps >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "zero_eps must be non-negative, got {zero_eps}"
            )));
        }
        Ok(Self { n1, n2, zero_eps })
    }

    /// The configuration that leaves every loss and gradient untouched.
    pub fn identity() -> Self {
        Self {
            n1: 1.0,
            n2: 1.0,
            zero_eps: DEFAULT_ZERO_EPS,
        }
    }

    pub fn n1(&self) -> f64 {
        self.n1
    }

    pub fn n2(&self) -> f64 {
        self.n2
    }

    pub fn zero_eps(&self) -> f64 {
        self.zero_eps
    }

    pub fn select_power(&self, loss: f64) -> f64 {
        select_power(loss, self)
    }

    pub fn transform(&self, loss: f64) -> TransformedLoss {
        transform_loss(loss, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedLoss {
    pub raw_loss: f64,
    pub power: f64,
    pub value: f64,
    /// Multiplier `n * |l|^(n-1)` applied to the raw gradient.
    pub grad_scale: f64,
}

/// Piecewise power rule. `|l| == 1` is compared exactly.
pub fn select_power(loss: f64, cfg: &TransformConfig) -> f64 {
    let magnitude = loss.abs();
    if magnitude <= cfg.zero_eps {
        1.0
    } else if magnitude > 1.0 {
        cfg.n2
    } else if magnitude < 1.0 {
        cfg.n1
    } else {
        1.0
    }
}

pub fn transform_loss(loss: f64, cfg: &TransformConfig) -> TransformedLoss {
    let power = select_power(loss, cfg);
    if power == 1.0 || loss.abs() <= cfg.zero_eps {
        return TransformedLoss {
            raw_loss: loss,
            power,
            value: loss,
            grad_scale: 1.0,
        };
    }
    let log_mag = loss.abs().ln();
    let magnitude = (power * log_mag).exp();
    TransformedLoss {
        raw_loss: loss,
        power,
        value: magnitude.copysign(loss),
        grad_scale: power * ((power - 1.0) * log_mag).exp(),
    }
}

/// Per-step displacement `lr * raw_grad * grad_scale`. Pass `grad_scale = 1`
/// for the untransformed optimizer. Diagnostic only.
pub fn effective_lr(lr: f64, raw_grad: f64, grad_scale: f64) -> f64 {
    lr * raw_grad * grad_scale
}
