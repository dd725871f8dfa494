//! Power-law loss transformation for gradient-based optimizers.
//!
//! The transform maps a loss `l` to `sign(l) * |l|^n`, choosing `n` from the
//! magnitude of `l`. Differentiating through it multiplies the raw gradient by
//! `n * |l|^(n-1)`; [`optim::ayla_wrap`] applies that factor before an SGD or
//! ADAM step. Around this sit a small dense network ([`mlp`]), dataset loaders
//! ([`data`]), and an experiment harness ([`harness`]) that writes per-epoch
//! CSV traces.
//!
//! ```
//! use ayla_core::transform::TransformConfig;
//!
//! let cfg = TransformConfig::new(1.0, 1.4).unwrap();
//! let t = cfg.transform(-6.54296875);
//! assert!((t.value + 13.87).abs() < 0.01);
//! ```

pub mod data;
pub mod error;
pub mod harness;
pub mod mlp;
pub mod optim;
pub mod problems;
pub mod rng;
pub mod selftest;
pub mod tensor;
pub mod trace;
pub mod transform;

pub use error::{Error, Result};
pub use harness::cli_main;
pub use mlp::{init_mlp, Gradients, Init, Mlp};
pub use optim::{adam_step, ayla_wrap, sgd_step, AdamConfig, Optimizer, OptimizerState, SgdConfig};
pub use tensor::Matrix;
pub use trace::{emit_csv, TraceRow};
pub use transform::{effective_lr, select_power, transform_loss, TransformConfig, TransformedLoss};
