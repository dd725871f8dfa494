//! Seeded training loops for the four experiments.

use std::path::{Path, PathBuf};

use crate::data::{load_cifar100, load_idx, one_hot, subset, BatchPlan, LabeledImages};
use crate::error::{Error, Result};
use crate::mlp::{accuracy, mse_loss, Mlp};
use crate::optim::{ayla_wrap, Optimizer};
use crate::problems::{gen_curvefit, quartic};
use crate::rng::{stream, SeededRng};
use crate::tensor::Matrix;
use crate::trace::{emit_csv, fmt_g17, TraceRow};
use crate::transform::effective_lr;

use super::config::{Experiment, OptimizerKind, RunConfig};

/// Losses above this magnitude end a run with a diagnostic row.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub epoch: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trace: Vec<TraceRow>,
    pub diverged: Option<Divergence>,
    /// Parameter after the last update (poly only).
    pub final_x: Option<f64>,
    /// `(x, y, prediction)` per curve-fit point after training.
    pub predictions: Option<Vec<[f64; 3]>>,
}

impl RunOutcome {
    pub fn final_row(&self) -> Option<&TraceRow> {
        self.trace.last()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.final_row().map(|r| r.raw_loss)
    }
}

fn build_optimizer(cfg: &RunConfig) -> Result<Optimizer> {
    match cfg.optimizer {
        OptimizerKind::Sgd => Optimizer::sgd(cfg.lr),
        OptimizerKind::Adam => Optimizer::adam(cfg.lr),
    }
}

fn divergence_reason(loss: f64) -> Option<String> {
    if !loss.is_finite() {
        Some(format!("non-finite loss {loss}"))
    } else if loss.abs() > DIVERGENCE_LOSS {
        Some(format!("loss {} exceeds {DIVERGENCE_LOSS:e}", fmt_g17(loss)))
    } else {
        None
    }
}

/// Gradient descent on the quartic; one update per epoch.
pub fn run_poly(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let problem = quartic();
    let transform = cfg.transform()?;
    let mut optimizer = build_optimizer(cfg)?;
    let mut x = [cfg.start_x];
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut diverged = None;

    for epoch in 0..cfg.epochs {
        let loss = (problem.f)(x[0]);
        let raw_grad = (problem.f_prime)(x[0]);
        let mut grad = [raw_grad];
        let t = ayla_wrap(loss, &mut [&mut grad[..]], &transform);
        trace.push(TraceRow {
            epoch,
            raw_loss: loss,
            transformed_loss: t.value,
            grad_scale: t.grad_scale,
            effective_lr: effective_lr(cfg.lr, raw_grad, t.grad_scale),
            x: Some(x[0]),
            ..Default::default()
        });
        if let Some(reason) = divergence_reason(loss) {
            diverged = Some(Divergence { epoch, reason });
            break;
        }
        if let Err(e) = optimizer.step(&mut [&mut x[..]], &[&grad[..]]) {
            diverged = Some(Divergence {
                epoch,
                reason: e.to_string(),
            });
            break;
        }
        if !x[0].is_finite() {
            diverged = Some(Divergence {
                epoch,
                reason: format!("non-finite x {}", x[0]),
            });
            break;
        }
    }
    Ok(RunOutcome {
        trace,
        diverged,
        final_x: Some(x[0]),
        predictions: None,
    })
}

fn init_network(cfg: &RunConfig, input_dim: usize, output_dim: usize) -> Result<Mlp> {
    let mut rng = SeededRng::with_stream(cfg.seed, stream::INIT);
    Mlp::new(input_dim, cfg.hidden_dim, output_dim, cfg.init, &mut rng)
}

/// Full-batch regression of a 1 -> hidden -> 1 network on the noisy quartic.
pub fn run_curvefit(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let data = gen_curvefit(cfg.seed);
    let x = Matrix::column(&data.x)?;
    let y = Matrix::column(&data.y)?;
    let transform = cfg.transform()?;
    let mut net = init_network(cfg, 1, 1)?;
    let mut optimizer = build_optimizer(cfg)?;
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut diverged = None;

    for epoch in 0..cfg.epochs {
        let cache = net.forward(&x)?;
        let loss = mse_loss(&cache.output, &y)?;
        let mut grads = net.backward(&x, &cache, &y)?;
        let t = ayla_wrap(loss, &mut grads.blocks_mut(), &transform);
        trace.push(TraceRow {
            epoch,
            raw_loss: loss,
            transformed_loss: t.value,
            grad_scale: t.grad_scale,
            effective_lr: cfg.lr * t.grad_scale,
            ..Default::default()
        });
        if let Some(reason) = divergence_reason(loss) {
            diverged = Some(Divergence { epoch, reason });
            break;
        }
        if let Err(e) = optimizer.step(&mut net.blocks_mut(), &grads.blocks()) {
            diverged = Some(Divergence {
                epoch,
                reason: e.to_string(),
            });
            break;
        }
    }

    let predicted = net.predict(&x)?;
    let predictions = data
        .x
        .iter()
        .zip(&data.y)
        .zip(predicted.as_slice())
        .map(|((&xi, &yi), &pi)| [xi, yi, pi])
        .collect();
    Ok(RunOutcome {
        trace,
        diverged,
        final_x: None,
        predictions: Some(predictions),
    })
}

fn evaluate(net: &Mlp, data: &LabeledImages, targets: &Matrix) -> Result<(f64, f64)> {
    let output = net.predict(&data.images)?;
    Ok((mse_loss(&output, targets)?, accuracy(&output, &data.labels)?))
}

/// Mini-batch classification with MSE against one-hot targets. The transform
/// is recomputed for every batch from that batch's mean loss.
pub fn run_classify(cfg: &RunConfig, train: &LabeledImages, test: &LabeledImages) -> Result<RunOutcome> {
    cfg.validate()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if train.pixel_dim != test.pixel_dim || train.class_count != test.class_count {
        return Err(Error::ShapeMismatch("train and test splits disagree".into()));
    }
    let transform = cfg.transform()?;
    let train_targets = one_hot(&train.labels, train.class_count)?;
    let test_targets = one_hot(&test.labels, test.class_count)?;
    let mut net = init_network(cfg, train.pixel_dim, train.class_count)?;
    let mut optimizer = build_optimizer(cfg)?;
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut diverged = None;

    'epochs: for epoch in 0..cfg.epochs {
        let plan = BatchPlan::new(train.len(), cfg.batch_size(), cfg.seed, epoch as u64, false);
        let (mut loss_sum, mut value_sum, mut scale_sum, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for batch in plan.batches() {
            let x = train.images.select_rows(batch);
            let y = train_targets.select_rows(batch);
            let cache = net.forward(&x)?;
            let loss = mse_loss(&cache.output, &y)?;
            let mut grads = net.backward(&x, &cache, &y)?;
            let t = ayla_wrap(loss, &mut grads.blocks_mut(), &transform);
            loss_sum += loss;
            value_sum += t.value;
            scale_sum += t.grad_scale;
            batches += 1;

            let failure = divergence_reason(loss).or_else(|| {
                optimizer
                    .step(&mut net.blocks_mut(), &grads.blocks())
                    .err()
                    .map(|e| e.to_string())
            });
            if let Some(reason) = failure {
                let n = batches as f64;
                trace.push(TraceRow {
                    epoch,
                    raw_loss: loss_sum / n,
                    transformed_loss: value_sum / n,
                    grad_scale: scale_sum / n,
                    effective_lr: cfg.lr * scale_sum / n,
                    ..Default::default()
                });
                diverged = Some(Divergence { epoch, reason });
                break 'epochs;
            }
        }
        let n = batches as f64;
        let (_, train_acc) = evaluate(&net, train, &train_targets)?;
        let (test_loss, test_acc) = evaluate(&net, test, &test_targets)?;
        trace.push(TraceRow {
            epoch,
            raw_loss: loss_sum / n,
            transformed_loss: value_sum / n,
            grad_scale: scale_sum / n,
            effective_lr: cfg.lr * scale_sum / n,
            x: None,
            train_accuracy: Some(train_acc),
            test_loss: Some(test_loss),
            test_accuracy: Some(test_acc),
        });
    }
    Ok(RunOutcome {
        trace,
        diverged,
        final_x: None,
        predictions: None,
    })
}

pub const MNIST_FILES: [(&str, u64); 4] = [
    ("train-images-idx3-ubyte", 47_040_016),
    ("train-labels-idx1-ubyte", 60_008),
    ("t10k-images-idx3-ubyte", 7_840_016),
    ("t10k-labels-idx1-ubyte", 10_008),
];

pub const CIFAR100_FILES: [(&str, u64); 2] = [("train.bin", 153_700_000), ("test.bin", 30_740_000)];

fn expected_listing(dir: &Path, files: &[(&str, u64)]) -> String {
    let names: Vec<String> = files
        .iter()
        .map(|(n, size)| format!("{n} ({size} bytes, optionally .gz)"))
        .collect();
    format!("expected in {}: {}", dir.display(), names.join(", "))
}

fn find_file(dirs: &[PathBuf], name: &str) -> Option<PathBuf> {
    dirs.iter().find_map(|d| {
        [d.join(name), d.join(format!("{name}.gz"))]
            .into_iter()
            .find(|p| p.is_file())
    })
}

fn require_dir(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.resolved_data_dir().ok_or_else(|| {
        Error::MissingData(format!(
            "no data directory; pass --data-dir or set {}",
            super::config::DATA_DIR_ENV
        ))
    })
}

/// Loads `(train, test)` MNIST splits from the data directory.
pub fn load_mnist(dir: &Path) -> Result<(LabeledImages, LabeledImages)> {
    let dirs = [dir.to_path_buf()];
    let paths: Vec<PathBuf> = MNIST_FILES
        .iter()
        .map(|(n, _)| find_file(&dirs, n))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::MissingData(expected_listing(dir, &MNIST_FILES)))?;
    Ok((load_idx(&paths[0], &paths[1])?, load_idx(&paths[2], &paths[3])?))
}

/// Loads `(train, test)` CIFAR-100 splits from the data directory or its
/// `cifar-100-binary/` child.
pub fn load_cifar(dir: &Path) -> Result<(LabeledImages, LabeledImages)> {
    let dirs = [dir.to_path_buf(), dir.join("cifar-100-binary")];
    let paths: Vec<PathBuf> = CIFAR100_FILES
        .iter()
        .map(|(n, _)| find_file(&dirs, n))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::MissingData(expected_listing(dir, &CIFAR100_FILES)))?;
    Ok((load_cifar100(&paths[0])?, load_cifar100(&paths[1])?))
}

/// Loads the configured dataset and applies `per_class` to the training split.
pub fn load_experiment_data(cfg: &RunConfig) -> Result<(LabeledImages, LabeledImages)> {
    let dir = require_dir(cfg)?;
    let (train, test) = match cfg.experiment {
        Experiment::Mnist => load_mnist(&dir)?,
        Experiment::Cifar100 => load_cifar(&dir)?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "{} does not read image data",
                other.name()
            )))
        }
    };
    let train = match cfg.per_class() {
        Some(k) => subset(&train, k, cfg.seed),
        None => train,
    };
    Ok((train, test))
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    match cfg.experiment {
        Experiment::Poly => run_poly(cfg),
        Experiment::Curvefit => run_curvefit(cfg),
        Experiment::Mnist | Experiment::Cifar100 => {
            let (train, test) = load_experiment_data(cfg)?;
            run_classify(cfg, &train, &test)
        }
    }
}

/// Writes the trace (and curve-fit predictions) under `cfg.out_dir`,
/// returning the trace path.
pub fn write_outputs(cfg: &RunConfig, outcome: &RunOutcome) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let trace_path = cfg.out_dir.join(format!("{}.csv", cfg.run_name()));
    emit_csv(&outcome.trace, &trace_path)?;
    if let Some(preds) = &outcome.predictions {
        let path = cfg.out_dir.join(format!("{}_predictions.csv", cfg.run_name()));
        let mut text = String::from("x,y,prediction\n");
        for [x, y, p] in preds {
            text.push_str(&format!("{},{},{}\n", fmt_g17(*x), fmt_g17(*y), fmt_g17(*p)));
        }
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(trace_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_trace_shape() {
        let cfg = RunConfig::defaults(Experiment::Poly);
        let out = run_poly(&cfg).unwrap();
        assert_eq!(out.trace.len(), 50);
        assert_eq!(out.trace[0].x, Some(-1.0));
        assert_eq!(out.trace[0].raw_loss, 6.0);
        assert!((out.trace[0].effective_lr - (-0.39)).abs() < 1e-15);
        assert!((out.trace[1].x.unwrap() - (-0.61)).abs() < 1e-15);
        assert!(out.diverged.is_none());
    }

    #[test]
    fn poly_divergence_is_recorded() {
        let mut cfg = RunConfig::defaults(Experiment::Poly);
        cfg.lr = 5.0;
        cfg.start_x = 10.0;
        let out = run_poly(&cfg).unwrap();
        let d = out.diverged.expect("diverges");
        assert_eq!(d.epoch + 1, out.trace.len());
        assert!(out.trace[..d.epoch].iter().all(|r| r.raw_loss.is_finite()));
    }

    #[test]
    fn curvefit_learns_something() {
        let mut cfg = RunConfig::defaults(Experiment::Curvefit);
        cfg.epochs = 30;
        let out = run_curvefit(&cfg).unwrap();
        assert_eq!(out.trace.len(), 30);
        assert!(out.trace[29].raw_loss < out.trace[0].raw_loss);
        assert_eq!(out.predictions.as_ref().unwrap().len(), 100);
    }

    #[test]
    fn missing_data_dir_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_mnist(dir.path()).unwrap_err();
        assert!(matches!(err, Error::MissingData(ref m) if m.contains("47040016")));
        assert!(load_cifar(dir.path()).is_err());
    }
}
