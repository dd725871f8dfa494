//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ayla_core::data::CIFAR_RECORD;
use ayla_core::mlp::{mse_loss, Mlp};
use ayla_core::rng::SeededRng;
use ayla_core::tensor::Matrix;

pub fn mnist_sample_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-sample")
}

/// Writes a CIFAR-100-format pair (`train.bin`, `test.bin`) of random images.
pub fn write_synthetic_cifar(dir: &Path, train_per_class: usize, test_per_class: usize, seed: u64) {
    let mut rng = SeededRng::new(seed);
    for (name, per_class) in [("train.bin", train_per_class), ("test.bin", test_per_class)] {
        let mut bytes = Vec::with_capacity(100 * per_class * CIFAR_RECORD);
        for k in 0..per_class {
            for fine in 0..100u8 {
                bytes.push(fine / 5);
                bytes.push(fine);
                // class-dependent brightness so the task is learnable
                for p in 0..3072usize {
                    let base = (fine as usize * 2 + p % 7 + k) as u64;
                    bytes.push(((base + rng.next_u64() % 64) % 256) as u8);
                }
            }
        }
        std::fs::write(dir.join(name), bytes).unwrap();
    }
}

/// Central-difference gradient of the MSE loss with respect to every
/// parameter, in `[w1, b1, w2, b2]` order.
pub fn finite_difference_grads(net: &Mlp, x: &Matrix, y: &Matrix, h: f64) -> Vec<f64> {
    let mut probe = net.clone();
    let mut out = Vec::new();
    for block in 0..4 {
        let len = probe.blocks_mut()[block].len();
        for j in 0..len {
            let orig = probe.blocks_mut()[block][j];
            probe.blocks_mut()[block][j] = orig + h;
            let up = mse_loss(&probe.predict(x).unwrap(), y).unwrap();
            probe.blocks_mut()[block][j] = orig - h;
            let down = mse_loss(&probe.predict(x).unwrap(), y).unwrap();
            probe.blocks_mut()[block][j] = orig;
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

/// `|a - b| / max(|a|, |b|, floor)`; zero when both are zero.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.standard_normal()).collect()).unwrap()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
