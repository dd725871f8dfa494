//! Quick invariant checks run by `ayla selftest`.

use std::fmt;
use std::num::NonZeroUsize;
use std::path::Path;

use crate::data::{parse_cifar100, parse_idx, subset, BatchPlan, LabeledImages, CIFAR_RECORD};
use crate::mlp::{mse_loss, Init, Mlp};
use crate::problems::quartic;
use crate::rng::SeededRng;
use crate::tensor::Matrix;
use crate::transform::{transform_loss, TransformConfig};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

pub fn run_all() -> Vec<Check> {
    vec![
        transform_sign_and_scale(),
        transform_argmin(),
        transform_gradient(),
        quartic_curvature(),
        network_gradient(),
        parser_rejects_garbage(),
        shuffle_and_subset_determinism(),
    ]
}

fn random_config(rng: &mut SeededRng) -> TransformConfig {
    let n1 = 1e-3 + 1.999 * rng.uniform();
    let n2 = 1e-3 + 1.999 * rng.uniform();
    TransformConfig::new(n1, n2).expect("positive powers")
}

fn transform_sign_and_scale() -> Check {
    let mut rng = SeededRng::new(1);
    let mut bad = 0;
    for _ in 0..10_000 {
        let cfg = random_config(&mut rng);
        let l = (rng.uniform() - 0.5) * 10f64.powf(12.0 * rng.uniform() - 6.0);
        let t = transform_loss(l, &cfg);
        if t.value.signum() != l.signum() || t.grad_scale <= 0.0 {
            bad += 1;
        }
        let id = transform_loss(l, &TransformConfig::identity());
        if id.value.to_bits() != l.to_bits() || id.grad_scale != 1.0 {
            bad += 1;
        }
    }
    check(
        "transform sign/scale/identity",
        bad == 0,
        format!("{bad} violations in 10000 draws"),
    )
}

fn transform_argmin() -> Check {
    let mut rng = SeededRng::new(2);
    let mut bad = 0;
    for _ in 0..1000 {
        let cfg = random_config(&mut rng);
        let losses: Vec<f64> = (0..50).map(|_| (rng.uniform() - 0.3) * 8.0).collect();
        let argmin = |v: &[f64]| {
            v.iter()
                .enumerate()
                .fold(0, |best, (i, &x)| if x < v[best] { i } else { best })
        };
        let transformed: Vec<f64> = losses.iter().map(|&l| transform_loss(l, &cfg).value).collect();
        if argmin(&losses) != argmin(&transformed) {
            bad += 1;
        }
    }
    check(
        "transform argmin preservation",
        bad == 0,
        format!("{bad} of 1000 grids differ"),
    )
}

fn transform_gradient() -> Check {
    let q = quartic();
    let mut worst: f64 = 0.0;
    for &x in &[-1.5, -1.0, -0.7, 1.5, 2.0, 2.6, 3.2, 3.6] {
        let l = (q.f)(x);
        let cfg = TransformConfig::new(0.6, 1.4).expect("valid");
        let n = cfg.select_power(l);
        let fixed = |z: f64| {
            let v = (q.f)(z);
            v.signum() * v.abs().powf(n)
        };
        let h = 1e-6;
        let fd = (fixed(x + h) - fixed(x - h)) / (2.0 * h);
        let analytic = transform_loss(l, &cfg).grad_scale * (q.f_prime)(x);
        worst = worst.max(((fd - analytic) / analytic).abs());
    }
    check("transform chain rule", worst < 1e-6, format!("max rel err {worst:.2e}"))
}

fn quartic_curvature() -> Check {
    let q = quartic();
    let transformed = |x: f64| {
        let l = (q.f)(x);
        l.signum() * l.abs().powf(1.4)
    };
    let h = 1e-4;
    let a = q.known_minimum;
    let second = (transformed(a + h) - 2.0 * transformed(a) + transformed(a - h)) / (h * h);
    check(
        "curvature at minimum",
        second > 0.0,
        format!("second difference {second:.4}"),
    )
}

fn network_gradient() -> Check {
    let mut rng = SeededRng::new(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (i, h, o, b) = (1 + rng.index(4), 1 + rng.index(4), 1 + rng.index(3), 1 + rng.index(3));
        let mut net = Mlp::new(i, h, o, Init::NormalFanIn, &mut rng).expect("dims");
        for v in net.b1.iter_mut().chain(net.b2.iter_mut()) {
            *v = rng.standard_normal() * 0.5;
        }
        let x = Matrix::from_vec(b, i, (0..b * i).map(|_| rng.standard_normal()).collect()).expect("x");
        let y = Matrix::from_vec(b, o, (0..b * o).map(|_| rng.standard_normal()).collect()).expect("y");
        let cache = net.forward(&x).expect("forward");
        let grads = net.backward(&x, &cache, &y).expect("backward");
        let analytic: Vec<f64> = grads.blocks().iter().flat_map(|b| b.iter().copied()).collect();
        let mut k = 0;
        for block in 0..4 {
            let len = net.blocks_mut()[block].len();
            for j in 0..len {
                let eps = 1e-6;
                let orig = net.blocks_mut()[block][j];
                net.blocks_mut()[block][j] = orig + eps;
                let up = mse_loss(&net.predict(&x).expect("fwd"), &y).expect("loss");
                net.blocks_mut()[block][j] = orig - eps;
                let down = mse_loss(&net.predict(&x).expect("fwd"), &y).expect("loss");
                net.blocks_mut()[block][j] = orig;
                let fd = (up - down) / (2.0 * eps);
                let err = (fd - analytic[k]).abs() / fd.abs().max(analytic[k].abs()).max(1e-4);
                worst = worst.max(err);
                k += 1;
            }
        }
    }
    check(
        "network backprop vs finite differences",
        worst < 1e-5,
        format!("max rel err {worst:.2e}"),
    )
}

fn parser_rejects_garbage() -> Check {
    let mut rng = SeededRng::new(4);
    let p = Path::new("selftest");
    let mut accepted = 0;
    for _ in 0..50 {
        let len = rng.index(64);
        let junk: Vec<u8> = (0..len).map(|_| rng.next_u64() as u8).collect();
        if parse_idx(&junk, &junk, p, p).is_ok() {
            accepted += 1;
        }
        let cifar_len = CIFAR_RECORD * (1 + rng.index(3)) + 1 + rng.index(CIFAR_RECORD - 1);
        let junk: Vec<u8> = (0..cifar_len).map(|_| rng.next_u64() as u8).collect();
        if parse_cifar100(&junk, p).is_ok() {
            accepted += 1;
        }
    }
    check(
        "parsers reject malformed input",
        accepted == 0,
        format!("{accepted} of 100 accepted"),
    )
}

fn shuffle_and_subset_determinism() -> Check {
    let labels: Vec<usize> = (0..200).map(|i| i % 10).collect();
    let data = LabeledImages {
        images: Matrix::from_vec(200, 1, (0..200).map(f64::from).collect()).expect("images"),
        labels,
        class_count: 10,
        pixel_dim: 1,
    };
    let k = NonZeroUsize::new(5).expect("nonzero");
    let same_subset = subset(&data, k, 8) == subset(&data, k, 8);
    let balanced = subset(&data, k, 8).class_counts().iter().all(|&c| c == 5);
    let bs = NonZeroUsize::new(32).expect("nonzero");
    let plan = BatchPlan::new(200, bs, 8, 3, false);
    let mut covered = plan.order.clone();
    covered.sort_unstable();
    let ok = same_subset
        && balanced
        && plan == BatchPlan::new(200, bs, 8, 3, false)
        && covered == (0..200).collect::<Vec<_>>();
    check(
        "shuffle and subset determinism",
        ok,
        format!("subset repeatable={same_subset} balanced={balanced}"),
    )
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{c}");
        }
    }
}
