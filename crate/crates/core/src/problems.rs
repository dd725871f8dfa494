//! Closed-form test problems: a quartic with a flat saddle and a global
//! minimum, and a noisy quartic curve-fitting dataset.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::trace::fmt_g17;

#[derive(Debug, Clone, Copy)]
pub struct ScalarProblem {
    pub f: fn(f64) -> f64,
    pub f_prime: fn(f64) -> f64,
    pub domain_hint: (f64, f64),
    pub known_minimum: f64,
    pub known_saddle: Option<f64>,
}

fn quartic_f(x: f64) -> f64 {
    x.powi(4) - 3.0 * x.powi(3) + 2.0
}

fn quartic_f_prime(x: f64) -> f64 {
    4.0 * x.powi(3) - 9.0 * x * x
}

/// `f(x) = x^4 - 3x^3 + 2`: saddle at 0, global minimum at 9/4.
pub fn quartic() -> ScalarProblem {
    ScalarProblem {
        f: quartic_f,
        f_prime: quartic_f_prime,
        domain_hint: (-2.0, 4.0),
        known_minimum: 2.25,
        known_saddle: Some(0.0),
    }
}

pub const CURVEFIT_POINTS: usize = 100;
pub const CURVEFIT_NOISE_SIGMA: f64 = 0.2;

/// Noise-free curve-fit target.
pub fn curvefit_poly(x: f64) -> f64 {
    x.powi(4) / 3.0 - 4.0 * x.powi(3) / 3.0 + x * x + 2.0 * x / 3.0 - 2.0 / 3.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFitDataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// `x_i = -1 + 4i/99` for `i` in `0..100`.
pub fn curvefit_grid() -> Vec<f64> {
    (0..CURVEFIT_POINTS)
        .map(|i| -1.0 + 4.0 * i as f64 / (CURVEFIT_POINTS - 1) as f64)
        .collect()
}

/// One standard-normal draw per grid point, in grid order.
pub fn gen_curvefit(seed: u64) -> CurveFitDataset {
    let mut rng = SeededRng::new(seed);
    let x = curvefit_grid();
    let y = x
        .iter()
        .map(|&xi| curvefit_poly(xi) + CURVEFIT_NOISE_SIGMA * rng.standard_normal())
        .collect();
    CurveFitDataset {
        x,
        y,
        noise_sigma: CURVEFIT_NOISE_SIGMA,
        seed,
    }
}

impl CurveFitDataset {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("x,y\n");
        for (x, y) in self.x.iter().zip(&self.y) {
            out.push_str(&format!("{},{}\n", fmt_g17(*x), fmt_g17(*y)));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}
