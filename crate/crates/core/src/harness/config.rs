use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mlp::Init;
use crate::transform::TransformConfig;

pub const DATA_DIR_ENV: &str = "AYLA_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Poly,
    Curvefit,
    Mnist,
    Cifar100,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Poly => "poly",
            Experiment::Curvefit => "curvefit",
            Experiment::Mnist => "mnist",
            Experiment::Cifar100 => "cifar100",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub optimizer: OptimizerKind,
    pub ayla: bool,
    pub n1: f64,
    pub n2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub hidden_dim: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub start_x: f64,
    pub per_class: Option<usize>,
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub init: Init,
}

impl RunConfig {
    /// Documented per-experiment defaults.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            optimizer: OptimizerKind::Adam,
            ayla: false,
            n1: 1.0,
            n2: 1.0,
            lr: 1e-4,
            epochs: 10,
            hidden_dim: 8,
            batch_size: 256,
            seed: 0,
            start_x: -1.0,
            per_class: None,
            data_dir: None,
            out_dir: PathBuf::from("runs"),
            init: Init::GlorotUniform,
        };
        match experiment {
            Experiment::Poly => Self {
                optimizer: OptimizerKind::Sgd,
                n1: 1.0,
                n2: 1.4,
                lr: 0.03,
                epochs: 50,
                ..base
            },
            Experiment::Curvefit => Self {
                n1: 0.2,
                n2: 1.0,
                lr: 0.01,
                epochs: 100,
                hidden_dim: 128,
                seed: 7,
                ..base
            },
            Experiment::Mnist => Self {
                n1: 0.1,
                n2: 0.1,
                ..base
            },
            Experiment::Cifar100 => Self {
                n1: 1.5,
                n2: 1.5,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        TransformConfig::new(self.n1, self.n2)?;
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidConfig(format!("lr must be positive, got {}", self.lr)));
        }
        if !self.start_x.is_finite() {
            return Err(Error::InvalidConfig("start_x must be finite".into()));
        }
        if self.experiment != Experiment::Poly && self.hidden_dim == 0 {
            return Err(Error::InvalidConfig("hidden must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.per_class == Some(0) {
            return Err(Error::InvalidConfig("per_class must be at least 1".into()));
        }
        Ok(())
    }

    /// The transform actually applied to gradients: identity unless `ayla`.
    pub fn transform(&self) -> Result<TransformConfig> {
        if self.ayla {
            TransformConfig::new(self.n1, self.n2)
        } else {
            Ok(TransformConfig::identity())
        }
    }

    pub fn batch_size(&self) -> NonZeroUsize {
        NonZeroUsize::new(self.batch_size).unwrap_or(NonZeroUsize::MIN)
    }

    pub fn per_class(&self) -> Option<NonZeroUsize> {
        self.per_class.and_then(NonZeroUsize::new)
    }

    /// `--data-dir`, else `$AYLA_DATA_DIR`.
    pub fn resolved_data_dir(&self) -> Option<PathBuf> {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
    }

    pub fn run_name(&self) -> String {
        format!(
            "{}_{}{}_seed{}",
            self.experiment.name(),
            self.optimizer.name(),
            if self.ayla { "_ayla" } else { "" },
            self.seed
        )
    }
}

/// Optional settings from a JSON file or the command line. Keys are the
/// snake_case forms of the CLI flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub optimizer: Option<OptimizerKind>,
    pub ayla: Option<bool>,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub hidden: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub start_x: Option<f64>,
    pub per_class: Option<usize>,
    pub data_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub init: Option<Init>,
}

impl ConfigOverrides {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($src:ident => $dst:ident) => {
                if let Some(v) = &self.$src {
                    cfg.$dst = v.clone();
                }
            };
        }
        set!(optimizer => optimizer);
        set!(ayla => ayla);
        set!(n1 => n1);
        set!(n2 => n2);
        set!(lr => lr);
        set!(epochs => epochs);
        set!(hidden => hidden_dim);
        set!(batch_size => batch_size);
        set!(seed => seed);
        set!(start_x => start_x);
        set!(out => out_dir);
        set!(init => init);
        if let Some(p) = self.per_class {
            cfg.per_class = Some(p);
        }
        if let Some(d) = &self.data_dir {
            cfg.data_dir = Some(d.clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_defaults() {
        let c = RunConfig::defaults(Experiment::Poly);
        assert_eq!(c.optimizer, OptimizerKind::Sgd);
        assert_eq!((c.lr, c.epochs, c.start_x, c.n1, c.n2), (0.03, 50, -1.0, 1.0, 1.4));
        c.validate().unwrap();
    }

    #[test]
    fn identity_transform_without_flag() {
        let c = RunConfig::defaults(Experiment::Mnist);
        assert_eq!(c.transform().unwrap(), TransformConfig::identity());
    }

    #[test]
    fn overrides_from_json() {
        let o: ConfigOverrides =
            serde_json::from_str(r#"{"n1": 0.4, "ayla": true, "batch_size": 32, "optimizer": "sgd"}"#).unwrap();
        let mut c = RunConfig::defaults(Experiment::Curvefit);
        o.apply(&mut c);
        assert_eq!(
            (c.n1, c.ayla, c.batch_size, c.optimizer),
            (0.4, true, 32, OptimizerKind::Sgd)
        );
        assert!(serde_json::from_str::<ConfigOverrides>(r#"{"learning_rate": 1}"#).is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = RunConfig::defaults(Experiment::Mnist);
        c.n1 = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::defaults(Experiment::Mnist);
        c.per_class = Some(0);
        assert!(c.validate().is_err());
        let mut c = RunConfig::defaults(Experiment::Curvefit);
        c.lr = -1.0;
        assert!(c.validate().is_err());
    }
}
