//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Unknown and repeated keys are errors. Every key has a default.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, Family};
use crate::data::{self, Dataset};
use crate::error::{Error, Result};
use crate::net::FixedActivation;
use crate::optim::{AdamConfig, LrSchedule};
use crate::taaf::{ActivationChoice, Normalizer, Scheme, TaafConfig, Topology};

pub const DEFAULT_TOPOLOGY: &str = "embedding:16,16;fitting:16,1";

/// Where training samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Lennard-Jones pair energies, epsilon = sigma = 1.
    Lj,
    /// Morse pair energies, D = 1, a = 1.5, r_e = 1.2.
    Morse,
    Csv(PathBuf),
}

impl DataSource {
    pub fn name(&self) -> String {
        match self {
            DataSource::Lj => "lj".into(),
            DataSource::Morse => "morse".into(),
            DataSource::Csv(p) => p.display().to_string(),
        }
    }

    pub fn default_range(&self) -> (f64, f64) {
        match self {
            DataSource::Morse => (0.8, 3.0),
            _ => (0.95, 2.5),
        }
    }
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "" => Err(Error::Config("empty dataset".into())),
            "lj" | "lennard-jones" => Ok(DataSource::Lj),
            "morse" => Ok(DataSource::Morse),
            path => Ok(DataSource::Csv(PathBuf::from(path))),
        }
    }
}

/// Fixed activation tag or basis family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Fixed(FixedActivation),
    Taaf(Family),
}

impl ActivationKind {
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Fixed(f) => f.name(),
            ActivationKind::Taaf(f) => f.name(),
        }
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(f) = s.parse::<FixedActivation>() {
            return Ok(ActivationKind::Fixed(f));
        }
        s.parse::<Family>()
            .map(ActivationKind::Taaf)
            .map_err(|_| Error::Config(format!("unknown activation `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub topology: String,
    pub activation: ActivationKind,
    pub scheme: Scheme,
    pub degree: Option<usize>,
    pub grid_count: Option<usize>,
    pub domain_lo: f64,
    pub domain_hi: f64,
    pub jacobi_alpha: f64,
    pub jacobi_beta: f64,
    pub normalizer: Normalizer,
    pub unit_bias: bool,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lr_decay: f64,
    pub lr_patience: usize,
    pub lr_floor: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub dataset: DataSource,
    pub n_samples: usize,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub data_seed: Option<u64>,
    pub val_fraction: f64,
    pub output_dir: PathBuf,
    pub curve_samples: usize,
    pub curve_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let sched = LrSchedule::default();
        RunConfig {
            topology: DEFAULT_TOPOLOGY.into(),
            activation: ActivationKind::Fixed(FixedActivation::Tanh),
            scheme: Scheme::PerLayer,
            degree: None,
            grid_count: None,
            domain_lo: -1.0,
            domain_hi: 1.0,
            jacobi_alpha: 1.0,
            jacobi_beta: 1.0,
            normalizer: Normalizer::Tanh,
            unit_bias: false,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            lr_decay: sched.decay,
            lr_patience: sched.patience,
            lr_floor: sched.floor,
            batch_size: 32,
            epochs: 30,
            seed: 7,
            dataset: DataSource::Lj,
            n_samples: 2000,
            r_min: None,
            r_max: None,
            data_seed: None,
            val_fraction: 0.2,
            output_dir: PathBuf::from("taafs-run"),
            curve_samples: 61,
            curve_every: 1,
        }
    }
}

/// Every accepted key, in canonical order.
pub const KEYS: &[&str] = &[
    "topology",
    "activation",
    "scheme",
    "degree",
    "grid_count",
    "domain_lo",
    "domain_hi",
    "jacobi_alpha",
    "jacobi_beta",
    "normalizer",
    "unit_bias",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "lr_decay",
    "lr_patience",
    "lr_floor",
    "batch_size",
    "epochs",
    "seed",
    "dataset",
    "n_samples",
    "r_min",
    "r_max",
    "data_seed",
    "val_fraction",
    "output_dir",
    "curve_samples",
    "curve_every",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

fn opt_text<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or("auto".into(), T::to_string)
}

impl RunConfig {
    /// Parses config text over the defaults, then validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", idx + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: `{key}` set twice", idx + 1)));
            }
            cfg.set(key, value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", idx + 1, strip_prefix(&e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    /// Assigns one key. Does not validate the whole config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "topology" => self.topology = value.to_string(),
            "activation" => self.activation = value.parse()?,
            "scheme" => self.scheme = value.parse()?,
            "degree" => self.degree = parse_opt(key, value)?,
            "grid_count" => self.grid_count = parse_opt(key, value)?,
            "domain_lo" => self.domain_lo = parse_value(key, value)?,
            "domain_hi" => self.domain_hi = parse_value(key, value)?,
            "jacobi_alpha" => self.jacobi_alpha = parse_value(key, value)?,
            "jacobi_beta" => self.jacobi_beta = parse_value(key, value)?,
            "normalizer" => self.normalizer = value.parse()?,
            "unit_bias" => self.unit_bias = parse_bool(key, value)?,
            "lr" => self.lr = parse_value(key, value)?,
            "beta1" => self.beta1 = parse_value(key, value)?,
            "beta2" => self.beta2 = parse_value(key, value)?,
            "eps" => self.eps = parse_value(key, value)?,
            "lr_decay" => self.lr_decay = parse_value(key, value)?,
            "lr_patience" => self.lr_patience = parse_value(key, value)?,
            "lr_floor" => self.lr_floor = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "dataset" => self.dataset = value.parse()?,
            "n_samples" => self.n_samples = parse_value(key, value)?,
            "r_min" => self.r_min = parse_opt(key, value)?,
            "r_max" => self.r_max = parse_opt(key, value)?,
            "data_seed" => self.data_seed = parse_opt(key, value)?,
            "val_fraction" => self.val_fraction = parse_value(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "curve_samples" => self.curve_samples = parse_value(key, value)?,
            "curve_every" => self.curve_every = parse_value(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` overrides, then validates.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()
    }

    /// Value of `key` as it would be written to a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "topology" => self.topology.clone(),
            "activation" => self.activation.name().into(),
            "scheme" => self.scheme.name().into(),
            "degree" => opt_text(&self.degree),
            "grid_count" => opt_text(&self.grid_count),
            "domain_lo" => self.domain_lo.to_string(),
            "domain_hi" => self.domain_hi.to_string(),
            "jacobi_alpha" => self.jacobi_alpha.to_string(),
            "jacobi_beta" => self.jacobi_beta.to_string(),
            "normalizer" => self.normalizer.name().into(),
            "unit_bias" => self.unit_bias.to_string(),
            "lr" => self.lr.to_string(),
            "beta1" => self.beta1.to_string(),
            "beta2" => self.beta2.to_string(),
            "eps" => self.eps.to_string(),
            "lr_decay" => self.lr_decay.to_string(),
            "lr_patience" => self.lr_patience.to_string(),
            "lr_floor" => self.lr_floor.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "epochs" => self.epochs.to_string(),
            "seed" => self.seed.to_string(),
            "dataset" => self.dataset.name(),
            "n_samples" => self.n_samples.to_string(),
            "r_min" => opt_text(&self.r_min),
            "r_max" => opt_text(&self.r_max),
            "data_seed" => opt_text(&self.data_seed),
            "val_fraction" => self.val_fraction.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "curve_samples" => self.curve_samples.to_string(),
            "curve_every" => self.curve_every.to_string(),
            _ => return None,
        })
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        Topology::parse(&self.topology, 1).map_err(|e| Error::Config(e.to_string()))?;
        self.activation_choice()?;
        self.adam().validate()?;
        self.schedule().validate()?;
        if self.batch_size == 0 {
            return cfg_err("batch_size must be at least 1".into());
        }
        if self.n_samples == 0 {
            return cfg_err("n_samples must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return cfg_err(format!("val_fraction {} not in [0, 1)", self.val_fraction));
        }
        if self.curve_samples < 2 {
            return cfg_err("curve_samples must be at least 2".into());
        }
        if matches!(self.dataset, DataSource::Csv(_)) && (self.r_min.is_some() || self.r_max.is_some()) {
            return cfg_err("r_min/r_max only apply to generated datasets".into());
        }
        Ok(())
    }

    /// Basis spec for trainable activations; `None` for fixed ones.
    pub fn basis_spec(&self) -> Option<BasisSpec> {
        let ActivationKind::Taaf(family) = self.activation else {
            return None;
        };
        let mut spec = BasisSpec::new(family)
            .with_domain(self.domain_lo, self.domain_hi)
            .with_jacobi(self.jacobi_alpha, self.jacobi_beta);
        if let Some(d) = self.degree {
            spec = spec.with_degree(d);
        }
        if let Some(g) = self.grid_count {
            spec = spec.with_grid_count(g);
        }
        Some(spec)
    }

    pub fn activation_choice(&self) -> Result<ActivationChoice> {
        Ok(match self.activation {
            ActivationKind::Fixed(f) => ActivationChoice::Fixed(f),
            ActivationKind::Taaf(_) => {
                let spec = self.basis_spec().expect("taaf activation");
                spec.validate().map_err(|e| Error::Config(e.to_string()))?;
                ActivationChoice::Taaf(TaafConfig {
                    spec,
                    normalizer: self.normalizer,
                    bias: self.unit_bias,
                    scheme: self.scheme,
                })
            }
        })
    }

    pub fn topology_for(&self, input_dim: usize) -> Result<Topology> {
        let topo = Topology::parse(&self.topology, input_dim)?;
        if topo.input_dim() != input_dim {
            return Err(Error::Config(format!(
                "topology expects {} inputs but the dataset provides {input_dim}",
                topo.input_dim()
            )));
        }
        Ok(topo)
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            initial: self.lr,
            decay: self.lr_decay,
            floor: self.lr_floor,
            patience: self.lr_patience,
        }
    }

    pub fn distance_range(&self) -> (f64, f64) {
        let (lo, hi) = self.dataset.default_range();
        (self.r_min.unwrap_or(lo), self.r_max.unwrap_or(hi))
    }

    /// Generates or reads the raw dataset.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let seed = self.data_seed.unwrap_or(self.seed);
        match &self.dataset {
            DataSource::Lj => data::gen_lennard_jones(self.n_samples, self.distance_range(), seed),
            DataSource::Morse => data::gen_morse(self.n_samples, self.distance_range(), seed),
            DataSource::Csv(path) => data::load_csv(path),
        }
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
