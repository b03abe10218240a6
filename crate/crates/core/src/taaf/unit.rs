use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, BasisSpec};
use crate::error::{Error, Result};

/// Squashing map applied before basis evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalizer {
    #[default]
    Tanh,
    Identity,
}

impl Normalizer {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Normalizer::Tanh => z.tanh(),
            Normalizer::Identity => z,
        }
    }

    /// Derivative expressed through the normalized value `a = apply(z)`.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Normalizer::Tanh => 1.0 - a * a,
            Normalizer::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Normalizer::Tanh => "tanh",
            Normalizer::Identity => "identity",
        }
    }
}

impl std::str::FromStr for Normalizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tanh" => Ok(Normalizer::Tanh),
            "identity" | "none" => Ok(Normalizer::Identity),
            _ => Err(Error::Config(format!("unknown normalizer `{s}`"))),
        }
    }
}

/// Samples used to fit the initial coefficients.
pub const INIT_FIT_SAMPLES: usize = 64;

/// One trainable activation: `y = theta . basis(clamp(f(z))) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UnitRepr", into = "UnitRepr")]
pub struct TaafUnit {
    basis: Basis,
    theta: Vec<f64>,
    bias: f64,
    bias_trainable: bool,
    normalizer: Normalizer,
}

/// Values kept from a forward evaluation for the matching backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct TaafCache {
    pub z: f64,
    /// Normalized input after clamping to the basis domain.
    pub a: f64,
    pub basis: Vec<f64>,
    pub dbasis: Vec<f64>,
    /// `d clamp(f(z)) / dz`; zero where the clamp is active.
    pub dnorm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitGrad {
    pub dz: f64,
    pub dtheta: Vec<f64>,
    pub dbias: f64,
}

impl TaafUnit {
    /// A unit whose initial shape reproduces `tanh(z)` as closely as the basis
    /// allows: the coefficients are the least-squares fit, over
    /// [`INIT_FIT_SAMPLES`] points of the reachable part of the basis domain,
    /// of the function that composes with the normalizer to give `tanh`.
    pub fn new(spec: BasisSpec, normalizer: Normalizer, bias_trainable: bool) -> Result<Self> {
        let basis = Basis::new(spec)?;
        let theta = init_theta(&basis, normalizer);
        Ok(TaafUnit {
            basis,
            theta,
            bias: 0.0,
            bias_trainable,
            normalizer,
        })
    }

    pub fn with_theta(
        spec: BasisSpec,
        normalizer: Normalizer,
        theta: Vec<f64>,
        bias: f64,
    ) -> Result<Self> {
        let basis = Basis::new(spec)?;
        let mut unit = TaafUnit {
            theta: vec![0.0; basis.len()],
            basis,
            bias: 0.0,
            bias_trainable: false,
            normalizer,
        };
        unit.set_theta(theta)?;
        unit.set_bias(bias)?;
        Ok(unit)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn spec(&self) -> &BasisSpec {
        self.basis.spec()
    }

    pub fn normalizer(&self) -> Normalizer {
        self.normalizer
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Mutable view of the coefficients; the length cannot change through it.
    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn set_theta(&mut self, theta: Vec<f64>) -> Result<()> {
        if theta.len() != self.basis.len() {
            return Err(Error::Dimension(format!(
                "theta has {} entries but the {} basis has {}",
                theta.len(),
                self.basis.family(),
                self.basis.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidBasis("theta entries must be finite".into()));
        }
        self.theta = theta;
        Ok(())
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn set_bias(&mut self, bias: f64) -> Result<()> {
        if !bias.is_finite() {
            return Err(Error::InvalidBasis("bias must be finite".into()));
        }
        self.bias = bias;
        Ok(())
    }

    pub fn bias_trainable(&self) -> bool {
        self.bias_trainable
    }

    pub fn set_bias_trainable(&mut self, trainable: bool) {
        self.bias_trainable = trainable;
    }

    pub(crate) fn trainables_mut(&mut self) -> (&mut [f64], &mut f64) {
        (&mut self.theta, &mut self.bias)
    }

    /// Trainable scalars held by this unit.
    pub fn param_count(&self) -> usize {
        self.theta.len() + usize::from(self.bias_trainable)
    }

    fn normalize(&self, z: f64) -> (f64, f64) {
        let raw = self.normalizer.apply(z);
        let a = self.basis.clamp(raw);
        let dnorm = if a == raw {
            self.normalizer.derivative_from_output(raw)
        } else {
            0.0
        };
        (a, dnorm)
    }

    /// Output without keeping a cache.
    pub fn eval(&self, z: f64) -> f64 {
        let (a, _) = self.normalize(z);
        let values = self.basis.eval(a);
        dot(&self.theta, &values) + self.bias
    }

    pub fn forward(&self, z: f64) -> (f64, TaafCache) {
        let (a, dnorm) = self.normalize(z);
        let n = self.basis.len();
        let mut basis = vec![0.0; n];
        let mut dbasis = vec![0.0; n];
        self.basis.eval_into(a, &mut basis, Some(&mut dbasis));
        let y = dot(&self.theta, &basis) + self.bias;
        (
            y,
            TaafCache {
                z,
                a,
                basis,
                dbasis,
                dnorm,
            },
        )
    }

    pub fn backward(&self, cache: &TaafCache, upstream: f64) -> UnitGrad {
        let mut dtheta = vec![0.0; self.theta.len()];
        let mut dbias = 0.0;
        let dz = self.backward_into(cache, upstream, &mut dtheta, &mut dbias);
        UnitGrad { dz, dtheta, dbias }
    }

    /// Adds this evaluation's coefficient and bias gradients into the given
    /// accumulators and returns `dL/dz`. Shared units call this once per
    /// neuron, so contributions sum.
    pub fn backward_into(
        &self,
        cache: &TaafCache,
        upstream: f64,
        dtheta: &mut [f64],
        dbias: &mut f64,
    ) -> f64 {
        for (g, b) in dtheta.iter_mut().zip(&cache.basis) {
            *g += upstream * b;
        }
        *dbias += upstream;
        upstream * dot(&self.theta, &cache.dbasis) * cache.dnorm
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn init_theta(basis: &Basis, normalizer: Normalizer) -> Vec<f64> {
    let n = basis.len();
    let rows = INIT_FIT_SAMPLES;
    let spec = basis.spec();
    // fit over the part of the domain the normalizer can reach
    let (lo, hi) = match normalizer {
        Normalizer::Tanh if spec.domain_lo.max(-1.0) < spec.domain_hi.min(1.0) => {
            (spec.domain_lo.max(-1.0), spec.domain_hi.min(1.0))
        }
        _ => (spec.domain_lo, spec.domain_hi),
    };
    let mut design = DMatrix::<f64>::zeros(rows, n);
    let mut target = DVector::<f64>::zeros(rows);
    for r in 0..rows {
        let a = lo + (hi - lo) * r as f64 / (rows - 1) as f64;
        let values = basis.eval(a);
        for (c, v) in values.iter().enumerate() {
            design[(r, c)] = *v;
        }
        target[r] = match normalizer {
            Normalizer::Tanh => a,
            Normalizer::Identity => a.tanh(),
        };
    }
    let svd = design.svd(true, true);
    match svd.solve(&target, 1e-12) {
        Ok(sol) if sol.iter().all(|v| v.is_finite()) => sol.iter().copied().collect(),
        _ => vec![0.0; n],
    }
}

#[derive(Serialize, Deserialize)]
struct UnitRepr {
    spec: BasisSpec,
    normalizer: Normalizer,
    theta: Vec<f64>,
    bias: f64,
    bias_trainable: bool,
}

impl TryFrom<UnitRepr> for TaafUnit {
    type Error = Error;

    fn try_from(r: UnitRepr) -> Result<Self> {
        let mut unit = TaafUnit::with_theta(r.spec, r.normalizer, r.theta, r.bias)?;
        unit.bias_trainable = r.bias_trainable;
        Ok(unit)
    }
}

impl From<TaafUnit> for UnitRepr {
    fn from(u: TaafUnit) -> Self {
        UnitRepr {
            spec: u.basis.into(),
            normalizer: u.normalizer,
            theta: u.theta,
            bias: u.bias,
            bias_trainable: u.bias_trainable,
        }
    }
}
