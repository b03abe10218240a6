use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Sample};
use crate::error::{Error, Result};

/// Lennard-Jones ranges must stay inside this open interval (units of sigma).
pub const LJ_RANGE_LIMITS: (f64, f64) = (0.8, 3.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairPotential {
    /// `4 eps ((s/r)^12 - (s/r)^6)`
    LennardJones { epsilon: f64, sigma: f64 },
    /// `D (1 - exp(-a (r - r_e)))^2 - D`
    Morse { depth: f64, a: f64, r_e: f64 },
}

impl PairPotential {
    pub const LJ: PairPotential = PairPotential::LennardJones { epsilon: 1.0, sigma: 1.0 };
    pub const MORSE: PairPotential = PairPotential::Morse { depth: 1.0, a: 1.5, r_e: 1.2 };

    pub fn energy(self, r: f64) -> f64 {
        match self {
            PairPotential::LennardJones { epsilon, sigma } => {
                let s6 = (sigma / r).powi(6);
                4.0 * epsilon * (s6 * s6 - s6)
            }
            PairPotential::Morse { depth, a, r_e } => {
                let q = 1.0 - (-a * (r - r_e)).exp();
                depth * q * q - depth
            }
        }
    }

    /// `-dE/dr`.
    pub fn force(self, r: f64) -> f64 {
        match self {
            PairPotential::LennardJones { epsilon, sigma } => {
                let s6 = (sigma / r).powi(6);
                24.0 * epsilon * (2.0 * s6 * s6 - s6) / r
            }
            PairPotential::Morse { depth, a, r_e } => {
                let e = (-a * (r - r_e)).exp();
                -2.0 * depth * a * (1.0 - e) * e
            }
        }
    }

    fn check_range(self, (lo, hi): (f64, f64)) -> Result<()> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("bad distance range [{lo}, {hi}]")));
        }
        if lo <= 0.0 {
            return Err(Error::Config(format!("distance range [{lo}, {hi}] reaches r <= 0")));
        }
        if let PairPotential::LennardJones { sigma, .. } = self {
            let (a, b) = LJ_RANGE_LIMITS;
            if lo <= a * sigma || hi >= b * sigma {
                return Err(Error::Config(format!(
                    "Lennard-Jones range [{lo}, {hi}] must lie inside ({a}, {b}) sigma"
                )));
            }
        }
        Ok(())
    }

    /// `n` samples with `r` uniform on `[lo, hi)`.
    pub fn generate(self, n: usize, range: (f64, f64), seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        self.check_range(range)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let r = rng.random_range(range.0..range.1);
                Sample {
                    features: pair_features(r).to_vec(),
                    energy: self.energy(r),
                    forces: Some(vec![self.force(r)]),
                }
            })
            .collect();
        Dataset::new(samples)
    }
}

/// Descriptor `[r, 1/r, 1/r^6, 1/r^12]`.
pub fn pair_features(r: f64) -> [f64; 4] {
    let inv = 1.0 / r;
    let inv6 = inv.powi(6);
    [r, inv, inv6, inv6 * inv6]
}

/// `d pair_features / dr`.
pub fn pair_jacobian(r: f64) -> [f64; 4] {
    let inv = 1.0 / r;
    [1.0, -inv * inv, -6.0 * inv.powi(7), -12.0 * inv.powi(13)]
}

pub fn gen_lennard_jones(n: usize, range: (f64, f64), seed: u64) -> Result<Dataset> {
    PairPotential::LJ.generate(n, range, seed)
}

pub fn gen_morse(n: usize, range: (f64, f64), seed: u64) -> Result<Dataset> {
    PairPotential::MORSE.generate(n, range, seed)
}
