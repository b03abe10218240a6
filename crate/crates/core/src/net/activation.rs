use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope of the leaky ReLU for negative inputs.
pub const LEAKY_RELU_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedActivation {
    Tanh,
    Sigmoid,
    Relu,
    LeakyRelu { alpha: f64 },
    Silu,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl FixedActivation {
    pub const ALL: [FixedActivation; 5] = [
        FixedActivation::Tanh,
        FixedActivation::Sigmoid,
        FixedActivation::Relu,
        FixedActivation::LeakyRelu {
            alpha: LEAKY_RELU_ALPHA,
        },
        FixedActivation::Silu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixedActivation::Tanh => "tanh",
            FixedActivation::Sigmoid => "sigmoid",
            FixedActivation::Relu => "relu",
            FixedActivation::LeakyRelu { .. } => "lrelu",
            FixedActivation::Silu => "silu",
        }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            FixedActivation::Tanh => z.tanh(),
            FixedActivation::Sigmoid => sigmoid(z),
            FixedActivation::Relu => z.max(0.0),
            FixedActivation::LeakyRelu { alpha } => {
                if z >= 0.0 {
                    z
                } else {
                    alpha * z
                }
            }
            FixedActivation::Silu => z * sigmoid(z),
        }
    }

    /// Derivative at `z`. ReLU-type kinks take the right-hand slope at 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            FixedActivation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            FixedActivation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            FixedActivation::Relu => {
                if z >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FixedActivation::LeakyRelu { alpha } => {
                if z >= 0.0 {
                    1.0
                } else {
                    alpha
                }
            }
            FixedActivation::Silu => {
                let s = sigmoid(z);
                s * (1.0 + z * (1.0 - s))
            }
        }
    }
}

impl fmt::Display for FixedActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixedActivation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tanh" => Ok(FixedActivation::Tanh),
            "sigmoid" => Ok(FixedActivation::Sigmoid),
            "relu" => Ok(FixedActivation::Relu),
            "lrelu" | "leaky_relu" => Ok(FixedActivation::LeakyRelu {
                alpha: LEAKY_RELU_ALPHA,
            }),
            "silu" | "swish" => Ok(FixedActivation::Silu),
            _ => Err(Error::Config(format!("unknown fixed activation `{s}`"))),
        }
    }
}
