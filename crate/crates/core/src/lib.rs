//! Trainable adaptive activation functions.
//!
//! An activation unit squashes its pre-activation into a fixed domain, expands
//! it in a chosen basis (B-splines, Fourier harmonics, Gaussian bumps or one of
//! several orthogonal polynomial families) and returns a trainable linear
//! combination of the basis values. Units are shared across a dense network
//! according to a granularity scheme and trained jointly with the weights.
//!
//! Crate layout:
//! - [`basis`]: basis families and their derivatives
//! - [`taaf`]: the activation unit, sharing schemes, curve export
//! - [`net`]: dense networks with exact reverse-mode gradients
//! - [`optim`]: Adam and the plateau learning-rate schedule
//! - [`data`]: synthetic pair-potential datasets, CSV IO, standardization
//! - [`config`], [`train`], [`bench`], [`checkpoint`]: the run harness behind the CLI

pub mod basis;
pub mod bench;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod net;
pub mod optim;
pub mod taaf;
pub mod train;

pub use basis::{make_knot_vector, Basis, BasisSpec, BasisVector, Family};
pub use error::{Error, Result};
pub use net::{FixedActivation, GradientBundle, Model};
pub use taaf::{Normalizer, Scheme, TaafUnit, Topology};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
