//! Dense feed-forward networks whose layers use fixed or trainable
//! activations, with exact reverse-mode gradients for every trainable and for
//! the input (forces are `-dE/dx`).

pub mod activation;
pub mod grad;
pub mod model;

pub use activation::{FixedActivation, LEAKY_RELU_ALPHA};
pub use grad::{GradientBundle, LayerGrad, UnitGradAcc};
pub use model::{DenseLayer, ForwardCache, LayerActivation, Model, Network};
