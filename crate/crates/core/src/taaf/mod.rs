//! Trainable adaptive activation units.
//!
//! A unit normalizes its pre-activation (`tanh` by default), clamps it into
//! the basis domain, evaluates the basis and returns `theta . basis + bias`.
//! Gradients flow to `theta`, the optional bias and the input. The sharing of
//! units across neurons is decided by a [`Scheme`].

pub mod curve;
pub mod scheme;
pub mod unit;

pub use curve::{export_curve, ActivationCurve};
pub use scheme::{
    instantiate_units, parameter_count, ActivationChoice, ParamCount, Scheme, SubnetShape,
    TaafConfig, Topology, UnitBinding,
};
pub use unit::{Normalizer, TaafCache, TaafUnit, UnitGrad};
