use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{FixedActivation, GradientBundle};
use crate::taaf::{
    instantiate_units, ActivationChoice, ParamCount, TaafCache, TaafUnit, Topology,
};

/// What follows a layer's affine map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerActivation {
    None,
    Fixed(FixedActivation),
    /// Index into the model's unit table for each neuron.
    Taaf(Vec<usize>),
}

/// `y = act(W x + b)` with `W` stored row-major as `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    /// Empty when the layer has no bias.
    biases: Vec<f64>,
    activation: LayerActivation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn has_bias(&self) -> bool {
        !self.biases.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    pub fn activation(&self) -> &LayerActivation {
        &self.activation
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

/// A named sub-network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub name: String,
    pub layers: Vec<DenseLayer>,
}

/// Serially composed sub-networks ending in a scalar regression head, plus the
/// table of activation units their layers refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    topology: Topology,
    activation: ActivationChoice,
    networks: Vec<Network>,
    units: Vec<TaafUnit>,
    unit_ids: Vec<String>,
}

#[derive(Debug, Clone)]
enum ActCache {
    None,
    Fixed,
    Taaf(Vec<TaafCache>),
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Vec<f64>,
    z: Vec<f64>,
    act: ActCache,
}

/// Per-layer values retained by [`Model::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
}

impl Model {
    /// Builds a model with Glorot-uniform weights and zero biases.
    ///
    /// Weights are drawn from a ChaCha stream seeded by `seed` in layer order,
    /// independent of the activation choice, so a fixed-activation model and a
    /// trainable-activation model with the same seed share their weights.
    pub fn new(topology: Topology, activation: ActivationChoice, seed: u64) -> Result<Self> {
        topology.validate_chain()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let (binding, units) = match &activation {
            ActivationChoice::Fixed(_) => (None, Vec::new()),
            ActivationChoice::Taaf(cfg) => {
                let binding = instantiate_units(cfg.scheme, &topology)?;
                let template = TaafUnit::new(cfg.spec.clone(), cfg.normalizer, cfg.bias)?;
                let units = vec![template; binding.unit_count()];
                (Some(binding), units)
            }
        };

        let mut networks: Vec<Network> = topology
            .subnets
            .iter()
            .map(|s| Network {
                name: s.name.clone(),
                layers: Vec::with_capacity(s.layers.len()),
            })
            .collect();
        for (s, l, fan_in, fan_out, activated, has_bias) in topology.layer_dims() {
            let bound = 6.0_f64.sqrt() / ((fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            let act = match (&activation, activated) {
                (_, false) => LayerActivation::None,
                (ActivationChoice::Fixed(f), true) => LayerActivation::Fixed(*f),
                (ActivationChoice::Taaf(_), true) => {
                    let b = binding.as_ref().expect("taaf models have a binding");
                    LayerActivation::Taaf(b.layers[s][l].clone().expect("activated layer is bound"))
                }
            };
            networks[s].layers.push(DenseLayer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights,
                biases: if has_bias { vec![0.0; fan_out] } else { Vec::new() },
                activation: act,
            });
        }

        let unit_ids = binding.map(|b| b.unit_ids).unwrap_or_default();
        Ok(Model {
            topology,
            activation,
            networks,
            units,
            unit_ids,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn activation(&self) -> &ActivationChoice {
        &self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.topology.input_dim()
    }

    pub fn networks(&self) -> &[Network] {
        &self.networks
    }

    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.networks.iter().flat_map(|n| n.layers.iter())
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer> {
        self.networks.iter_mut().flat_map(|n| n.layers.iter_mut())
    }

    pub fn units(&self) -> &[TaafUnit] {
        &self.units
    }

    pub fn units_mut(&mut self) -> &mut [TaafUnit] {
        &mut self.units
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    /// Parameter totals counted from the allocated storage.
    pub fn parameter_count(&self) -> ParamCount {
        let baseline = self.layers().map(DenseLayer::param_count).sum();
        let taaf_added = self.units.iter().map(TaafUnit::param_count).sum::<usize>();
        ParamCount {
            total: baseline + taaf_added,
            baseline,
            taaf_added,
            units: self.units.len(),
        }
    }

    /// Copies the dense weights and biases of `other`, which must share this
    /// model's topology.
    pub fn copy_dense_from(&mut self, other: &Model) -> Result<()> {
        if self.topology != other.topology {
            return Err(Error::Dimension("models have different topologies".into()));
        }
        for (dst, src) in self.layers_mut().zip(other.layers()) {
            dst.weights.copy_from_slice(&src.weights);
            dst.biases.copy_from_slice(&src.biases);
        }
        Ok(())
    }

    /// Scalar output only.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.forward(x).0
    }

    /// # Panics
    /// If `x.len()` differs from [`Model::input_dim`].
    pub fn forward(&self, x: &[f64]) -> (f64, ForwardCache) {
        assert_eq!(
            x.len(),
            self.input_dim(),
            "input has {} features but the model expects {}",
            x.len(),
            self.input_dim()
        );
        let mut caches = Vec::with_capacity(self.layers().count());
        let mut current = x.to_vec();
        for layer in self.layers() {
            let mut z = vec![0.0; layer.out_dim];
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                let mut acc = row.iter().zip(&current).map(|(w, v)| w * v).sum::<f64>();
                if let Some(b) = layer.biases.get(o) {
                    acc += b;
                }
                *zo = acc;
            }
            let (out, act) = match &layer.activation {
                LayerActivation::None => (z.clone(), ActCache::None),
                LayerActivation::Fixed(f) => (z.iter().map(|&v| f.apply(v)).collect(), ActCache::Fixed),
                LayerActivation::Taaf(bound) => {
                    let mut out = Vec::with_capacity(z.len());
                    let mut unit_caches = Vec::with_capacity(z.len());
                    for (&zj, &u) in z.iter().zip(bound) {
                        let (y, c) = self.units[u].forward(zj);
                        out.push(y);
                        unit_caches.push(c);
                    }
                    (out, ActCache::Taaf(unit_caches))
                }
            };
            caches.push(LayerCache {
                input: std::mem::replace(&mut current, out),
                z,
                act,
            });
        }
        (current[0], ForwardCache { layers: caches })
    }

    pub fn zero_grads(&self) -> GradientBundle {
        GradientBundle::zeros_like(self)
    }

    /// Reverse-mode pass for `dL/dE = upstream`, added into `grads`.
    pub fn backward_into(&self, cache: &ForwardCache, upstream: f64, grads: &mut GradientBundle) {
        let mut delta = vec![upstream];
        let layers: Vec<&DenseLayer> = self.layers().collect();
        for (li, (layer, lc)) in layers.iter().zip(&cache.layers).enumerate().rev() {
            // delta: dL/d(layer output) -> dL/dz
            let dz: Vec<f64> = match (&layer.activation, &lc.act) {
                (LayerActivation::None, _) => delta,
                (LayerActivation::Fixed(f), _) => delta
                    .iter()
                    .zip(&lc.z)
                    .map(|(d, &z)| d * f.derivative(z))
                    .collect(),
                (LayerActivation::Taaf(bound), ActCache::Taaf(uc)) => delta
                    .iter()
                    .zip(bound)
                    .zip(uc)
                    .map(|((&d, &u), c)| {
                        let g = &mut grads.units[u];
                        self.units[u].backward_into(c, d, &mut g.dtheta, &mut g.dbias)
                    })
                    .collect(),
                (LayerActivation::Taaf(_), _) => unreachable!("cache does not match the model"),
            };
            let lg = &mut grads.layers[li];
            for (o, &dzo) in dz.iter().enumerate() {
                let row = &mut lg.dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, &xi) in row.iter_mut().zip(&lc.input) {
                    *g += dzo * xi;
                }
                if let Some(b) = lg.db.get_mut(o) {
                    *b += dzo;
                }
            }
            let mut next = vec![0.0; layer.in_dim];
            for (o, &dzo) in dz.iter().enumerate() {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (n, &w) in next.iter_mut().zip(row) {
                    *n += w * dzo;
                }
            }
            delta = next;
        }
        for (g, d) in grads.dx.iter_mut().zip(&delta) {
            *g += d;
        }
    }

    pub fn backward(&self, cache: &ForwardCache, upstream: f64) -> GradientBundle {
        let mut grads = self.zero_grads();
        self.backward_into(cache, upstream, &mut grads);
        grads
    }

    /// Force convention: `-dE/dx`.
    pub fn input_gradient(&self, x: &[f64]) -> Vec<f64> {
        let (_, cache) = self.forward(x);
        let grads = self.backward(&cache, 1.0);
        grads.dx.iter().map(|g| -g).collect()
    }

    /// Every trainable slice, in the same order as [`Model::grad_slices`].
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for net in &mut self.networks {
            for layer in &mut net.layers {
                out.push(&mut layer.weights);
                if !layer.biases.is_empty() {
                    out.push(&mut layer.biases);
                }
            }
        }
        for unit in &mut self.units {
            let trainable_bias = unit.bias_trainable();
            let (theta, bias) = unit.trainables_mut();
            out.push(theta);
            if trainable_bias {
                out.push(std::slice::from_mut(bias));
            }
        }
        out
    }

    /// Gradient slices of `grads` lined up with [`Model::param_slices_mut`].
    pub fn grad_slices<'a>(&self, grads: &'a GradientBundle) -> Vec<&'a [f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for (layer, lg) in self.layers().zip(&grads.layers) {
            out.push(&lg.dw);
            if layer.has_bias() {
                out.push(&lg.db);
            }
        }
        for (unit, ug) in self.units.iter().zip(&grads.units) {
            out.push(&ug.dtheta);
            if unit.bias_trainable() {
                out.push(std::slice::from_ref(&ug.dbias));
            }
        }
        out
    }

    /// Structural consistency check, for models read from disk.
    pub fn validate(&self) -> Result<()> {
        self.topology.validate_chain()?;
        let dims = self.topology.layer_dims();
        let bad = |msg: String| Err(Error::Dimension(msg));
        if self.networks.len() != self.topology.subnets.len() || self.layers().count() != dims.len() {
            return bad("layer structure does not match the topology".into());
        }
        if self.unit_ids.len() != self.units.len() {
            return bad("unit ids and units differ in number".into());
        }
        for (layer, &(s, l, fan_in, fan_out, activated, has_bias)) in self.layers().zip(&dims) {
            let name = format!("{}.L{l}", self.topology.subnets[s].name);
            if layer.in_dim != fan_in
                || layer.out_dim != fan_out
                || layer.weights.len() != fan_in * fan_out
                || layer.biases.len() != if has_bias { fan_out } else { 0 }
            {
                return bad(format!("layer {name} has the wrong shape"));
            }
            match (&layer.activation, activated) {
                (LayerActivation::None, false) => {}
                (LayerActivation::Fixed(_), true) => {}
                (LayerActivation::Taaf(bound), true)
                    if bound.len() == fan_out && bound.iter().all(|&u| u < self.units.len()) => {}
                _ => return bad(format!("layer {name} has an inconsistent activation")),
            }
        }
        if !self.is_finite() {
            return Err(Error::Checkpoint("model contains non-finite parameters".into()));
        }
        Ok(())
    }

    /// Checks every parameter is finite.
    pub fn is_finite(&self) -> bool {
        self.layers()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
            && self
                .units
                .iter()
                .all(|u| u.theta().iter().all(|v| v.is_finite()) && u.bias().is_finite())
    }
}
