//! Network shapes and the schemes that decide how many activation units exist
//! and which neurons share them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::net::FixedActivation;
use crate::taaf::Normalizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// One unit shared by every activated neuron.
    Global,
    /// One unit per named sub-network.
    PerNetwork,
    /// One unit per activated layer.
    PerLayer,
    /// One unit per activated neuron.
    PerNeuron,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Global,
        Scheme::PerNetwork,
        Scheme::PerLayer,
        Scheme::PerNeuron,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Global => "global",
            Scheme::PerNetwork => "per_network",
            Scheme::PerLayer => "per_layer",
            Scheme::PerNeuron => "per_neuron",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "global" | "1" => Ok(Scheme::Global),
            "per_network" | "2" => Ok(Scheme::PerNetwork),
            "per_layer" | "3" => Ok(Scheme::PerLayer),
            "per_neuron" | "4" => Ok(Scheme::PerNeuron),
            _ => Err(Error::Config(format!("unknown granularity scheme `{s}`"))),
        }
    }
}

/// Shape of one named sub-network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubnetShape {
    pub name: String,
    pub input_dim: usize,
    /// Output width of each layer, in order.
    pub layers: Vec<usize>,
    /// Whether each layer is followed by an activation.
    pub activated: Vec<bool>,
}

/// Ordered sub-networks; the output of each feeds the next, and the final
/// layer of the final sub-network is the (unactivated) regression head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub subnets: Vec<SubnetShape>,
    /// Whether the regression head carries a bias term.
    pub output_bias: bool,
}

impl Topology {
    /// Builds a topology from `(name, input_dim, widths)` triples. Every layer
    /// is activated except the last layer of the last sub-network.
    pub fn new(subnets: Vec<(String, usize, Vec<usize>)>) -> Result<Self> {
        let count = subnets.len();
        let subnets = subnets
            .into_iter()
            .enumerate()
            .map(|(s, (name, input_dim, layers))| {
                let mut activated = vec![true; layers.len()];
                if s + 1 == count {
                    if let Some(last) = activated.last_mut() {
                        *last = false;
                    }
                }
                SubnetShape {
                    name,
                    input_dim,
                    layers,
                    activated,
                }
            })
            .collect();
        let topo = Topology {
            subnets,
            output_bias: true,
        };
        topo.validate()?;
        Ok(topo)
    }

    /// Embedding `[25, 25, 25]` followed by fitting `[50, 50, 50, 1]`.
    ///
    /// The embedding net sees one scalar per neighbor; the fitting net sees a
    /// 25 x 16 descriptor. With a bias-free head this totals 26550 parameters.
    pub fn deep_potential() -> Self {
        let mut topo = Topology::new(vec![
            ("embedding".into(), 1, vec![25, 25, 25]),
            ("fitting".into(), 400, vec![50, 50, 50, 1]),
        ])
        .expect("static topology is valid");
        topo.output_bias = false;
        topo
    }

    /// Parses `name[:input]` groups such as `embedding:8,8;fitting:16,16,1`
    /// or `embedding[1]:25,25,25;fitting[400]:50,50,50,1`. Sub-networks
    /// without an explicit `[input]` take the previous output width, or
    /// `input_dim` for the first one.
    pub fn parse(text: &str, input_dim: usize) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.eq_ignore_ascii_case("dp") {
            return Ok(Topology::deep_potential());
        }
        let mut subnets = Vec::new();
        let mut prev_out = input_dim;
        for (i, group) in trimmed.split(';').filter(|g| !g.trim().is_empty()).enumerate() {
            let (head, widths) = match group.split_once(':') {
                Some((h, w)) => (h.trim(), w),
                None => ("", group),
            };
            let (name, explicit_in) = match head.split_once('[') {
                Some((n, rest)) => {
                    let inner = rest.strip_suffix(']').ok_or_else(|| {
                        Error::InvalidTopology(format!("unterminated `[` in `{group}`"))
                    })?;
                    let dim = inner.trim().parse::<usize>().map_err(|_| {
                        Error::InvalidTopology(format!("bad input width `{inner}`"))
                    })?;
                    (n.trim().to_string(), Some(dim))
                }
                None => (head.to_string(), None),
            };
            let name = if name.is_empty() {
                format!("net{i}")
            } else {
                name
            };
            let layers = widths
                .split(',')
                .map(|w| {
                    w.trim().parse::<usize>().map_err(|_| {
                        Error::InvalidTopology(format!("bad layer width `{}` in `{group}`", w.trim()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let input = explicit_in.unwrap_or(prev_out);
            prev_out = *layers.last().unwrap_or(&input);
            subnets.push((name, input, layers));
        }
        Topology::new(subnets)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subnets.is_empty() {
            return Err(Error::InvalidTopology("topology has no sub-networks".into()));
        }
        for (i, s) in self.subnets.iter().enumerate() {
            if s.layers.is_empty() {
                return Err(Error::InvalidTopology(format!("sub-network `{}` has no layers", s.name)));
            }
            if s.input_dim == 0 || s.layers.contains(&0) {
                return Err(Error::InvalidTopology(format!(
                    "sub-network `{}` has a zero-width layer",
                    s.name
                )));
            }
            if s.activated.len() != s.layers.len() {
                return Err(Error::InvalidTopology(format!(
                    "sub-network `{}` has {} activation flags for {} layers",
                    s.name,
                    s.activated.len(),
                    s.layers.len()
                )));
            }
            if self.subnets[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::InvalidTopology(format!("duplicate sub-network name `{}`", s.name)));
            }
        }
        Ok(())
    }

    /// Checks that each sub-network's input matches the previous output and
    /// that the head is a single unactivated output.
    pub fn validate_chain(&self) -> Result<()> {
        self.validate()?;
        for pair in self.subnets.windows(2) {
            let out = *pair[0].layers.last().unwrap();
            if pair[1].input_dim != out {
                return Err(Error::Dimension(format!(
                    "`{}` outputs {} values but `{}` expects {}",
                    pair[0].name, out, pair[1].name, pair[1].input_dim
                )));
            }
        }
        let last = self.subnets.last().unwrap();
        if *last.layers.last().unwrap() != 1 {
            return Err(Error::Dimension("the head must produce a single output".into()));
        }
        if *last.activated.last().unwrap() {
            return Err(Error::InvalidTopology("the head layer must not be activated".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.subnets[0].input_dim
    }

    /// `(subnet, layer, in_dim, out_dim, activated, has_bias)` for every layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize, usize, usize, bool, bool)> {
        let mut out = Vec::new();
        let n_sub = self.subnets.len();
        for (s, sub) in self.subnets.iter().enumerate() {
            let mut fan_in = sub.input_dim;
            for (l, (&width, &act)) in sub.layers.iter().zip(&sub.activated).enumerate() {
                let is_head = s + 1 == n_sub && l + 1 == sub.layers.len();
                let has_bias = !is_head || self.output_bias;
                out.push((s, l, fan_in, width, act, has_bias));
                fan_in = width;
            }
        }
        out
    }

    pub fn dense_param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|&(_, _, i, o, _, b)| i * o + if b { o } else { 0 })
            .sum()
    }

    pub fn activated_layer_count(&self) -> usize {
        self.layer_dims().iter().filter(|d| d.4).count()
    }

    pub fn activated_neuron_count(&self) -> usize {
        self.layer_dims().iter().filter(|d| d.4).map(|d| d.3).sum()
    }
}

/// Which unit each activated neuron uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitBinding {
    pub unit_ids: Vec<String>,
    /// `layers[subnet][layer]` is `None` for unactivated layers, otherwise the
    /// unit index of each neuron.
    pub layers: Vec<Vec<Option<Vec<usize>>>>,
}

impl UnitBinding {
    pub fn unit_count(&self) -> usize {
        self.unit_ids.len()
    }

    /// Number of neurons bound to each unit.
    pub fn usage(&self) -> Vec<usize> {
        let mut counts = vec![0; self.unit_ids.len()];
        for layer in self.layers.iter().flatten().flatten() {
            for &u in layer {
                counts[u] += 1;
            }
        }
        counts
    }
}

/// Decides how many units exist under `scheme` and which neurons share them.
pub fn instantiate_units(scheme: Scheme, topology: &Topology) -> Result<UnitBinding> {
    topology.validate()?;
    let mut unit_ids: Vec<String> = Vec::new();
    let mut layers = Vec::with_capacity(topology.subnets.len());
    for sub in &topology.subnets {
        let mut sub_layers = Vec::with_capacity(sub.layers.len());
        let network_unit = if scheme == Scheme::PerNetwork && sub.activated.iter().any(|&a| a) {
            unit_ids.push(sub.name.clone());
            Some(unit_ids.len() - 1)
        } else {
            None
        };
        for (l, (&width, &act)) in sub.layers.iter().zip(&sub.activated).enumerate() {
            if !act {
                sub_layers.push(None);
                continue;
            }
            let neurons = match scheme {
                Scheme::Global => {
                    if unit_ids.is_empty() {
                        unit_ids.push("global".into());
                    }
                    vec![0; width]
                }
                Scheme::PerNetwork => vec![network_unit.expect("activated subnet has a unit"); width],
                Scheme::PerLayer => {
                    unit_ids.push(format!("{}.L{l}", sub.name));
                    vec![unit_ids.len() - 1; width]
                }
                Scheme::PerNeuron => (0..width)
                    .map(|j| {
                        unit_ids.push(format!("{}.L{l}.n{j}", sub.name));
                        unit_ids.len() - 1
                    })
                    .collect(),
            };
            sub_layers.push(Some(neurons));
        }
        layers.push(sub_layers);
    }
    Ok(UnitBinding { unit_ids, layers })
}

/// How a trainable activation is configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaafConfig {
    pub spec: BasisSpec,
    pub normalizer: Normalizer,
    /// Train a scalar bias per unit in addition to the coefficients.
    pub bias: bool,
    pub scheme: Scheme,
}

impl TaafConfig {
    pub fn new(spec: BasisSpec, scheme: Scheme) -> Self {
        TaafConfig {
            spec,
            normalizer: Normalizer::Tanh,
            bias: false,
            scheme,
        }
    }

    pub fn unit_size(&self) -> usize {
        self.spec.len() + usize::from(self.bias)
    }
}

/// Activation used by every activated layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationChoice {
    Fixed(FixedActivation),
    Taaf(TaafConfig),
}

impl ActivationChoice {
    pub fn label(&self) -> String {
        match self {
            ActivationChoice::Fixed(f) => f.name().to_string(),
            ActivationChoice::Taaf(t) => t.spec.family.name().to_string(),
        }
    }

    pub fn is_taaf(&self) -> bool {
        matches!(self, ActivationChoice::Taaf(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub total: usize,
    /// Parameters of the same topology with a fixed activation.
    pub baseline: usize,
    pub taaf_added: usize,
    pub units: usize,
}

impl ParamCount {
    /// `total / baseline` as a percentage.
    pub fn ratio_percent(&self) -> f64 {
        100.0 * self.total as f64 / self.baseline as f64
    }
}

/// Parameter totals for `topology` under the given activation choice.
pub fn parameter_count(topology: &Topology, activation: &ActivationChoice) -> Result<ParamCount> {
    let baseline = topology.dense_param_count();
    let (units, taaf_added) = match activation {
        ActivationChoice::Fixed(_) => {
            topology.validate()?;
            (0, 0)
        }
        ActivationChoice::Taaf(cfg) => {
            let binding = instantiate_units(cfg.scheme, topology)?;
            (binding.unit_count(), binding.unit_count() * cfg.unit_size())
        }
    };
    Ok(ParamCount {
        total: baseline + taaf_added,
        baseline,
        taaf_added,
        units,
    })
}
