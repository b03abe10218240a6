#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taafs::basis::{Basis, BasisSpec, Family};
use taafs::net::{LayerActivation, Model};
use taafs::taaf::{ActivationChoice, Normalizer, Scheme, TaafConfig, Topology};
use taafs::FixedActivation;

pub const FD_STEP: f64 = 1e-6;

/// Central differences refined by Richardson extrapolation (Ridders'
/// scheme), starting from step `h0` and shrinking by 1.4 per stage. Returns
/// the estimate with the smallest extrapolation error.
///
/// Whole-network outputs can be steep in some directions and large in
/// others, so no single fixed step is accurate for every entry.
pub fn ridders(f: impl Fn(f64) -> f64, x: f64, h0: f64) -> f64 {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const N: usize = 10;
    let mut a = [[0.0f64; N]; N];
    // shrink the first step until halving it barely changes the central
    // difference, i.e. the stencil sits in the smooth local regime
    let cd = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let mut h = h0;
    while h > 1e-8 {
        let (d1, d2) = (cd(h), cd(h / 2.0));
        if (d1 - d2).abs() <= 1e-2 * d1.abs().max(d2.abs()).max(1e-3) {
            break;
        }
        h /= 10.0;
    }
    a[0][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    let mut best = a[0][0];
    let mut err = f64::INFINITY;
    for i in 1..N {
        h /= CON;
        a[0][i] = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    best
}

/// Initial Ridders step for whole-network checks.
pub const NET_FD_STEP: f64 = 1e-3;

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn rel_err(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

pub fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

/// Every activation the suite covers: fixed tags, then basis families.
pub fn all_activations() -> Vec<String> {
    FixedActivation::ALL
        .iter()
        .map(|a| a.name().to_string())
        .chain(Family::ALL.iter().map(|f| f.name().to_string()))
        .collect()
}

pub fn small_topologies() -> Vec<Topology> {
    vec![
        Topology::parse("net:3,1", 2).unwrap(),
        Topology::parse("a:4,3;b:3,1", 3).unwrap(),
        Topology::parse("embedding:5,5;fitting:4,4,1", 2).unwrap(),
    ]
}

/// A random small model for `activation` with perturbed weights, biases and
/// coefficients so that nothing sits at its initial value.
pub fn random_model(activation: &str, rng: &mut ChaCha8Rng) -> Model {
    let topos = small_topologies();
    let topo = topos[rng.random_range(0..topos.len())].clone();
    let choice = match activation.parse::<FixedActivation>() {
        Ok(f) => ActivationChoice::Fixed(f),
        Err(_) => {
            let family: Family = activation.parse().unwrap();
            let mut spec = BasisSpec::new(family);
            let normalizer = if rng.random_bool(0.75) {
                Normalizer::Tanh
            } else {
                spec = spec.with_domain(-6.0, 6.0);
                Normalizer::Identity
            };
            if family == Family::Jacobi {
                spec = spec.with_jacobi(rng.random_range(-0.5..2.0), rng.random_range(-0.5..2.0));
            }
            ActivationChoice::Taaf(TaafConfig {
                spec,
                normalizer,
                bias: rng.random_bool(0.5),
                scheme: Scheme::ALL[rng.random_range(0..4)],
            })
        }
    };
    let mut model = Model::new(topo, choice, rng.random()).unwrap();
    for layer in model.layers_mut() {
        for b in layer.biases_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    for unit in model.units_mut() {
        let scales = basis_scales(unit.basis());
        for (t, s) in unit.theta_mut().iter_mut().zip(scales) {
            *t += rng.random_range(-0.3..0.3) / s;
        }
        if unit.bias_trainable() {
            unit.set_bias(rng.random_range(-0.5..0.5)).unwrap();
        }
    }
    model
}

/// Largest magnitude of each basis function over the domain, at least 1.
/// Coefficient perturbations are divided by it so that high-order
/// polynomials do not dominate the unit output.
pub fn basis_scales(basis: &Basis) -> Vec<f64> {
    let spec = basis.spec();
    let mut scales = vec![1.0f64; basis.len()];
    for i in 0..=200 {
        let x = spec.domain_lo + (spec.domain_hi - spec.domain_lo) * i as f64 / 200.0;
        for (s, v) in scales.iter_mut().zip(basis.eval(x).iter()) {
            *s = s.max(v.abs());
        }
    }
    scales
}

/// Pre-activations of every activated neuron paired with the points where
/// that activation is not differentiable, by a plain re-implementation of
/// the forward pass.
pub fn kink_distances(model: &Model, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    let mut out = Vec::new();
    for layer in model.layers() {
        let mut next = Vec::with_capacity(layer.out_dim());
        for o in 0..layer.out_dim() {
            let row = &layer.weights()[o * layer.in_dim()..(o + 1) * layer.in_dim()];
            let mut z: f64 = row.iter().zip(&h).map(|(w, v)| w * v).sum();
            if layer.has_bias() {
                z += layer.biases()[o];
            }
            let y = match layer.activation() {
                LayerActivation::None => z,
                LayerActivation::Fixed(f) => {
                    if matches!(f, FixedActivation::Relu | FixedActivation::LeakyRelu { .. }) {
                        out.push(z.abs());
                    }
                    f.apply(z)
                }
                LayerActivation::Taaf(ids) => {
                    let unit = &model.units()[ids[o]];
                    if unit.normalizer() == Normalizer::Identity {
                        let spec = unit.spec();
                        out.push((z - spec.domain_lo).abs().min((z - spec.domain_hi).abs()));
                    }
                    unit.eval(z)
                }
            };
            next.push(y);
        }
        h = next;
    }
    out
}

/// Random input whose pre-activations keep clear of activation kinks, so a
/// finite-difference stencil never straddles one. `None` if the model has a
/// neuron pinned near a kink whatever the input.
pub fn random_input(model: &Model, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    (0..200).find_map(|_| {
        let x: Vec<f64> = (0..model.input_dim()).map(|_| rng.random_range(-1.5..1.5)).collect();
        kink_distances(model, &x).iter().all(|&d| d > 0.05).then_some(x)
    })
}

/// A random model together with a kink-free input.
pub fn random_case(activation: &str, rng: &mut ChaCha8Rng) -> (Model, Vec<f64>) {
    loop {
        let model = random_model(activation, rng);
        if let Some(x) = random_input(&model, rng) {
            return (model, x);
        }
    }
}

/// Worst relative error between the analytic gradient bundle and central
/// finite differences of `predict`, over every trainable and every input.
pub fn worst_gradient_error(model: &Model, x: &[f64]) -> (f64, String) {
    let (_, cache) = model.forward(x);
    let grads = model.backward(&cache, 1.0);
    let analytic: Vec<Vec<f64>> = model.grad_slices(&grads).iter().map(|s| s.to_vec()).collect();

    // coefficient k moves the output in units of its basis function, so its
    // step is measured against the largest value that function takes
    let mut steps: Vec<Vec<f64>> = Vec::new();
    for layer in model.layers() {
        steps.push(vec![NET_FD_STEP; layer.weights().len()]);
        if layer.has_bias() {
            steps.push(vec![NET_FD_STEP; layer.biases().len()]);
        }
    }
    for unit in model.units() {
        steps.push(basis_scales(unit.basis()).iter().map(|s| NET_FD_STEP / s).collect());
        if unit.bias_trainable() {
            steps.push(vec![NET_FD_STEP]);
        }
    }
    assert_eq!(steps.len(), analytic.len());

    let mut worst = (0.0, String::new());
    let mut probe = model.clone();
    for (si, slice) in analytic.iter().enumerate() {
        for (k, &a) in slice.iter().enumerate() {
            let orig = probe.param_slices_mut()[si][k];
            let cell = std::cell::RefCell::new(&mut probe);
            let n = ridders(
                |v| {
                    let mut m = cell.borrow_mut();
                    m.param_slices_mut()[si][k] = v;
                    m.predict(x)
                },
                orig,
                steps[si][k],
            );
            probe.param_slices_mut()[si][k] = orig;
            // compared in the same rescaled coordinates
            let sigma = steps[si][k] / NET_FD_STEP;
            let e = rel_err(a * sigma, n * sigma, 1e-3);
            if e > worst.0 {
                worst = (e, format!("param slice {si} entry {k}: analytic {a} vs fd {n}"));
            }
        }
    }
    for (j, &a) in grads.dx.iter().enumerate() {
        let at = |d: f64| {
            let mut xp = x.to_vec();
            xp[j] += d;
            model.predict(&xp)
        };
        let n = ridders(|v| at(v - x[j]), x[j], NET_FD_STEP);
        let e = rel_err(a, n, 1e-3);
        if e > worst.0 {
            worst = (e, format!("input {j}: analytic {a} vs fd {n}"));
        }
    }
    worst
}

/// Runs the gradient oracle over `count` random models for one activation.
pub fn gradient_sweep(activation: &str, count: usize, seed: u64) -> (f64, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0, String::new());
    for i in 0..count {
        let (model, x) = random_case(activation, &mut rng);
        let (e, what) = worst_gradient_error(&model, &x);
        if e > worst.0 {
            worst = (e, format!("model {i}: {what}"));
        }
    }
    worst
}
