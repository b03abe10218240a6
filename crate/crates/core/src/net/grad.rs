use crate::net::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub dw: Vec<f64>,
    /// Empty when the layer has no bias.
    pub db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitGradAcc {
    pub dtheta: Vec<f64>,
    pub dbias: f64,
}

/// Gradients for every trainable of a [`Model`], shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    /// One entry per dense layer, sub-networks flattened in order.
    pub layers: Vec<LayerGrad>,
    pub units: Vec<UnitGradAcc>,
    /// `dL/dx` for the model input.
    pub dx: Vec<f64>,
}

impl GradientBundle {
    pub fn zeros_like(model: &Model) -> Self {
        GradientBundle {
            layers: model
                .layers()
                .map(|l| LayerGrad {
                    dw: vec![0.0; l.weights().len()],
                    db: vec![0.0; l.biases().len()],
                })
                .collect(),
            units: model
                .units()
                .iter()
                .map(|u| UnitGradAcc {
                    dtheta: vec![0.0; u.theta().len()],
                    dbias: 0.0,
                })
                .collect(),
            dx: vec![0.0; model.input_dim()],
        }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.dw.fill(0.0);
            l.db.fill(0.0);
        }
        for u in &mut self.units {
            u.dtheta.fill(0.0);
            u.dbias = 0.0;
        }
        self.dx.fill(0.0);
    }

    pub fn scale(&mut self, factor: f64) {
        self.for_each_mut(|v| *v *= factor);
    }

    /// Elementwise sum, for merging per-worker accumulators.
    pub fn add_assign(&mut self, other: &GradientBundle) {
        let rhs = other.flatten();
        let mut it = rhs.into_iter();
        self.for_each_mut(|v| *v += it.next().expect("bundles have the same shape"));
    }

    fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for l in &mut self.layers {
            l.dw.iter_mut().chain(l.db.iter_mut()).for_each(&mut f);
        }
        for u in &mut self.units {
            u.dtheta.iter_mut().for_each(&mut f);
            f(&mut u.dbias);
        }
        self.dx.iter_mut().for_each(f);
    }

    /// All entries in a fixed order: layers (dw, db), units (dtheta, dbias), dx.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.dw);
            out.extend_from_slice(&l.db);
        }
        for u in &self.units {
            out.extend_from_slice(&u.dtheta);
            out.push(u.dbias);
        }
        out.extend_from_slice(&self.dx);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }
}
