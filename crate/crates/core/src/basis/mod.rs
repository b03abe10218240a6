//! Basis families that trainable activations linearly combine.
//!
//! Every family maps a scalar `x` in `[domain_lo, domain_hi]` to a fixed-length
//! vector of basis values, along with the analytic first derivative of each
//! entry. Inputs outside the domain are clamped to the nearest endpoint before
//! evaluation, and the derivative is taken at that endpoint.
//!
//! Grid-based families (B-spline, Fourier, GRBF) use `grid_count` and/or
//! `degree`; order-based polynomial families use `degree` as the highest
//! order `K` and produce `K + 1` values.

pub mod bspline;
pub mod orthopoly;

use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    BSpline,
    Fourier,
    Grbf,
    Legendre,
    Hermite,
    Chebyshev1,
    Chebyshev2,
    Bessel,
    Jacobi,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::BSpline,
        Family::Fourier,
        Family::Grbf,
        Family::Legendre,
        Family::Hermite,
        Family::Chebyshev1,
        Family::Chebyshev2,
        Family::Bessel,
        Family::Jacobi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::BSpline => "bspline",
            Family::Fourier => "fourier",
            Family::Grbf => "grbf",
            Family::Legendre => "legendre",
            Family::Hermite => "hermite",
            Family::Chebyshev1 => "chebyshev1",
            Family::Chebyshev2 => "chebyshev2",
            Family::Bessel => "bessel",
            Family::Jacobi => "jacobi",
        }
    }

    /// Families that lay out a grid over the domain rather than counting orders.
    pub fn is_grid_based(self) -> bool {
        matches!(self, Family::BSpline | Family::Fourier | Family::Grbf)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let family = match lower.as_str() {
            "bspline" | "bline" | "b-spline" => Family::BSpline,
            "fourier" => Family::Fourier,
            "grbf" => Family::Grbf,
            "legendre" => Family::Legendre,
            "hermite" => Family::Hermite,
            "chebyshev1" | "cheb1" => Family::Chebyshev1,
            "chebyshev2" | "cheb2" => Family::Chebyshev2,
            "bessel" => Family::Bessel,
            "jacobi" => Family::Jacobi,
            _ => return Err(Error::InvalidBasis(format!("unknown basis family `{s}`"))),
        };
        Ok(family)
    }
}

/// Which family to evaluate and how it is laid out over the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: Family,
    /// Spline degree `p`, or the highest order `K` for harmonic/polynomial families.
    pub degree: usize,
    /// Number of grid intervals `G`; ignored by order-based families.
    pub grid_count: usize,
    pub domain_lo: f64,
    pub domain_hi: f64,
    pub jacobi_alpha: f64,
    pub jacobi_beta: f64,
}

impl BasisSpec {
    /// Default layout for a family. Every default yields 8 basis functions
    /// except Fourier, whose count is odd (`2K + 1 = 7`).
    pub fn new(family: Family) -> Self {
        let (degree, grid_count) = match family {
            Family::BSpline => (3, 5),
            Family::Fourier => (3, 1),
            Family::Grbf => (0, 7),
            _ => (7, 1),
        };
        BasisSpec {
            family,
            degree,
            grid_count,
            domain_lo: -1.0,
            domain_hi: 1.0,
            jacobi_alpha: 1.0,
            jacobi_beta: 1.0,
        }
    }

    pub fn bspline(grid_count: usize, degree: usize) -> Self {
        BasisSpec {
            degree,
            grid_count,
            ..BasisSpec::new(Family::BSpline)
        }
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_grid_count(mut self, grid_count: usize) -> Self {
        self.grid_count = grid_count;
        self
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain_lo = lo;
        self.domain_hi = hi;
        self
    }

    pub fn with_jacobi(mut self, alpha: f64, beta: f64) -> Self {
        self.jacobi_alpha = alpha;
        self.jacobi_beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.domain_lo.is_finite() && self.domain_hi.is_finite()) {
            return Err(Error::InvalidBasis("domain endpoints must be finite".into()));
        }
        if self.domain_lo >= self.domain_hi {
            return Err(Error::InvalidBasis(format!(
                "domain_lo ({}) must be below domain_hi ({})",
                self.domain_lo, self.domain_hi
            )));
        }
        if matches!(self.family, Family::BSpline | Family::Grbf) && self.grid_count < 1 {
            return Err(Error::InvalidBasis("grid_count must be at least 1".into()));
        }
        if self.family == Family::Jacobi
            && !(self.jacobi_alpha > -1.0 && self.jacobi_beta > -1.0)
        {
            return Err(Error::InvalidBasis(format!(
                "jacobi alpha and beta must exceed -1 (got {}, {})",
                self.jacobi_alpha, self.jacobi_beta
            )));
        }
        Ok(())
    }

    /// Number of basis functions this spec produces.
    pub fn len(&self) -> usize {
        match self.family {
            Family::BSpline => self.grid_count + self.degree,
            Family::Fourier => 2 * self.degree + 1,
            Family::Grbf => self.grid_count + 1,
            _ => self.degree + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Clamped uniform knot vector for a B-spline spec.
pub fn make_knot_vector(spec: &BasisSpec) -> Result<Vec<f64>> {
    if spec.family != Family::BSpline {
        return Err(Error::InvalidBasis(format!(
            "knot vectors only apply to bspline, not {}",
            spec.family
        )));
    }
    spec.validate()?;
    Ok(bspline::clamped_knots(
        spec.grid_count,
        spec.degree,
        spec.domain_lo,
        spec.domain_hi,
    ))
}

/// Basis values (or derivatives) at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisVector {
    pub values: Vec<f64>,
}

impl Deref for BasisVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// A validated [`BasisSpec`] with its derived layout (knots, centers) cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisSpec", into = "BasisSpec")]
pub struct Basis {
    spec: BasisSpec,
    knots: Vec<f64>,
}

impl TryFrom<BasisSpec> for Basis {
    type Error = Error;

    fn try_from(spec: BasisSpec) -> Result<Self> {
        Basis::new(spec)
    }
}

impl From<Basis> for BasisSpec {
    fn from(basis: Basis) -> Self {
        basis.spec
    }
}

impl Basis {
    pub fn new(spec: BasisSpec) -> Result<Self> {
        spec.validate()?;
        let knots = if spec.family == Family::BSpline {
            make_knot_vector(&spec)?
        } else {
            Vec::new()
        };
        Ok(Basis { spec, knots })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.spec.domain_lo, self.spec.domain_hi)
    }

    pub fn eval(&self, x: f64) -> BasisVector {
        let mut values = vec![0.0; self.len()];
        self.eval_into(x, &mut values, None);
        BasisVector { values }
    }

    pub fn derivative(&self, x: f64) -> BasisVector {
        let mut values = vec![0.0; self.len()];
        let mut derivs = vec![0.0; self.len()];
        self.eval_into(x, &mut values, Some(&mut derivs));
        BasisVector { values: derivs }
    }

    /// Writes basis values, and optionally their derivatives, for `x`.
    ///
    /// Both buffers must have length [`Basis::len`].
    pub fn eval_into(&self, x: f64, values: &mut [f64], derivs: Option<&mut [f64]>) {
        debug_assert_eq!(values.len(), self.len());
        let s = &self.spec;
        let x = self.clamp(x);
        match s.family {
            Family::BSpline => bspline::eval_into(&self.knots, s.degree, x, values, derivs),
            Family::Fourier => fourier_into(s, x, values, derivs),
            Family::Grbf => grbf_into(s, x, values, derivs),
            family => {
                let width = s.domain_hi - s.domain_lo;
                let t = ((2.0 * x - (s.domain_lo + s.domain_hi)) / width).clamp(-1.0, 1.0);
                let recurrence = orthopoly::Recurrence::new(family, s.jacobi_alpha, s.jacobi_beta);
                match derivs {
                    Some(d) => {
                        recurrence.eval_into(t, values, Some(&mut *d));
                        let scale = 2.0 / width;
                        d.iter_mut().for_each(|v| *v *= scale);
                    }
                    None => recurrence.eval_into(t, values, None),
                }
            }
        }
    }
}

// [1/2, cos(wx), sin(wx), ..., cos(Kwx), sin(Kwx)] with w = 2pi / (hi - lo)
fn fourier_into(spec: &BasisSpec, x: f64, values: &mut [f64], mut derivs: Option<&mut [f64]>) {
    let omega = 2.0 * PI / (spec.domain_hi - spec.domain_lo);
    values[0] = 0.5;
    if let Some(d) = derivs.as_deref_mut() {
        d[0] = 0.0;
    }
    for k in 1..=spec.degree {
        let freq = k as f64 * omega;
        let (sin, cos) = (freq * x).sin_cos();
        values[2 * k - 1] = cos;
        values[2 * k] = sin;
        if let Some(d) = derivs.as_deref_mut() {
            d[2 * k - 1] = -freq * sin;
            d[2 * k] = freq * cos;
        }
    }
}

// Gaussian bumps centered on the G + 1 grid nodes, width = grid spacing.
fn grbf_into(spec: &BasisSpec, x: f64, values: &mut [f64], mut derivs: Option<&mut [f64]>) {
    let h = (spec.domain_hi - spec.domain_lo) / spec.grid_count as f64;
    let inv_var = 1.0 / (h * h);
    for (i, v) in values.iter_mut().enumerate() {
        let center = spec.domain_lo + i as f64 * h;
        let dx = x - center;
        *v = (-0.5 * dx * dx * inv_var).exp();
        if let Some(d) = derivs.as_deref_mut() {
            d[i] = -dx * inv_var * *v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn default_counts() {
        assert_eq!(BasisSpec::new(Family::BSpline).len(), 8);
        assert_eq!(BasisSpec::new(Family::Fourier).len(), 7);
        assert_eq!(BasisSpec::new(Family::Grbf).len(), 8);
        for family in [
            Family::Legendre,
            Family::Hermite,
            Family::Chebyshev1,
            Family::Chebyshev2,
            Family::Bessel,
            Family::Jacobi,
        ] {
            assert_eq!(BasisSpec::new(family).len(), 8, "{family}");
        }
    }

    #[test]
    fn knot_vectors() {
        let k = make_knot_vector(&BasisSpec::bspline(1, 0)).unwrap();
        assert_eq!(k, vec![-1.0, 1.0]);

        let k = make_knot_vector(&BasisSpec::bspline(2, 1).with_domain(0.0, 1.0)).unwrap();
        assert_eq!(k, vec![0.0, 0.0, 0.5, 1.0, 1.0]);

        let spec = BasisSpec::bspline(5, 3);
        let k = make_knot_vector(&spec).unwrap();
        assert_eq!(k.len(), 12);
        assert_eq!(spec.len(), 8);
        assert!(k.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn knot_vector_rejects_bad_specs() {
        assert!(make_knot_vector(&BasisSpec::bspline(0, 3)).is_err());
        assert!(make_knot_vector(&BasisSpec::new(Family::Fourier)).is_err());
        assert!(make_knot_vector(&BasisSpec::bspline(5, 3).with_domain(1.0, 1.0)).is_err());
    }

    #[test]
    fn fourier_examples() {
        let k1 = Basis::new(BasisSpec::new(Family::Fourier).with_degree(1)).unwrap();
        assert_eq!(k1.eval(0.0).values, vec![0.5, 1.0, 0.0]);
        let v = k1.eval(0.5);
        assert!(close(v[0], 0.5, 1e-15) && close(v[1], 0.0, 1e-15) && close(v[2], 1.0, 1e-15));

        let k2 = Basis::new(BasisSpec::new(Family::Fourier).with_degree(2)).unwrap();
        assert_eq!(k2.eval(0.0).values, vec![0.5, 1.0, 0.0, 1.0, 0.0]);

        let d = k1.derivative(0.0);
        assert_eq!(d[0], 0.0);
        assert!(close(d[1], 0.0, 1e-15));
        assert!(close(d[2], PI, 1e-15));
    }

    #[test]
    fn chebyshev_examples() {
        let b = Basis::new(BasisSpec::new(Family::Chebyshev1).with_degree(2)).unwrap();
        let v = b.eval(0.5);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 0.5);
        assert!(close(v[2], -0.5, 1e-15));
        assert_eq!(b.derivative(0.0)[1], 1.0);

        let u = Basis::new(BasisSpec::new(Family::Chebyshev2).with_degree(2)).unwrap();
        assert!(close(u.eval(0.5)[2], 0.0, 1e-15));
    }

    #[test]
    fn legendre_low_orders() {
        let b = Basis::new(BasisSpec::new(Family::Legendre)).unwrap();
        for x in [-0.7, 0.0, 0.3, 1.0] {
            let v = b.eval(x);
            assert_eq!(v[0], 1.0);
            assert_eq!(v[1], x);
        }
    }

    #[test]
    fn grbf_peaks_at_centers() {
        let spec = BasisSpec::new(Family::Grbf).with_grid_count(4);
        let b = Basis::new(spec).unwrap();
        for i in 0..=4 {
            let center = -1.0 + 0.5 * i as f64;
            assert_eq!(b.eval(center)[i], 1.0);
        }
    }

    #[test]
    fn jacobi_rejects_bad_shape() {
        assert!(Basis::new(BasisSpec::new(Family::Jacobi).with_jacobi(-1.0, 0.0)).is_err());
        assert!(Basis::new(BasisSpec::new(Family::Jacobi).with_jacobi(0.0, -1.5)).is_err());
        assert!(Basis::new(BasisSpec::new(Family::Jacobi).with_jacobi(-0.5, -0.5)).is_ok());
    }

    #[test]
    fn out_of_domain_is_clamped() {
        for family in Family::ALL {
            let b = Basis::new(BasisSpec::new(family)).unwrap();
            assert_eq!(b.eval(5.0), b.eval(1.0), "{family}");
            assert_eq!(b.eval(-5.0), b.eval(-1.0), "{family}");
            assert_eq!(b.derivative(-5.0), b.derivative(-1.0), "{family}");
            assert!(b.eval(1e300).iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn non_default_domain_maps_polynomials() {
        let b = Basis::new(BasisSpec::new(Family::Chebyshev1).with_domain(0.0, 4.0)).unwrap();
        // x = 3 maps to t = 0.5
        let v = b.eval(3.0);
        assert!(close(v[2], -0.5, 1e-15));
        // chain rule: dT1/dx = 2 / width
        assert!(close(b.derivative(3.0)[1], 0.5, 1e-15));
    }

    #[test]
    fn family_names_round_trip() {
        for family in Family::ALL {
            assert_eq!(family.name().parse::<Family>().unwrap(), family);
        }
        assert!("wavelet".parse::<Family>().is_err());
    }

    #[test]
    fn serde_revalidates() {
        let b = Basis::new(BasisSpec::bspline(5, 3)).unwrap();
        let json = serde_json::to_string(&b).unwrap();
        let back: Basis = serde_json::from_str(&json).unwrap();
        assert_eq!(b, back);

        let bad = json.replace("\"grid_count\":5", "\"grid_count\":0");
        assert!(serde_json::from_str::<Basis>(&bad).is_err());
    }
}
