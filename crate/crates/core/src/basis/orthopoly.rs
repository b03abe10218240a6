//! Orthogonal polynomial families on `[-1, 1]` via three-term recurrences.
//!
//! All families share the form
//!
//! ```text
//! P_0 = 1
//! P_1 = s * t + c
//! P_{n+1} = (a_n t + b_n) P_n - c_n P_{n-1}
//! ```
//!
//! and the derivative follows by differentiating the recurrence:
//! `P'_{n+1} = a_n P_n + (a_n t + b_n) P'_n - c_n P'_{n-1}`.
//!
//! Hermite uses the probabilists' convention and Bessel the Krall-Frink
//! polynomials `y_n`.

use super::Family;

#[derive(Debug, Clone, Copy)]
pub struct Recurrence {
    family: Family,
    alpha: f64,
    beta: f64,
}

impl Recurrence {
    /// `alpha`/`beta` are only read for [`Family::Jacobi`].
    ///
    /// # Panics
    /// On grid-based families, which have no recurrence.
    pub fn new(family: Family, alpha: f64, beta: f64) -> Self {
        assert!(
            !family.is_grid_based(),
            "{family} is not a polynomial family"
        );
        Recurrence {
            family,
            alpha,
            beta,
        }
    }

    // (slope, intercept) of P_1
    fn first(&self) -> (f64, f64) {
        match self.family {
            Family::Chebyshev2 => (2.0, 0.0),
            Family::Bessel => (1.0, 1.0),
            Family::Jacobi => (
                0.5 * (self.alpha + self.beta + 2.0),
                0.5 * (self.alpha - self.beta),
            ),
            _ => (1.0, 0.0),
        }
    }

    // (a_n, b_n, c_n) for n >= 1
    fn coefficients(&self, n: usize) -> (f64, f64, f64) {
        let nf = n as f64;
        match self.family {
            Family::Legendre => ((2.0 * nf + 1.0) / (nf + 1.0), 0.0, nf / (nf + 1.0)),
            Family::Hermite => (1.0, 0.0, nf),
            Family::Chebyshev1 | Family::Chebyshev2 => (2.0, 0.0, 1.0),
            Family::Bessel => (2.0 * nf + 1.0, 0.0, -1.0),
            Family::Jacobi => {
                let (a, b) = (self.alpha, self.beta);
                let s = 2.0 * nf + a + b;
                let denom = 2.0 * (nf + 1.0) * (nf + a + b + 1.0) * s;
                (
                    (s + 1.0) * (s + 2.0) * s / denom,
                    (s + 1.0) * (a * a - b * b) / denom,
                    2.0 * (nf + a) * (nf + b) * (s + 2.0) / denom,
                )
            }
            Family::BSpline | Family::Fourier | Family::Grbf => unreachable!(),
        }
    }

    /// Fills `values[n] = P_n(t)` for `n < values.len()`, and derivatives if requested.
    pub fn eval_into(&self, t: f64, values: &mut [f64], mut derivs: Option<&mut [f64]>) {
        let len = values.len();
        if len == 0 {
            return;
        }
        values[0] = 1.0;
        if let Some(d) = derivs.as_deref_mut() {
            d[0] = 0.0;
        }
        if len == 1 {
            return;
        }
        let (slope, intercept) = self.first();
        values[1] = slope * t + intercept;
        if let Some(d) = derivs.as_deref_mut() {
            d[1] = slope;
        }
        for n in 1..len - 1 {
            let (a, b, c) = self.coefficients(n);
            let lin = a * t + b;
            values[n + 1] = lin * values[n] - c * values[n - 1];
            if let Some(d) = derivs.as_deref_mut() {
                d[n + 1] = a * values[n] + lin * d[n] - c * d[n - 1];
            }
        }
    }
}
