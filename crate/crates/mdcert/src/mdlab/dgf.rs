use nalgebra::{Cholesky, DMatrix, DVector};

use super::functions::{separable_root, sigmoid, spd_extremes, unit_softplus};
use crate::error::{Error, Result};
use crate::model::FunctionClass;

/// A distance-generating function together with the gradient of its
/// conjugate, which inverts `∇φ`.
pub trait DgfPair: Send + Sync {
    fn dim(&self) -> usize;
    fn phi(&self, x: &DVector<f64>) -> f64;
    fn grad_phi(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `∇φ̄(z)`, the unique `x` with `∇φ(x) = z`.
    fn grad_conjugate(&self, z: &DVector<f64>) -> DVector<f64>;
    /// Class of `φ`; the conjugate's class follows from it.
    fn class(&self) -> FunctionClass;

    /// `D_φ(y, x) = φ(y) − φ(x) − (y − x)ᵀ∇φ(x)`.
    fn bregman(&self, y: &DVector<f64>, x: &DVector<f64>) -> f64 {
        self.phi(y) - self.phi(x) - (y - x).dot(&self.grad_phi(x))
    }

    /// `Φ` when `φ = ½ xᵀ Φ x`.
    fn quadratic_matrix(&self) -> Option<&DMatrix<f64>> {
        None
    }
}

/// `φ(x) = ½ xᵀ Φ x`, so `∇φ̄(z) = Φ⁻¹ z`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticDgf {
    pub phi: DMatrix<f64>,
    phi_inv: DMatrix<f64>,
    class: FunctionClass,
}

impl QuadraticDgf {
    pub fn new(phi: DMatrix<f64>) -> Result<Self> {
        let (mu, l) = spd_extremes(&phi)?;
        let phi_inv = Cholesky::new(phi.clone()).ok_or_else(|| Error::NotPositiveDefinite("Phi".into()))?.inverse();
        Ok(QuadraticDgf { class: FunctionClass::new(mu, l)?, phi, phi_inv })
    }

    /// Euclidean geometry: mirror descent reduces to gradient descent.
    pub fn identity(d: usize) -> Self {
        QuadraticDgf {
            phi: DMatrix::identity(d, d),
            phi_inv: DMatrix::identity(d, d),
            class: FunctionClass::new(1.0, 1.0).expect("unit class"),
        }
    }

    pub fn with_class(phi: DMatrix<f64>, class: FunctionClass) -> Result<Self> {
        let phi_inv = Cholesky::new(phi.clone()).ok_or_else(|| Error::NotPositiveDefinite("Phi".into()))?.inverse();
        Ok(QuadraticDgf { phi, phi_inv, class })
    }

    pub fn phi_inv(&self) -> &DMatrix<f64> {
        &self.phi_inv
    }
}

impl DgfPair for QuadraticDgf {
    fn dim(&self) -> usize {
        self.phi.nrows()
    }

    fn phi(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.phi * x))
    }

    fn grad_phi(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.phi * x
    }

    fn grad_conjugate(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.phi_inv * z
    }

    fn class(&self) -> FunctionClass {
        self.class
    }

    fn quadratic_matrix(&self) -> Option<&DMatrix<f64>> {
        Some(&self.phi)
    }
}

/// `φ(x) = (mu/2)‖x‖² + (L − mu) Σ 4·softplus(x_i − c_i)`, a non-quadratic
/// DGF in `S(mu, L)` whose gradient is inverted coordinatewise by a
/// safeguarded Newton iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableDgf {
    class: FunctionClass,
    pub shifts: DVector<f64>,
}

impl SeparableDgf {
    pub fn new(class: FunctionClass, shifts: DVector<f64>) -> Self {
        SeparableDgf { class, shifts }
    }
}

impl DgfPair for SeparableDgf {
    fn dim(&self) -> usize {
        self.shifts.len()
    }

    fn phi(&self, x: &DVector<f64>) -> f64 {
        let curved: f64 = x.iter().zip(self.shifts.iter()).map(|(x, c)| unit_softplus(x - c)).sum();
        0.5 * self.class.mu() * x.norm_squared() + self.class.width() * curved
    }

    fn grad_phi(&self, x: &DVector<f64>) -> DVector<f64> {
        let (mu, w) = (self.class.mu(), self.class.width());
        DVector::from_fn(x.len(), |i, _| mu * x[i] + 4.0 * w * sigmoid(x[i] - self.shifts[i]))
    }

    fn grad_conjugate(&self, z: &DVector<f64>) -> DVector<f64> {
        let (mu, w) = (self.class.mu(), self.class.width());
        DVector::from_fn(z.len(), |i, _| separable_root(mu, w, self.shifts[i], -z[i]))
    }

    fn class(&self) -> FunctionClass {
        self.class
    }
}
