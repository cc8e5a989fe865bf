use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::FunctionClass;

/// A `mu`-strongly convex, `L`-smooth objective.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn class(&self) -> FunctionClass;
    fn minimizer(&self) -> Option<DVector<f64>> {
        None
    }

    /// The constant Hessian of a quadratic.
    fn hessian(&self) -> Option<&DMatrix<f64>> {
        None
    }
}

/// `½ xᵀ F x + pᵀ x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub f: DMatrix<f64>,
    pub p: DVector<f64>,
    class: FunctionClass,
}

/// Smallest and largest eigenvalue of a symmetric positive definite matrix.
pub fn spd_extremes(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    if !m.is_square() || (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
        return Err(Error::InvalidParameter("matrix must be square and symmetric".into()));
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 {
        return Err(Error::NotPositiveDefinite(format!("smallest eigenvalue {lo}")));
    }
    Ok((lo, hi))
}

impl Quadratic {
    pub fn new(f: DMatrix<f64>, p: DVector<f64>) -> Result<Self> {
        if p.len() != f.nrows() {
            return Err(Error::DimensionMismatch("F and p disagree".into()));
        }
        let (mu, l) = spd_extremes(&f)?;
        Ok(Quadratic { class: FunctionClass::new(mu, l)?, f, p })
    }

    /// Same as `new` but with a declared class, for matrices built from a
    /// known spectrum.
    pub fn with_class(f: DMatrix<f64>, p: DVector<f64>, class: FunctionClass) -> Self {
        Quadratic { f, p, class }
    }
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.p.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.f * x)) + self.p.dot(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.f * x + &self.p
    }

    fn class(&self) -> FunctionClass {
        self.class
    }

    fn minimizer(&self) -> Option<DVector<f64>> {
        Cholesky::new(self.f.clone()).map(|c| -c.solve(&self.p))
    }

    fn hessian(&self) -> Option<&DMatrix<f64>> {
        Some(&self.f)
    }
}

/// `ln(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `4·softplus`: its second derivative `4σ(1 − σ)` sweeps `(0, 1]`, peaking
/// at the origin.
pub fn unit_softplus(t: f64) -> f64 {
    4.0 * softplus(t)
}

/// Solves `mu·x + w·4σ(x − c) + b = 0` for `x`; the left side increases
/// strictly in `x`, and the root lies in `[−(b + 4w)/mu, −b/mu]`.
pub(crate) fn separable_root(mu: f64, w: f64, c: f64, b: f64) -> f64 {
    let g = |x: f64| mu * x + 4.0 * w * sigmoid(x - c) + b;
    let (mut lo, mut hi) = (-(b + 4.0 * w) / mu, -b / mu);
    let mut x = 0.5 * (lo + hi);
    let mut last_step = hi - lo;
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let s = sigmoid(x - c);
        let dg = mu + 4.0 * w * s * (1.0 - s);
        let newton = x - gx / dg;
        // Newton is kept only while it stays bracketed and at least halves
        // the previous step; the sigmoid's flat tails otherwise make it bounce
        let next = if newton > lo && newton < hi && (newton - x).abs() <= 0.5 * last_step {
            newton
        } else {
            0.5 * (lo + hi)
        };
        last_step = (next - x).abs();
        x = next;
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1e-300) || last_step <= f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

/// `f(x) = (mu/2)‖x‖² + (L − mu) Σ 4·softplus(x_i − c_i) + pᵀx`, a
/// non-quadratic member of `S(mu, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftplusFamily {
    class: FunctionClass,
    pub shifts: DVector<f64>,
    pub linear: DVector<f64>,
}

impl SoftplusFamily {
    pub fn new(class: FunctionClass, shifts: DVector<f64>, linear: DVector<f64>) -> Result<Self> {
        if shifts.len() != linear.len() {
            return Err(Error::DimensionMismatch("shifts and linear term disagree".into()));
        }
        Ok(SoftplusFamily { class, shifts, linear })
    }
}

impl SmoothFunction for SoftplusFamily {
    fn dim(&self) -> usize {
        self.shifts.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let w = self.class.width();
        let curved: f64 = x.iter().zip(self.shifts.iter()).map(|(x, c)| unit_softplus(x - c)).sum();
        0.5 * self.class.mu() * x.norm_squared() + w * curved + self.linear.dot(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (mu, w) = (self.class.mu(), self.class.width());
        DVector::from_fn(x.len(), |i, _| mu * x[i] + 4.0 * w * sigmoid(x[i] - self.shifts[i]) + self.linear[i])
    }

    fn class(&self) -> FunctionClass {
        self.class
    }

    fn minimizer(&self) -> Option<DVector<f64>> {
        let (mu, w) = (self.class.mu(), self.class.width());
        Some(DVector::from_fn(self.dim(), |i, _| separable_root(mu, w, self.shifts[i], self.linear[i])))
    }
}
