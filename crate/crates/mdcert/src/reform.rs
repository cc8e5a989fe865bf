//! Lur'e forms of continuous, discrete and projected mirror descent.
//!
//! Mirror descent in the dual variable `z` is the feedback loop of a linear
//! plant with the two shifted gradient maps
//! `u1 = ∇f(y1) − mu_f·y1` and `u2 = ∇phī(y2) − mu_bar·y2`, each confined to
//! the sector `[0, L − mu]`.
//!
//! The projected iteration adds the normal-cone element `u3 = T(x_{k+1})`
//! and a second copy of the conjugate gradient, `u4 = ∇phī(z_{k+1}) −
//! mu_bar·z_{k+1}`. Its outputs are
//!
//! | output | signal |
//! |---|---|
//! | `y1` | `x_k` |
//! | `y2` | `z_k` |
//! | `y3` | `x_{k+1}` |
//! | `y4` | `z_{k+1}` |
//! | `y5` | `y2 − y4`, read by the difference channel |

use nalgebra::{dmatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{KronSystem, Mode, ProblemSpec, Sector};

fn plant_sectors(spec: &ProblemSpec) -> Vec<Sector> {
    vec![Sector::new(0.0, spec.f_class().width()), Sector::new(0.0, spec.l_bar() - spec.mu_bar())]
}

/// Continuous-time loop `ż = −η ∇f(∇phī(z))`.
pub fn build_ct_lure(spec: &ProblemSpec) -> Result<KronSystem> {
    spec.expect_mode(Mode::Continuous)?;
    let (eta, mu_f, mu_bar) = (spec.eta(), spec.mu_f(), spec.mu_bar());
    KronSystem::new(
        dmatrix![-eta * mu_f * mu_bar],
        dmatrix![-eta, -eta * mu_f],
        dmatrix![mu_bar; 1.0],
        dmatrix![0.0, 1.0; 0.0, 0.0],
        spec.dim(),
        plant_sectors(spec),
        Mode::Continuous,
    )
}

/// Discrete-time loop `z_{k+1} = z_k − η ∇f(∇phī(z_k))`.
pub fn build_dt_lure(spec: &ProblemSpec) -> Result<KronSystem> {
    spec.expect_mode(Mode::Discrete)?;
    let (eta, mu_f, mu_bar) = (spec.eta(), spec.mu_f(), spec.mu_bar());
    KronSystem::new(
        dmatrix![1.0 - eta * mu_f * mu_bar],
        dmatrix![-eta, -eta * mu_f],
        dmatrix![mu_bar; 1.0],
        dmatrix![0.0, 1.0; 0.0, 0.0],
        spec.dim(),
        plant_sectors(spec),
        Mode::Discrete,
    )
}

/// Projected loop `z_{k+1} = z_k − η ∇f(x_k) − T(x_{k+1})` with
/// `x_k = ∇phī(z_k)` and `T(x_{k+1})` in the normal cone of the constraint set.
pub fn build_proj_lure(spec: &ProblemSpec) -> Result<KronSystem> {
    spec.expect_mode(Mode::Projected)?;
    let (eta, mu_f, mu_bar) = (spec.eta(), spec.mu_f(), spec.mu_bar());
    let a = 1.0 - eta * mu_f * mu_bar;
    let b = dmatrix![-eta, -eta * mu_f, -1.0, 0.0];
    let c = dmatrix![mu_bar; 1.0; mu_bar * a; a; 1.0 - a];
    let d = dmatrix![
        0.0, 1.0, 0.0, 0.0;
        0.0, 0.0, 0.0, 0.0;
        -eta * mu_bar, -eta * mu_bar * mu_f, -mu_bar, 1.0;
        -eta, -eta * mu_f, -1.0, 0.0;
        eta, eta * mu_f, 1.0, 0.0
    ];
    let phibar = Sector::new(0.0, spec.l_bar() - mu_bar);
    let sectors = vec![
        Sector::new(0.0, spec.f_class().width()),
        phibar,
        Sector::new(0.0, f64::INFINITY),
        phibar,
        phibar,
    ];
    KronSystem::new(dmatrix![a], b, c, d, spec.dim(), sectors, Mode::Projected)
}

type VecMap<'a> = &'a dyn Fn(&DVector<f64>) -> DVector<f64>;

/// Shifted residual maps, anchored so that both vanish at the origin:
/// `Δ1(x) = g1(x + y1*) − g1(y1*)` with `g1(y) = ∇f(y) − mu_f·y`,
/// and likewise `Δ2` for `∇phī` around `y2*`.
pub struct ResidualChannels<'a> {
    grad_f: VecMap<'a>,
    grad_phibar: VecMap<'a>,
    mu_f: f64,
    mu_bar: f64,
    y1: DVector<f64>,
    y2: DVector<f64>,
    g1: DVector<f64>,
    g2: DVector<f64>,
}

/// Builds the residual channel evaluator around the reference outputs
/// `(y1*, y2*) = (x*, z*)`.
pub fn residual_nonlinearity<'a>(
    grad_f: VecMap<'a>,
    grad_phibar: VecMap<'a>,
    spec: &ProblemSpec,
    reference: Option<(DVector<f64>, DVector<f64>)>,
) -> Result<ResidualChannels<'a>> {
    let (y1, y2) = reference.ok_or(Error::MissingReference)?;
    if y1.len() != y2.len() {
        return Err(Error::DimensionMismatch("reference points differ in length".into()));
    }
    let (mu_f, mu_bar) = (spec.mu_f(), spec.mu_bar());
    let g1 = grad_f(&y1) - &y1 * mu_f;
    let g2 = grad_phibar(&y2) - &y2 * mu_bar;
    Ok(ResidualChannels { grad_f, grad_phibar, mu_f, mu_bar, y1, y2, g1, g2 })
}

impl ResidualChannels<'_> {
    pub fn delta1(&self, x: &DVector<f64>) -> DVector<f64> {
        let y = x + &self.y1;
        (self.grad_f)(&y) - &y * self.mu_f - &self.g1
    }

    pub fn delta2(&self, x: &DVector<f64>) -> DVector<f64> {
        let y = x + &self.y2;
        (self.grad_phibar)(&y) - &y * self.mu_bar - &self.g2
    }

    /// Channel `i` (1-based, matching the input numbering).
    pub fn channel(&self, i: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        match i {
            1 => Ok(self.delta1(x)),
            2 => Ok(self.delta2(x)),
            _ => Err(Error::InvalidParameter(format!("no residual channel {i}"))),
        }
    }
}

/// Stacks per-channel vectors into one signal of length `m·d`.
pub fn stack(parts: &[&DVector<f64>]) -> DVector<f64> {
    let mut out = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for p in parts {
        out.extend(p.iter().copied());
    }
    DVector::from_vec(out)
}

/// Splits a stacked signal of length `m·d` into `m` blocks.
pub fn unstack(v: &DVector<f64>, d: usize) -> Vec<DVector<f64>> {
    v.as_slice().chunks(d).map(DVector::from_column_slice).collect()
}

