use nalgebra::DVector;

use crate::error::{Error, Result};

/// Closed convex constraint set.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    /// `lo ≤ x ≤ hi` coordinatewise.
    Box { lo: DVector<f64>, hi: DVector<f64> },
    /// The probability simplex `{x ≥ 0, Σ x_i = 1}`.
    Simplex,
}

impl ConstraintSet {
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        match self {
            ConstraintSet::Box { lo, hi } => {
                x.iter().zip(lo.iter()).zip(hi.iter()).all(|((x, lo), hi)| *x >= lo - tol && *x <= hi + tol)
            }
            ConstraintSet::Simplex => x.iter().all(|&v| v >= -tol) && (x.sum() - 1.0).abs() <= tol,
        }
    }

    /// `max_{y ∈ X} ⟨v, y⟩`, attained at a vertex.
    pub fn support(&self, v: &DVector<f64>) -> f64 {
        match self {
            ConstraintSet::Box { lo, hi } => {
                v.iter()
                    .zip(lo.iter())
                    .zip(hi.iter())
                    .map(|((v, lo), hi)| match v.partial_cmp(&0.0) {
                        Some(std::cmp::Ordering::Greater) => v * hi,
                        Some(std::cmp::Ordering::Less) => v * lo,
                        _ => 0.0,
                    })
                    .sum()
            }
            ConstraintSet::Simplex => v.max(),
        }
    }

    /// `argmin_{x ∈ X} ½ Σ d_i (x_i − w_i)²` for positive weights `d`.
    pub fn project(&self, w: &DVector<f64>, d: &DVector<f64>) -> Result<DVector<f64>> {
        if d.len() != w.len() || d.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::ProjectionFailed("weights must be positive and match the point".into()));
        }
        match self {
            ConstraintSet::Box { lo, hi } => {
                if lo.len() != w.len() {
                    return Err(Error::DimensionMismatch("box and point differ in length".into()));
                }
                Ok(DVector::from_fn(w.len(), |i, _| w[i].clamp(lo[i], hi[i])))
            }
            ConstraintSet::Simplex => simplex_projection(w, d),
        }
    }
}

/// KKT: `x_i = max(0, w_i − λ/d_i)` with `λ` chosen so the entries sum to
/// one. The sum is piecewise linear and decreasing in `λ` with breakpoints
/// `d_i w_i`; sorting them locates the active piece exactly.
fn simplex_projection(w: &DVector<f64>, d: &DVector<f64>) -> Result<DVector<f64>> {
    let n = w.len();
    if n == 0 {
        return Err(Error::ProjectionFailed("empty simplex".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (d[b] * w[b]).total_cmp(&(d[a] * w[a])));
    // with the k largest breakpoints active: Σ (w_i − λ/d_i) = 1
    let (mut sw, mut sinv) = (0.0, 0.0);
    let mut lambda = f64::NAN;
    for (k, &i) in order.iter().enumerate() {
        sw += w[i];
        sinv += 1.0 / d[i];
        let cand = (sw - 1.0) / sinv;
        let next = order.get(k + 1).map(|&j| d[j] * w[j]);
        if cand < d[i] * w[i] && next.map_or(true, |b| cand >= b) {
            lambda = cand;
            break;
        }
    }
    if !lambda.is_finite() {
        return Err(Error::ProjectionFailed("no active set satisfies the KKT conditions".into()));
    }
    let x = DVector::from_fn(n, |i, _| (w[i] - lambda / d[i]).max(0.0));
    Ok(&x / x.sum())
}
