use nalgebra::DVector;

use super::run::Trajectory;
use crate::error::{Error, Result};
use crate::model::Mode;

/// Fewest samples an estimate is attempted on.
pub const MIN_SAMPLES: usize = 50;

/// Distances at or below this fraction of the initial one are treated as
/// converged to working precision and dropped from the fit.
pub const FLOOR: f64 = 1e-12;

/// A fitted linear rate. For discrete runs `rho` is the per-step factor;
/// for continuous runs it is the decay exponent per unit time.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub rho: f64,
    pub mode: Mode,
    /// Half-open sample range `[start, end)` used by the fit.
    pub window: (usize, usize),
}

/// Least-squares slope of `ln ‖x_k − x*‖` over the tail half of the
/// trajectory.
pub fn empirical_rate(traj: &Trajectory, x_opt: &DVector<f64>) -> Result<RateEstimate> {
    rate_from_distances(&traj.times, &traj.distances(x_opt), traj.mode)
}

pub fn rate_from_distances(times: &[f64], dists: &[f64], mode: Mode) -> Result<RateEstimate> {
    if dists.len() < MIN_SAMPLES || times.len() != dists.len() {
        return Err(Error::TooShort { len: dists.len().min(times.len()), min: MIN_SAMPLES });
    }
    let d0 = dists[0];
    if !(d0 > 0.0) || !dists.iter().any(|&d| d <= 1e-2 * d0) {
        return Err(Error::Stalled);
    }
    let end = dists.iter().position(|&d| d <= FLOOR * d0).unwrap_or(dists.len());
    let start = end / 2;
    if end - start < 2 {
        return Err(Error::TooShort { len: end, min: 4 });
    }
    let n = (end - start) as f64;
    let (ts, ls): (Vec<f64>, Vec<f64>) = (start..end).map(|k| (times[k], dists[k].ln())).unzip();
    let tm = ts.iter().sum::<f64>() / n;
    let lm = ls.iter().sum::<f64>() / n;
    let sxy: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - tm) * (l - lm)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    let slope = sxy / sxx;
    let rho = if mode == Mode::Continuous { -slope } else { slope.exp() };
    Ok(RateEstimate { rho, mode, window: (start, end) })
}
