use std::io::Write;

use nalgebra::{DMatrix, DVector};

use super::dgf::DgfPair;
use super::functions::SmoothFunction;
use super::sets::ConstraintSet;
use crate::error::{Error, Result};
use crate::model::Mode;

/// Iterates of one run. `z` is the dual (mirror) coordinate and `x = ∇φ̄(z)`
/// the primal one; `times` holds step indices in discrete time and sample
/// instants in continuous time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mode: Mode,
    pub times: Vec<f64>,
    pub z: Vec<DVector<f64>>,
    pub x: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn distances(&self, x_opt: &DVector<f64>) -> Vec<f64> {
        self.x.iter().map(|x| (x - x_opt).norm()).collect()
    }

    pub fn f_errors(&self, f: &dyn SmoothFunction, f_opt: f64) -> Vec<f64> {
        self.x.iter().map(|x| (f.value(x) - f_opt).abs()).collect()
    }

    /// Writes `k` (or `t`), `x1..xd`, `dist`, `f_err`, one row per iterate.
    pub fn write_csv<W: Write>(&self, out: W, f: &dyn SmoothFunction, x_opt: &DVector<f64>, f_opt: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.x.first().map_or(0, |x| x.len());
        let mut header = vec![if self.mode == Mode::Continuous { "t".to_string() } else { "k".to_string() }];
        header.extend((1..=d).map(|i| format!("x{i}")));
        header.extend(["dist".to_string(), "f_err".to_string()]);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        w.write_record(&header).map_err(io)?;
        for (t, x) in self.times.iter().zip(&self.x) {
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            row.push((x - x_opt).norm().to_string());
            row.push((f.value(x) - f_opt).abs().to_string());
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
        Ok(())
    }
}

fn check_finite(v: &DVector<f64>, step: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged { step })
    }
}

fn check_dims(f: &dyn SmoothFunction, dgf: &dyn DgfPair, v: &DVector<f64>) -> Result<()> {
    if f.dim() != dgf.dim() || v.len() != f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "objective has dimension {}, DGF {}, start point {}",
            f.dim(),
            dgf.dim(),
            v.len()
        )));
    }
    Ok(())
}

/// `z_{k+1} = z_k − η∇f(x_k)`, `x_{k+1} = ∇φ̄(z_{k+1})`, for `n` steps.
pub fn run_dt_md(f: &dyn SmoothFunction, dgf: &dyn DgfPair, z0: &DVector<f64>, eta: f64, n: usize) -> Result<Trajectory> {
    check_dims(f, dgf, z0)?;
    if n == 0 {
        return Err(Error::InvalidParameter("at least one step is required".into()));
    }
    let mut z = z0.clone();
    let mut x = dgf.grad_conjugate(&z);
    let mut traj = Trajectory { mode: Mode::Discrete, times: vec![0.0], z: vec![z.clone()], x: vec![x.clone()] };
    for k in 1..=n {
        z -= eta * f.gradient(&x);
        x = dgf.grad_conjugate(&z);
        check_finite(&z, k)?;
        check_finite(&x, k)?;
        traj.times.push(k as f64);
        traj.z.push(z.clone());
        traj.x.push(x.clone());
    }
    Ok(traj)
}

/// Plain gradient descent `x_{k+1} = x_k − η∇f(x_k)`; `z` mirrors `x`.
pub fn run_gd(f: &dyn SmoothFunction, x0: &DVector<f64>, eta: f64, n: usize) -> Result<Trajectory> {
    if x0.len() != f.dim() {
        return Err(Error::DimensionMismatch("start point and objective differ in dimension".into()));
    }
    let mut x = x0.clone();
    let mut traj = Trajectory { mode: Mode::Discrete, times: vec![0.0], z: vec![x.clone()], x: vec![x.clone()] };
    for k in 1..=n {
        x -= eta * f.gradient(&x);
        check_finite(&x, k)?;
        traj.times.push(k as f64);
        traj.z.push(x.clone());
        traj.x.push(x.clone());
    }
    Ok(traj)
}

/// Integration step that keeps classical RK4 well inside its stability
/// region for `ż = −η ∇f(∇φ̄(z))`.
pub fn ct_step(eta: f64, l_f: f64, l_bar: f64) -> f64 {
    0.1 / (eta * l_f * l_bar)
}

/// Classical RK4 for `ż = −η ∇f(∇φ̄(z))` on `[0, t_end]`, sampled every `h`.
pub fn run_ct_md(
    f: &dyn SmoothFunction,
    dgf: &dyn DgfPair,
    z0: &DVector<f64>,
    eta: f64,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    check_dims(f, dgf, z0)?;
    if !(h > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidParameter(format!("need h > 0 and T ≥ 0, got h = {h}, T = {t_end}")));
    }
    let field = |z: &DVector<f64>| -eta * f.gradient(&dgf.grad_conjugate(z));
    let steps = (t_end / h).ceil() as usize;
    let mut z = z0.clone();
    let mut traj = Trajectory { mode: Mode::Continuous, times: vec![0.0], z: vec![z.clone()], x: vec![dgf.grad_conjugate(&z)] };
    for k in 1..=steps {
        let k1 = field(&z);
        let k2 = field(&(&z + 0.5 * h * &k1));
        let k3 = field(&(&z + 0.5 * h * &k2));
        let k4 = field(&(&z + h * &k3));
        z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_finite(&z, k)?;
        let x = dgf.grad_conjugate(&z);
        check_finite(&x, k)?;
        traj.times.push(k as f64 * h);
        traj.z.push(z.clone());
        traj.x.push(x);
    }
    Ok(traj)
}

/// `argmin_{x ∈ X} ½ (x − w)ᵀ Φ (x − w)`.
///
/// Diagonal `Φ` uses the set's weighted projection. A full `Φ` is supported
/// on boxes of dimension at most 8 by enumerating the `3^d` active patterns
/// and returning the one satisfying the KKT conditions.
pub fn bregman_projection(set: &ConstraintSet, phi: &DMatrix<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
    let n = w.len();
    let off = phi.iter().enumerate().filter(|(k, _)| k % (n + 1) != 0).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    if off == 0.0 {
        return set.project(w, &phi.diagonal());
    }
    let ConstraintSet::Box { lo, hi } = set else {
        return Err(Error::Unsupported("simplex projection needs a diagonal Phi".into()));
    };
    if n > 8 {
        return Err(Error::Unsupported("full-Phi box projection is limited to 8 coordinates".into()));
    }
    let unconstrained = w.clone();
    if set.contains(&unconstrained, 0.0) {
        return Ok(unconstrained);
    }
    let tol = 1e-12 * (1.0 + phi.amax() * w.amax());
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        // 0 free, 1 at lo, 2 at hi
        let pattern: Vec<usize> = (0..n).map(|i| (code / 3usize.pow(i as u32)) % 3).collect();
        if pattern.iter().enumerate().any(|(i, &p)| (p == 1 && !lo[i].is_finite()) || (p == 2 && !hi[i].is_finite())) {
            continue;
        }
        let mut x = w.clone();
        for i in 0..n {
            match pattern[i] {
                1 => x[i] = lo[i],
                2 => x[i] = hi[i],
                _ => {}
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 0).collect();
        if !free.is_empty() {
            // Φ_FF (x_F − w_F) = −Φ_FN (x_N − w_N)
            let m = DMatrix::from_fn(free.len(), free.len(), |a, b| phi[(free[a], free[b])]);
            let rhs = DVector::from_fn(free.len(), |a, _| {
                -(0..n).filter(|j| pattern[*j] != 0).map(|j| phi[(free[a], j)] * (x[j] - w[j])).sum::<f64>()
            });
            let Some(sol) = m.cholesky().map(|c| c.solve(&rhs)) else { continue };
            for (a, &i) in free.iter().enumerate() {
                x[i] = w[i] + sol[a];
            }
        }
        let g = phi * (&x - w);
        let kkt = (0..n).all(|i| match pattern[i] {
            0 => x[i] >= lo[i] - tol && x[i] <= hi[i] + tol,
            1 => g[i] >= -tol,
            _ => g[i] <= tol,
        });
        if kkt {
            let x = DVector::from_fn(n, |i, _| x[i].clamp(lo[i], hi[i]));
            let value = 0.5 * (&x - w).dot(&(phi * (&x - w)));
            if best.as_ref().map_or(true, |(b, _)| value < *b) {
                best = Some((value, x));
            }
        }
    }
    best.map(|(_, x)| x).ok_or_else(|| Error::ProjectionFailed("no box face satisfies the KKT conditions".into()))
}

/// `x_{k+1} = argmin_{x ∈ X} {∇f(x_k)ᵀx + D_φ(x, x_k)/η}` for a quadratic
/// DGF, which is the `Φ`-weighted projection of `x_k − ηΦ⁻¹∇f(x_k)`.
pub fn run_proj_md(
    f: &dyn SmoothFunction,
    dgf: &dyn DgfPair,
    set: &ConstraintSet,
    x0: &DVector<f64>,
    eta: f64,
    n: usize,
) -> Result<Trajectory> {
    check_dims(f, dgf, x0)?;
    let phi = dgf.quadratic_matrix().ok_or_else(|| Error::Unsupported("projected mirror descent needs a quadratic DGF".into()))?.clone();
    if !set.contains(x0, 1e-12) {
        return Err(Error::InvalidParameter("start point lies outside the constraint set".into()));
    }
    let mut x = x0.clone();
    let mut traj = Trajectory { mode: Mode::Projected, times: vec![0.0], z: vec![dgf.grad_phi(&x)], x: vec![x.clone()] };
    for k in 1..=n {
        let w = &x - eta * dgf.grad_conjugate(&f.gradient(&x));
        check_finite(&w, k)?;
        x = bregman_projection(set, &phi, &w)?;
        traj.times.push(k as f64);
        traj.z.push(dgf.grad_phi(&x));
        traj.x.push(x.clone());
    }
    Ok(traj)
}

/// `max_{y ∈ X} ⟨v, y − x_{k+1}⟩` with `v = −∇φ(x_{k+1}) + ∇φ(x_k) − η∇f(x_k)`.
/// The maximum of a linear function is attained at a vertex, so the support
/// function gives it exactly; a value `≤ 0` means `v ∈ N_X(x_{k+1})`.
pub fn inclusion_residual(
    x_k: &DVector<f64>,
    x_next: &DVector<f64>,
    f: &dyn SmoothFunction,
    dgf: &dyn DgfPair,
    set: &ConstraintSet,
    eta: f64,
) -> f64 {
    let v = dgf.grad_phi(x_k) - dgf.grad_phi(x_next) - eta * f.gradient(x_k);
    set.support(&v) - v.dot(x_next)
}
