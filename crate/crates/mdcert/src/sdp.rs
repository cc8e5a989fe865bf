//! Dense feasibility solver for [`AffineMatrixInequality`].
//!
//! The solver maximizes `t` subject to `F0 + Σ x_i F_i ⪯ −t I` with a
//! log-barrier path-following method. Before solving, every matrix is
//! scaled to unit Frobenius norm and each coordinate is boxed. Coordinates
//! of homogeneous problems (`F0 = 0`) lie in `[−1, 1]` after scaling, so
//! `t*` measures how far inside the cone the best unit-size witness gets.
//! Affine problems use the box `[−1e6, 1e6]`. Nonnegative coordinates
//! have lower bound zero.
//!
//! A `Feasible` verdict always carries a witness whose margin was
//! recomputed from the unscaled matrices with a dense eigensolver.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lmi::{max_eigenvalue, AffineMatrixInequality, Sign, Witness};

const AFFINE_BOX: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Cap on Newton steps across all barrier rounds.
    pub max_iters: usize,
    /// Strictness threshold on the scaled problem; `None` uses the problem's own.
    pub tolerance: Option<f64>,
    /// Seeds the jittered restart used after a numerical breakdown.
    pub seed: u64,
    pub verbosity: u8,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iters: 2000, tolerance: None, seed: 0, verbosity: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityOutcome {
    Feasible { witness: Witness, margin: f64 },
    /// No witness reached the threshold; `best_margin` is the smallest
    /// largest-eigenvalue seen.
    Infeasible { best_margin: f64 },
    Failed { reason: String },
}

impl FeasibilityOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityOutcome::Feasible { .. })
    }
}

/// Optimum of the epigraph problem in the problem's own units.
#[derive(Debug, Clone, PartialEq)]
pub struct EpigraphSolution {
    pub t: f64,
    pub x: Vec<f64>,
    /// Remaining duality-gap bound, in the problem's own units.
    pub gap: f64,
}

struct Scaled {
    g0: DMatrix<f64>,
    gs: Vec<DMatrix<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// `x_i = x̂_i · xs[i]`.
    xs: Vec<f64>,
    /// `t = t̂ · ts`.
    ts: f64,
}

fn scale(problem: &AffineMatrixInequality) -> Scaled {
    let n0 = problem.f0.norm();
    let ts = if n0 > 0.0 { n0 } else { 1.0 };
    let r = if n0 > 0.0 { AFFINE_BOX } else { 1.0 };
    let mut gs = Vec::new();
    let mut xs = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (f, c) in problem.basis.iter().zip(&problem.coords) {
        let nf = f.norm();
        let s = if nf > 0.0 { nf } else { 1.0 };
        gs.push(f / s);
        xs.push(ts / s);
        lo.push(match c.sign {
            Sign::Free => -r,
            Sign::NonNeg => 0.0,
        });
        hi.push(c.upper.map_or(r, |u| (u * s / ts).min(r)));
    }
    Scaled { g0: &problem.f0 / ts, gs, lo, hi, xs, ts }
}

enum Stop {
    /// Scaled `t` crossed the threshold; stop as soon as the witness verifies.
    AtThreshold(f64),
    /// Follow the path until the gap bound drops below this value.
    Gap(f64),
}

struct PathResult {
    x: Vec<f64>,
    t: f64,
    gap: f64,
    decided: Option<bool>,
}

struct Barrier<'a> {
    p: &'a Scaled,
    n: usize,
}

impl Barrier<'_> {
    fn slack(&self, x: &[f64], t: f64) -> DMatrix<f64> {
        let mut s = -&self.p.g0;
        for (xi, g) in x.iter().zip(&self.p.gs) {
            s -= g * *xi;
        }
        for i in 0..self.n {
            s[(i, i)] -= t;
        }
        s
    }

    fn interior(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.p.lo).zip(&self.p.hi).all(|((x, lo), hi)| x > lo && x < hi)
    }

    /// Barrier value at `(x, t)`, or `None` outside the domain.
    fn value(&self, tau: f64, x: &[f64], t: f64) -> Option<f64> {
        if !self.interior(x) {
            return None;
        }
        let chol = Cholesky::new(self.slack(x, t))?;
        let logdet: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let boxes: f64 =
            x.iter().zip(&self.p.lo).zip(&self.p.hi).map(|((x, lo), hi)| (x - lo).ln() + (hi - x).ln()).sum();
        Some(-tau * t - logdet - boxes)
    }

    /// Gradient and Hessian in `(x, t)`, with `t` last.
    fn derivatives(&self, tau: f64, x: &[f64], t: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let chol: Cholesky<f64, Dyn> = Cholesky::new(self.slack(x, t))?;
        let l = chol.l();
        let linv = l.solve_lower_triangular(&DMatrix::identity(self.n, self.n))?;
        let m = x.len();
        let mut hat: Vec<DMatrix<f64>> = self.p.gs.iter().map(|g| &linv * g * linv.transpose()).collect();
        hat.push(&linv * linv.transpose());
        let mut grad = DVector::zeros(m + 1);
        let mut hess = DMatrix::zeros(m + 1, m + 1);
        for i in 0..=m {
            grad[i] = hat[i].trace();
            for j in 0..=i {
                let v = hat[i].dot(&hat[j]);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        grad[m] -= tau;
        for i in 0..m {
            let a = x[i] - self.p.lo[i];
            let b = self.p.hi[i] - x[i];
            grad[i] += -1.0 / a + 1.0 / b;
            hess[(i, i)] += 1.0 / (a * a) + 1.0 / (b * b);
        }
        Some((grad, hess))
    }
}

/// Solves `H d = −g` after symmetric diagonal scaling. Near the boundary
/// one barrier direction dominates the Hessian by many orders of magnitude;
/// when Cholesky gives up, small eigenvalues are clipped instead.
fn newton_step(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let dinv = h.diagonal().map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 });
    let hs = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * dinv[i] * dinv[j]);
    let gs = -g.component_mul(&dinv);
    let ys = match Cholesky::new(hs.clone()) {
        Some(c) => c.solve(&gs),
        None => {
            let eig = SymmetricEigen::new(hs);
            let cut = 1e-14 * eig.eigenvalues.amax();
            let proj = eig.eigenvectors.transpose() * gs;
            let scaled = DVector::from_fn(proj.len(), |i, _| {
                let l = eig.eigenvalues[i];
                if l > cut {
                    proj[i] / l
                } else {
                    0.0
                }
            });
            &eig.eigenvectors * scaled
        }
    };
    let d = ys.component_mul(&dinv);
    d.iter().all(|v| v.is_finite()).then_some(d)
}

fn start_point(p: &Scaled, jitter: Option<u64>) -> Vec<f64> {
    let mut rng = jitter.map(ChaCha8Rng::seed_from_u64);
    p.lo.iter()
        .zip(&p.hi)
        .map(|(&lo, &hi)| {
            let base = if hi - lo <= 2.0 {
                0.5 * (lo + hi)
            } else if lo >= 0.0 {
                lo + 1.0
            } else if hi <= 0.0 {
                hi - 1.0
            } else {
                0.0
            };
            match rng.as_mut() {
                Some(r) => {
                    let w = 0.1 * (hi - lo).min(2.0);
                    (base + r.gen_range(-w..w)).clamp(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo))
                }
                None => base,
            }
        })
        .collect()
}

fn follow_path(
    p: &Scaled,
    stop: Stop,
    opts: &SolverOptions,
    jitter: Option<u64>,
    mut accept: impl FnMut(&[f64], f64) -> bool,
) -> Result<PathResult, String> {
    let n = p.g0.nrows();
    let m = p.gs.len();
    let bar = Barrier { p, n };
    let mut x = start_point(p, jitter);
    let s0 = bar.slack(&x, 0.0);
    let mut t = -max_eigenvalue(&-s0) - 1.0;
    let theta = (n + 2 * m) as f64;
    let mut tau = 1.0;
    let mut iters = 0;
    loop {
        let mut stalled = false;
        // centering
        loop {
            iters += 1;
            if iters > opts.max_iters {
                return Err(format!("iteration cap {} reached", opts.max_iters));
            }
            let (g, h) = bar.derivatives(tau, &x, t).ok_or("slack lost definiteness")?;
            let step = newton_step(&h, &g).ok_or("Newton system is singular")?;
            let dec2 = -g.dot(&step);
            if !dec2.is_finite() {
                return Err("non-finite Newton decrement".into());
            }
            let f0 = bar.value(tau, &x, t).ok_or("iterate left the barrier domain")?;
            // below this the decrement is lost in the rounding of the barrier value
            if dec2 < 1e-9f64.max(1e-15 * f0.abs()) {
                break;
            }
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(x, d)| x + alpha * d).collect();
                let tn = t + alpha * step[m];
                if let Some(f1) = bar.value(tau, &xn, tn) {
                    // sufficient decrease, up to rounding in the barrier value
                    if f1 <= f0 - 0.25 * alpha * dec2 + 1e-14 * f0.abs().max(1.0) {
                        moved = f1 < f0 || xn != x || tn != t;
                        x = xn;
                        t = tn;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if opts.verbosity > 1 {
                eprintln!("  tau {tau:.1e} t {t:.6e} dec {dec2:.2e} step {alpha:.2e}");
            }
            if !moved || alpha < 1e-10 {
                // working precision exhausted at this barrier weight
                stalled = true;
                break;
            }
            if alpha < 1e-6 && dec2 < 1e-4 {
                break;
            }
            if let Stop::AtThreshold(eps) = stop {
                if t > eps && accept(&x, t) {
                    return Ok(PathResult { x, t, gap: theta / tau, decided: Some(true) });
                }
            }
        }
        let gap = 1.1 * theta / tau;
        if opts.verbosity > 0 {
            eprintln!("round tau {tau:.1e} t {t:.6e} gap {gap:.2e}");
        }
        match stop {
            Stop::AtThreshold(eps) => {
                if t > eps && accept(&x, t) {
                    return Ok(PathResult { x, t, gap, decided: Some(true) });
                }
                // a stall leaves t within rounding of the optimum; not
                // reaching the threshold by then counts as infeasible
                if t + gap < eps || gap < 1e-15 || stalled {
                    return Ok(PathResult { x, t, gap, decided: Some(false) });
                }
            }
            Stop::Gap(g) => {
                if gap < g || stalled {
                    return Ok(PathResult { x, t, gap, decided: None });
                }
            }
        }
        tau *= 10.0;
    }
}

fn unscale(p: &Scaled, x: &[f64]) -> Vec<f64> {
    x.iter().zip(&p.xs).map(|(x, s)| x * s).collect()
}

/// Decides whether `F0 + Σ x_i F_i ⪯ −ε I` has a solution.
pub fn solve_feasibility(problem: &AffineMatrixInequality, opts: &SolverOptions) -> FeasibilityOutcome {
    let eps = opts.tolerance.unwrap_or(problem.epsilon);
    let p = scale(problem);
    if problem.n_coords() == 0 {
        let margin = max_eigenvalue(&problem.f0);
        return if margin <= -eps * p.ts {
            FeasibilityOutcome::Feasible { witness: Witness::new(), margin }
        } else {
            FeasibilityOutcome::Infeasible { best_margin: margin }
        };
    }
    let mut verified: Option<(Vec<f64>, f64)> = None;
    let mut accept = |xh: &[f64], _t: f64| {
        let x = unscale(&p, xh);
        let margin = max_eigenvalue(&problem.evaluate(&x));
        if margin <= -0.5 * eps * p.ts {
            verified = Some((x, margin));
            true
        } else {
            false
        }
    };
    let mut result = follow_path(&p, Stop::AtThreshold(eps), opts, None, &mut accept);
    if result.is_err() {
        result = follow_path(&p, Stop::AtThreshold(eps), opts, Some(opts.seed), &mut accept);
    }
    match result {
        Err(reason) => FeasibilityOutcome::Failed { reason },
        Ok(r) => match (r.decided, verified) {
            (Some(true), Some((x, margin))) => {
                FeasibilityOutcome::Feasible { witness: problem.witness_from(&x), margin }
            }
            _ => FeasibilityOutcome::Infeasible { best_margin: -r.t * p.ts },
        },
    }
}

/// Maximizes `t` subject to `F0 + Σ x_i F_i ⪯ −t I` within the scaled box.
pub fn max_min_eig(problem: &AffineMatrixInequality, opts: &SolverOptions) -> Result<EpigraphSolution, String> {
    let p = scale(problem);
    if problem.n_coords() == 0 {
        return Ok(EpigraphSolution { t: -max_eigenvalue(&problem.f0), x: Vec::new(), gap: 0.0 });
    }
    let target = 1e-13;
    let r = follow_path(&p, Stop::Gap(target), opts, None, |_, _| false)
        .or_else(|_| follow_path(&p, Stop::Gap(target), opts, Some(opts.seed), |_, _| false))?;
    Ok(EpigraphSolution { t: r.t * p.ts, x: unscale(&p, &r.x), gap: r.gap * p.ts })
}
