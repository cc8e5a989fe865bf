//! Rate searches and closed-form rate facts.
//!
//! The bisections assume that feasibility is monotone in the rate: feasible
//! continuous-time exponents form an interval `[0, ρ*)`, and feasible
//! discrete-time contraction factors form `(ρ*, 1]`. [`feasibility_scan`]
//! and [`monotonicity_violation`] test that assumption on a grid.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lmi::{assemble_ct_lmi, assemble_dt_lmi, assemble_proj_lmi, verify_witness, AffineMatrixInequality};
use crate::model::{composite_kappa, LmiKind, Mode, ProblemSpec, RateCertificate, Witness};
use crate::reform::{build_ct_lure, build_dt_lure, build_proj_lure};
use crate::sdp::{solve_feasibility, FeasibilityOutcome, SolverOptions};

const MAX_BISECTIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierMode {
    /// Sector multipliers only.
    SectorOnly,
    /// Every multiplier the mode supports: Popov in continuous time,
    /// weighted off-by-one in discrete time, the full set when projected.
    Default,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateQuery {
    pub spec: ProblemSpec,
    pub multipliers: MultiplierMode,
    /// Bisection stops once the bracket is narrower than this.
    pub tol: f64,
    pub bracket: (f64, f64),
    pub solver: SolverOptions,
    /// Projected mode only: after the stepsize search, also minimize the
    /// certified rate over smaller stepsizes.
    pub refine_stepsize: bool,
}

impl RateQuery {
    /// Query with the default bracket for the problem's mode: `[0, 2ημ_f μ̄]`
    /// for exponents and `[1e-4, 1]` for contraction factors.
    pub fn new(spec: ProblemSpec, multipliers: MultiplierMode) -> Self {
        let bracket = match spec.mode() {
            Mode::Continuous => (0.0, 2.0 * spec.eta() * spec.mu_f() * spec.mu_bar()),
            Mode::Discrete | Mode::Projected => (1e-4, 1.0),
        };
        RateQuery { spec, multipliers, tol: 1e-7, bracket, solver: SolverOptions::default(), refine_stepsize: true }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_spec(&self, spec: ProblemSpec) -> Self {
        RateQuery { spec, ..self.clone() }
    }

    fn lmi_kind(&self) -> LmiKind {
        match (self.spec.mode(), self.multipliers) {
            (Mode::Continuous, MultiplierMode::SectorOnly) => LmiKind::ContinuousSector,
            (Mode::Continuous, MultiplierMode::Default) => LmiKind::ContinuousPopov,
            (Mode::Discrete, _) => LmiKind::DiscreteOffByOne,
            (Mode::Projected, _) => LmiKind::Projected,
        }
    }
}

/// Assembles the inequality the query's mode and multipliers ask for at `rho`.
pub fn assemble_for(q: &RateQuery, rho: f64) -> Result<AffineMatrixInequality> {
    let spec = &q.spec;
    let lmi = match spec.mode() {
        Mode::Continuous => assemble_ct_lmi(&build_ct_lure(spec)?, rho)?,
        Mode::Discrete => assemble_dt_lmi(&build_dt_lure(spec)?, rho)?,
        Mode::Projected => assemble_proj_lmi(&build_proj_lure(spec)?, rho)?,
    };
    if q.multipliers == MultiplierMode::Default {
        return Ok(lmi);
    }
    // Popov weights in continuous time, off-by-one weights in discrete time
    // (every second filter is an off-by-one filter).
    let mut out = lmi.clone();
    for name in lmi.names() {
        let off_by_one = name
            .strip_prefix("alpha")
            .and_then(|k| k.parse::<usize>().ok())
            .is_some_and(|k| k % 2 == 0);
        if name.starts_with("gamma") || off_by_one {
            out = out.pin(name, 0.0)?;
        }
    }
    Ok(out)
}

/// Witness and margin when the query's inequality is strictly feasible at `rho`.
pub fn feasible_at(q: &RateQuery, rho: f64) -> Result<Option<(Witness, f64)>> {
    let lmi = assemble_for(q, rho)?;
    match solve_feasibility(&lmi, &q.solver) {
        FeasibilityOutcome::Feasible { witness, margin } => Ok(Some((witness, margin))),
        FeasibilityOutcome::Infeasible { .. } => Ok(None),
        FeasibilityOutcome::Failed { reason } => Err(Error::SolverFailed(format!("rho = {rho}: {reason}"))),
    }
}

fn uncertified(q: &RateQuery, note: String) -> RateCertificate {
    let rho = if q.spec.mode() == Mode::Continuous { 0.0 } else { 1.0 };
    RateCertificate {
        rho,
        certified: false,
        witness: Witness::new(),
        margin: f64::INFINITY,
        mode: q.spec.mode(),
        lmi: q.lmi_kind(),
        eta: q.spec.eta(),
        note,
    }
}

fn certificate(q: &RateQuery, rho: f64, (witness, margin): (Witness, f64), note: String) -> RateCertificate {
    RateCertificate {
        rho,
        certified: true,
        witness,
        margin,
        mode: q.spec.mode(),
        lmi: q.lmi_kind(),
        eta: q.spec.eta(),
        note,
    }
}

/// Largest certified exponent `ρ` in the bracket. An infeasible lower end
/// gives an uncertified result with `ρ = 0`.
pub fn ct_certified_rate(q: &RateQuery) -> Result<RateCertificate> {
    q.spec.expect_mode(Mode::Continuous)?;
    let (mut lo, mut hi) = q.bracket;
    let Some(mut best) = feasible_at(q, lo)? else {
        return Ok(uncertified(q, format!("infeasible at rho = {lo}")));
    };
    if let Some(w) = feasible_at(q, hi)? {
        return Ok(certificate(q, hi, w, format!("feasible at bracket end {hi}")));
    }
    let mut steps = 0;
    while hi - lo > q.tol && steps < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        match feasible_at(q, mid)? {
            Some(w) => {
                lo = mid;
                best = w;
            }
            None => hi = mid,
        }
        steps += 1;
    }
    Ok(certificate(q, lo, best, format!("bisection [{lo}, {hi}] after {steps} steps")))
}

/// Smallest certified contraction factor in the bracket, for discrete or
/// projected specs at the problem's own stepsize. Infeasibility at the upper
/// end gives an uncertified result with `ρ = 1`.
pub fn dt_certified_rate(q: &RateQuery) -> Result<RateCertificate> {
    if q.spec.mode() == Mode::Continuous {
        return Err(Error::ModeMismatch { expected: Mode::Discrete, found: Mode::Continuous });
    }
    let (mut lo, mut hi) = q.bracket;
    let Some(mut best) = feasible_at(q, hi)? else {
        return Ok(uncertified(q, format!("infeasible at rho = {hi}")));
    };
    if let Some(w) = feasible_at(q, lo)? {
        return Ok(certificate(q, lo, w, format!("feasible at bracket end {lo}")));
    }
    let mut steps = 0;
    while hi - lo > q.tol && steps < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        match feasible_at(q, mid)? {
            Some(w) => {
                hi = mid;
                best = w;
            }
            None => lo = mid,
        }
        steps += 1;
    }
    Ok(certificate(q, hi, best, format!("bisection [{lo}, {hi}] after {steps} steps")))
}

/// Outcome of the stepsize search for the projected iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepsizeSearch {
    /// Stepsizes tried at `ρ = 1`, with their verdicts, in the order tried.
    pub tried: Vec<(f64, bool)>,
    /// Feasible stepsize closest to the quadratic-optimal one, if any.
    pub eta: Option<f64>,
}

/// Finds the largest stepsize, up to the quadratic-optimal
/// `η₂ = 2/(L_f L̄ + μ_f μ̄)`, whose projected inequality is feasible at
/// `ρ = 1`. Tries `η₂` first, then 20 geometric points in `[0.01, 1]·η₂`,
/// then bisects between the largest feasible point and its infeasible
/// neighbour to relative width `1e-3`.
pub fn projected_stepsize_search(q: &RateQuery) -> Result<StepsizeSearch> {
    let (eta2, _) = quadratic_rate(&q.spec);
    let feasible = |eta: f64| -> Result<bool> {
        let qq = q.with_spec(q.spec.with_eta(eta)?.with_mode(Mode::Projected));
        Ok(feasible_at(&qq, 1.0)?.is_some())
    };
    let mut tried = vec![(eta2, feasible(eta2)?)];
    if tried[0].1 {
        return Ok(StepsizeSearch { tried, eta: Some(eta2) });
    }
    let grid: Vec<f64> = (0..20).map(|j| eta2 * 0.01f64.powf(1.0 - j as f64 / 19.0)).collect();
    let mut last_ok = None;
    for (j, &eta) in grid.iter().enumerate().rev().skip(1) {
        let ok = feasible(eta)?;
        tried.push((eta, ok));
        if ok {
            last_ok = Some(j);
            break;
        }
    }
    let Some(j) = last_ok else {
        return Ok(StepsizeSearch { tried, eta: None });
    };
    let (mut lo, mut hi) = (grid[j], grid[j + 1]);
    while hi / lo - 1.0 > 1e-3 {
        let mid = (lo * hi).sqrt();
        let ok = feasible(mid)?;
        tried.push((mid, ok));
        if ok {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(StepsizeSearch { tried, eta: Some(lo) })
}

/// Projected rate at the stepsize found by [`projected_stepsize_search`].
///
/// That stepsize sits on the feasibility boundary at `ρ = 1`, where the
/// certified rate is close to 1. With `refine_stepsize` set, the certified
/// rate is also minimized over smaller stepsizes: a descending sweep by the
/// search's grid ratio until the rate stops improving, then golden-section
/// refinement between the neighbours of the best point. The certificate's
/// `eta` records the stepsize used.
pub fn proj_certified_rate(q: &RateQuery) -> Result<RateCertificate> {
    q.spec.expect_mode(Mode::Projected)?;
    let search = projected_stepsize_search(q)?;
    let Some(eta_b) = search.eta else {
        return Ok(uncertified(q, format!("infeasible at rho = 1 for all {} stepsizes tried", search.tried.len())));
    };
    let (eta2, _) = quadratic_rate(&q.spec);
    let rate_at = |eta: f64, tol: f64| -> Result<RateCertificate> {
        dt_certified_rate(&q.with_spec(q.spec.with_eta(eta)?).with_tol(tol))
    };
    let mut best = rate_at(eta_b, q.tol)?;
    let mut how = "boundary stepsize";
    if q.refine_stepsize {
        let coarse = q.tol.max(1e-5);
        let ratio = 0.01f64.powf(1.0 / 19.0);
        let mut sweep = vec![(eta_b, rate_at(eta_b, coarse)?.rho)];
        for _ in 0..19 {
            let eta = sweep.last().unwrap().0 * ratio;
            let rho = rate_at(eta, coarse)?.rho;
            let improving = rho < sweep.last().unwrap().1;
            sweep.push((eta, rho));
            if !improving {
                break;
            }
        }
        let j = (0..sweep.len()).min_by(|&a, &b| sweep[a].1.total_cmp(&sweep[b].1)).unwrap();
        let (mut lo, mut hi) = (sweep[(j + 1).min(sweep.len() - 1)].0.ln(), sweep[j.saturating_sub(1)].0.ln());
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut ra, mut rb) = (rate_at(a.exp(), coarse)?.rho, rate_at(b.exp(), coarse)?.rho);
        for _ in 0..12 {
            if ra <= rb {
                hi = b;
                b = a;
                rb = ra;
                a = hi - g * (hi - lo);
                ra = rate_at(a.exp(), coarse)?.rho;
            } else {
                lo = a;
                a = b;
                ra = rb;
                b = lo + g * (hi - lo);
                rb = rate_at(b.exp(), coarse)?.rho;
            }
        }
        let cands = [(sweep[j].1, sweep[j].0), (ra, a.exp()), (rb, b.exp())];
        let (_, eta) = cands.into_iter().min_by(|x, y| x.0.total_cmp(&y.0)).unwrap();
        let refined = rate_at(eta, q.tol)?;
        if refined.certified && refined.rho < best.rho {
            best = refined;
            how = "rate-minimizing stepsize";
        }
    }
    best.note = format!(
        "{how} {} = {:.6} x quadratic-optimal (search: {} trials, boundary {}); {}",
        best.eta,
        best.eta / eta2,
        search.tried.len(),
        eta_b,
        best.note
    );
    Ok(best)
}

/// Rate certificate for any mode: continuous and discrete specs use their
/// own stepsize, projected specs run the stepsize search.
pub fn certified_rate(q: &RateQuery) -> Result<RateCertificate> {
    match q.spec.mode() {
        Mode::Continuous => ct_certified_rate(q),
        Mode::Discrete => dt_certified_rate(q),
        Mode::Projected => proj_certified_rate(q),
    }
}

/// Feasibility verdicts on `points` evenly spaced rates across the bracket.
pub fn feasibility_scan(q: &RateQuery, points: usize) -> Result<Vec<(f64, bool)>> {
    let (lo, hi) = q.bracket;
    (0..points)
        .map(|i| {
            let rho = lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64;
            Ok((rho, feasible_at(q, rho)?.is_some()))
        })
        .collect()
}

/// First rate in a scan that breaks monotonicity: an infeasible exponent
/// below a feasible one, or an infeasible contraction factor above a
/// feasible one.
pub fn monotonicity_violation(scan: &[(f64, bool)], mode: Mode) -> Option<f64> {
    let ordered: Vec<&(f64, bool)> = match mode {
        Mode::Continuous => scan.iter().rev().collect(),
        _ => scan.iter().collect(),
    };
    let mut seen_feasible = false;
    for &&(rho, ok) in &ordered {
        if ok {
            seen_feasible = true;
        } else if seen_feasible {
            return Some(rho);
        }
    }
    None
}

/// Worst-case quadratic stepsize and rate: `η = 2/(L_f L̄ + μ_f μ̄)` and
/// `ρ = (κ − 1)/(κ + 1)` with `κ` the composite condition number.
pub fn quadratic_rate(spec: &ProblemSpec) -> (f64, f64) {
    let eta = 2.0 / (spec.l_f() * spec.l_bar() + spec.mu_f() * spec.mu_bar());
    let kappa = composite_kappa(spec);
    (eta, (kappa - 1.0) / (kappa + 1.0))
}

/// Exact spectrum range of `F Φ̄` for symmetric positive definite `F` and
/// `Φ̄`, and the rate `(λmax/λmin − 1)/(λmax/λmin + 1)` it allows.
pub fn spectrum_bound(f: &DMatrix<f64>, phibar: &DMatrix<f64>) -> Result<(f64, f64, f64)> {
    if !f.is_square() || f.shape() != phibar.shape() {
        return Err(Error::DimensionMismatch("F and phibar must be square and of equal size".into()));
    }
    Cholesky::new(f.clone()).ok_or_else(|| Error::NotPositiveDefinite("F".into()))?;
    let l = Cholesky::new(phibar.clone()).ok_or_else(|| Error::NotPositiveDefinite("phibar".into()))?.l();
    // F Φ̄ = F L Lᵀ is similar to Lᵀ F L
    let eig = SymmetricEigen::new(l.transpose() * f * &l).eigenvalues;
    let (lmin, lmax) = (eig.min(), eig.max());
    let r = lmax / lmin;
    Ok((lmin, lmax, (r - 1.0) / (r + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyVerdict {
    Holds,
    Fails,
    Boundary,
}

/// Coefficients `(a, b, c)` of the frequency inequality `a ω⁴ + b ω² + c ≥ 0`
/// for the combined sector and Popov multiplier on the continuous loop.
pub fn ct_frequency_polynomial(spec: &ProblemSpec, a1: f64, a2: f64, b1: f64, b2: f64) -> (f64, f64, f64) {
    let [a, b, c] = frequency_terms(spec, a1, a2, b1, b2).0;
    (a, b, c)
}

/// The coefficients together with, for each, the sum of the absolute
/// values of its addends. At the closed-form multipliers the coefficients
/// cancel to rounding level, so these sums, not the coefficients
/// themselves, decide what counts as zero.
fn frequency_terms(spec: &ProblemSpec, a1: f64, a2: f64, b1: f64, b2: f64) -> ([f64; 3], [f64; 3]) {
    let (eta, mf, lf, mb, lb) = (spec.eta(), spec.mu_f(), spec.l_f(), spec.mu_bar(), spec.l_bar());
    let a = [-b1 * b1];
    let b = [
        -eta * eta * b2 * b2,
        2.0 * a1 * eta * (lf + mf) * b2,
        4.0 * a1 * a2,
        -a1 * a1 * (lf - mf).powi(2),
        2.0 * a2 * b1 * eta * lb,
        2.0 * a2 * b1 * eta * mb,
    ];
    let c = [eta * eta * 4.0 * a1 * a2 * lf * mf * lb * mb, -eta * eta * a2 * a2 * (lb - mb).powi(2)];
    let sum = |t: &[f64]| t.iter().sum::<f64>();
    let mag = |t: &[f64]| t.iter().map(|v| v.abs()).sum::<f64>();
    ([sum(&a), sum(&b), sum(&c)], [mag(&a), mag(&b), mag(&c)])
}

/// Decides whether the frequency inequality holds for every real `ω`.
/// A coefficient within `1e-12` of its addends' magnitude is treated as
/// zero; a zero minimum (at `ω = 0`, or everywhere) is `Boundary`.
pub fn ct_frequency_check(spec: &ProblemSpec, a1: f64, a2: f64, b1: f64, b2: f64) -> FrequencyVerdict {
    let (coef, mag) = frequency_terms(spec, a1, a2, b1, b2);
    let [a, b, c] = [0, 1, 2].map(|i| if coef[i].abs() <= 1e-12 * mag[i] { 0.0 } else { coef[i] });
    if a < 0.0 || (a == 0.0 && b < 0.0) || c < 0.0 {
        return FrequencyVerdict::Fails;
    }
    if c == 0.0 {
        FrequencyVerdict::Boundary
    } else {
        FrequencyVerdict::Holds
    }
}

/// Minimum of the frequency polynomial over `points` log-spaced
/// frequencies in `[lo, hi]`, divided by the largest addend magnitude.
pub fn ct_frequency_min(spec: &ProblemSpec, m: (f64, f64, f64, f64), lo: f64, hi: f64, points: usize) -> f64 {
    let ([a, b, c], mag) = frequency_terms(spec, m.0, m.1, m.2, m.3);
    let s = mag.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(*v));
    (0..points)
        .map(|i| {
            let w = lo * (hi / lo).powf(i as f64 / (points.max(2) - 1) as f64);
            let w2 = w * w;
            (a * w2 * w2 + b * w2 + c) / s
        })
        .fold(f64::INFINITY, f64::min)
}

/// Closed-form multipliers on the boundary of the frequency inequality
/// (with `alpha2 = 1`, `beta1 = 0`):
/// `α₁* = (L̄ − μ̄)²/(4 L_f L̄ μ_f μ̄)` and
/// `β₂* = (α₁*(L_f + μ_f) + 2√(α₁*² L_f μ_f + α₁*))/η`.
pub fn feasible_multipliers_ct(spec: &ProblemSpec) -> (f64, f64) {
    let (eta, mf, lf, mb, lb) = (spec.eta(), spec.mu_f(), spec.l_f(), spec.mu_bar(), spec.l_bar());
    let a1 = (lb - mb).powi(2) / (4.0 * lf * lb * mf * mb);
    let b2 = (a1 * (lf + mf) + 2.0 * (a1 * a1 * lf * mf + a1).sqrt()) / eta;
    (a1, b2)
}

fn restrict(lmi: &AffineMatrixInequality, w: Witness) -> Witness {
    let mut out = Witness::new();
    for (name, v) in w.iter() {
        if lmi.index_of(name).is_some() {
            out.set(name, v);
        }
    }
    out
}

/// Witness for the tight exponent `ρ = η μ_f μ̄` with Popov weight `γ`:
/// `p = γ μ̄`, `q1 = η γ`, `q2 = 0`.
pub fn tight_rate_witness(spec: &ProblemSpec, gamma: f64) -> Witness {
    Witness::new()
        .with("p", gamma * spec.mu_bar())
        .with("q1", spec.eta() * gamma)
        .with("q2", 0.0)
        .with("gamma", gamma)
}

/// The Bregman divergence `D_φ̄(z, z*)` as a Popov-type Lyapunov function:
/// `p = μ̄`, `q1 = η`, `q2 = 2η μ_f μ̄`, `γ = 1`. Checked against the
/// `ρ = 0` inequality before it is returned.
pub fn bregman_lyapunov_coeffs(spec: &ProblemSpec) -> Result<Witness> {
    let lmi = assemble_ct_lmi(&build_ct_lure(spec)?, 0.0)?;
    let w = Witness::new()
        .with("p", spec.mu_bar())
        .with("q1", spec.eta())
        .with("q2", 2.0 * spec.eta() * spec.mu_f() * spec.mu_bar())
        .with("gamma", 1.0);
    let w = restrict(&lmi, w);
    let margin = verify_witness(&lmi, &w)?;
    if margin.is_nan() || margin >= 0.0 {
        return Err(Error::WitnessRejected { margin });
    }
    Ok(w)
}
