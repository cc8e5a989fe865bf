//! Multipliers for the nonlinear channels of the loop.
//!
//! Discrete-time multipliers are used in factored form `Ψ* M Ψ`, where the
//! filter `Ψ` maps a channel's `(y, u)` to `ζ` and `M = [[0, 1], [1, 0]]`.
//! A nonlinearity satisfies the hard IQC at rate `rho_bar` when every
//! partial sum `Σ_k rho_bar^(-2k) ζ_kᵀ M ζ_k` is nonnegative.
//!
//! Continuous-time multipliers are kept in the frequency domain
//! ([`FrequencyMultiplier`]); they feed only the frequency-domain check.

use nalgebra::{dmatrix, Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{kron_apply, KronSystem, Mode, ProblemSpec};

/// `[[−2 mu L, L + mu], [L + mu, −2]]`: the quadratic form
/// `[y; u]ᵀ Q [y; u]` is nonnegative for any gradient difference of a
/// function in `S(mu, L)`.
pub fn sector_qc_matrix(mu: f64, l: f64) -> Result<DMatrix<f64>> {
    if !(0.0 <= mu && mu <= l) {
        return Err(Error::InvalidParameter(format!("sector needs 0 <= mu <= L, got mu = {mu}, L = {l}")));
    }
    Ok(dmatrix![-2.0 * mu * l, l + mu; l + mu, -2.0])
}

/// Factored discrete-time multiplier for one scalar channel (repeated over
/// `d` coordinates at use sites).
#[derive(Debug, Clone, PartialEq)]
pub struct IqcFilter {
    pub a: DMatrix<f64>,
    pub b_y: DMatrix<f64>,
    pub b_u: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d_y: DMatrix<f64>,
    pub d_u: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub rho_bar: Option<f64>,
    pub label: &'static str,
}

fn swap_m() -> DMatrix<f64> {
    dmatrix![0.0, 1.0; 1.0, 0.0]
}

fn check_k(k: f64) -> Result<()> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("sector width must be finite and >= 0, got {k}")));
    }
    Ok(())
}

fn check_rho(rho_bar: f64) -> Result<()> {
    if !(rho_bar >= 0.0 && rho_bar.is_finite()) {
        return Err(Error::InvalidParameter(format!("rho_bar must be >= 0, got {rho_bar}")));
    }
    Ok(())
}

impl IqcFilter {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    /// Filter outputs `ζ_k` for channel signals given as per-step vectors of
    /// a common length `d`, starting from a zero filter state.
    pub fn zeta(&self, ys: &[DVector<f64>], us: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let d = ys.first().map_or(1, |y| y.len());
        let mut psi = DVector::zeros(self.n_states() * d);
        let mut out = Vec::with_capacity(ys.len());
        for (y, u) in ys.iter().zip(us) {
            out.push(kron_apply(&self.c, &psi, d) + kron_apply(&self.d_y, y, d) + kron_apply(&self.d_u, u, d));
            psi = kron_apply(&self.a, &psi, d) + kron_apply(&self.b_y, y, d) + kron_apply(&self.b_u, u, d);
        }
        out
    }

    /// Running weighted sums `Σ_{k≤N} rho^(-2k) ζ_kᵀ (M ⊗ I) ζ_k` for every `N`.
    pub fn partial_sums(&self, rho: f64, ys: &[DVector<f64>], us: &[DVector<f64>]) -> Vec<f64> {
        let d = ys.first().map_or(1, |y| y.len());
        let mut acc = 0.0;
        let mut w = 1.0;
        self.zeta(ys, us)
            .iter()
            .map(|z| {
                acc += w * z.dot(&kron_apply(&self.m, z, d));
                w /= rho * rho;
                acc
            })
            .collect()
    }
}

/// Memoryless sector factor: `ζ = [K y − u; u]`.
pub fn sector_filter(k: f64) -> Result<IqcFilter> {
    check_k(k)?;
    Ok(IqcFilter {
        a: DMatrix::zeros(0, 0),
        b_y: DMatrix::zeros(0, 1),
        b_u: DMatrix::zeros(0, 1),
        c: DMatrix::zeros(2, 0),
        d_y: dmatrix![k; 0.0],
        d_u: dmatrix![-1.0; 1.0],
        m: swap_m(),
        rho_bar: None,
        label: "sector",
    })
}

/// Weighted off-by-one factor: the state stores `−(K y − u)` and
/// `ζ_k = [(K y_k − u_k) − rho_bar² (K y_{k−1} − u_{k−1}); u_k]`.
pub fn off_by_one_filter(k: f64, rho_bar: f64) -> Result<IqcFilter> {
    check_k(k)?;
    check_rho(rho_bar)?;
    Ok(IqcFilter {
        a: dmatrix![0.0],
        b_y: dmatrix![-k],
        b_u: dmatrix![1.0],
        c: dmatrix![rho_bar * rho_bar; 0.0],
        d_y: dmatrix![k; 0.0],
        d_u: dmatrix![-1.0; 1.0],
        m: swap_m(),
        rho_bar: Some(rho_bar),
        label: "off-by-one",
    })
}

/// Sector and weighted off-by-one factors for the normal-cone channel,
/// whose sector is `[0, ∞)`. They use `ζ = [u; y]` and
/// `ζ_k = [u_k; y_k − rho_bar² y_{k−1}]`.
pub fn projection_filters(rho_bar: f64) -> Result<(IqcFilter, IqcFilter)> {
    check_rho(rho_bar)?;
    let sector = IqcFilter {
        a: DMatrix::zeros(0, 0),
        b_y: DMatrix::zeros(0, 1),
        b_u: DMatrix::zeros(0, 1),
        c: DMatrix::zeros(2, 0),
        d_y: dmatrix![0.0; 1.0],
        d_u: dmatrix![1.0; 0.0],
        m: swap_m(),
        rho_bar: None,
        label: "normal-cone sector",
    };
    let off_by_one = IqcFilter {
        a: dmatrix![0.0],
        b_y: dmatrix![-1.0],
        b_u: dmatrix![0.0],
        c: dmatrix![0.0; rho_bar * rho_bar],
        d_y: dmatrix![0.0; 1.0],
        d_u: dmatrix![1.0; 0.0],
        m: swap_m(),
        rho_bar: Some(rho_bar),
        label: "normal-cone off-by-one",
    };
    Ok((sector, off_by_one))
}

/// Linear combinations of the system outputs and inputs that feed one IQC.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSelector {
    pub output: DVector<f64>,
    pub input: DVector<f64>,
}

impl ChannelSelector {
    /// Selects output `i` and input `i` (0-based).
    pub fn unit(i: usize, n_outputs: usize, n_inputs: usize) -> Self {
        let mut output = DVector::zeros(n_outputs);
        let mut input = DVector::zeros(n_inputs);
        output[i] = 1.0;
        input[i] = 1.0;
        ChannelSelector { output, input }
    }
}

/// Selector pair for `(y2 − y4, u2 − u4)`: both copies of the conjugate
/// gradient see the same nonlinearity, so their difference lies in the
/// same sector.
pub fn repeated_difference_channels(system: &KronSystem) -> Result<ChannelSelector> {
    if system.mode != Mode::Projected {
        return Err(Error::ModeMismatch { expected: Mode::Projected, found: system.mode });
    }
    let mut output = DVector::zeros(system.n_outputs());
    let mut input = DVector::zeros(system.n_inputs());
    output[1] = 1.0;
    output[3] = -1.0;
    input[1] = 1.0;
    input[3] = -1.0;
    Ok(ChannelSelector { output, input })
}

/// `Π(jω) = constant + jω · jw` over the signal order `[y1, y2, u1, u2]`.
/// `constant` is symmetric and `jw` skew-symmetric, so `Π(jω)` is Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMultiplier {
    pub constant: DMatrix<f64>,
    pub jw: DMatrix<f64>,
}

impl FrequencyMultiplier {
    pub fn zero() -> Self {
        FrequencyMultiplier { constant: DMatrix::zeros(4, 4), jw: DMatrix::zeros(4, 4) }
    }

    pub fn eval(&self, omega: f64) -> DMatrix<Complex<f64>> {
        DMatrix::from_fn(4, 4, |i, j| Complex::new(self.constant[(i, j)], omega * self.jw[(i, j)]))
    }

    pub fn scale(&self, c: f64) -> Self {
        FrequencyMultiplier { constant: &self.constant * c, jw: &self.jw * c }
    }
}

impl std::ops::Add for &FrequencyMultiplier {
    type Output = FrequencyMultiplier;

    fn add(self, rhs: Self) -> FrequencyMultiplier {
        FrequencyMultiplier { constant: &self.constant + &rhs.constant, jw: &self.jw + &rhs.jw }
    }
}

/// Sector multiplier for both channels with weights `alpha1, alpha2 >= 0`.
pub fn sector_multiplier_ct(alpha1: f64, alpha2: f64, spec: &ProblemSpec) -> Result<FrequencyMultiplier> {
    if !(alpha1 >= 0.0 && alpha2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("sector weights must be >= 0, got {alpha1}, {alpha2}")));
    }
    let k = [spec.f_class().width(), spec.l_bar() - spec.mu_bar()];
    let mut m = FrequencyMultiplier::zero();
    for (i, (alpha, k)) in [alpha1, alpha2].into_iter().zip(k).enumerate() {
        m.constant[(i, i + 2)] = alpha * k;
        m.constant[(i + 2, i)] = alpha * k;
        m.constant[(i + 2, i + 2)] = -2.0 * alpha;
    }
    Ok(m)
}

/// Popov multiplier: `−jω beta_i` in the `(y_i, u_i)` entry and its conjugate.
pub fn popov_multiplier(beta1: f64, beta2: f64) -> FrequencyMultiplier {
    let mut m = FrequencyMultiplier::zero();
    for (i, beta) in [beta1, beta2].into_iter().enumerate() {
        m.jw[(i, i + 2)] = -beta;
        m.jw[(i + 2, i)] = beta;
    }
    m
}
