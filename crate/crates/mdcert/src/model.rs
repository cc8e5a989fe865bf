//! Domain types shared by every stage of the pipeline.
//!
//! Function classes are curvature intervals `S(mu, L)`. A [`ProblemSpec`] ties
//! the objective class, the distance-generating function class and a stepsize
//! together. A [`KronSystem`] holds the small base blocks of a Lur'e system
//! whose realized matrices are `base ⊗ I_d`.

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Curvature interval of a `mu`-strongly convex, `L`-smooth function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionClass {
    mu: f64,
    l: f64,
}

impl FunctionClass {
    pub fn new(mu: f64, l: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= l && l.is_finite()) {
            return Err(Error::InvalidClass { mu, l });
        }
        Ok(FunctionClass { mu, l })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[allow(non_snake_case)]
    pub fn L(&self) -> f64 {
        self.l
    }

    pub fn kappa(&self) -> f64 {
        self.l / self.mu
    }

    /// Width `L - mu` of the shifted sector `[0, L - mu]`.
    pub fn width(&self) -> f64 {
        self.l - self.mu
    }
}

/// Curvature interval of the convex conjugate of a DGF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateClass {
    pub mu_bar: f64,
    pub l_bar: f64,
}

impl ConjugateClass {
    pub fn as_class(&self) -> FunctionClass {
        FunctionClass { mu: self.mu_bar, l: self.l_bar }
    }
}

/// The conjugate of a function in `S(mu, L)` lies in `S(1/L, 1/mu)`.
pub fn conjugate_class(phi: FunctionClass) -> ConjugateClass {
    ConjugateClass { mu_bar: 1.0 / phi.l, l_bar: 1.0 / phi.mu }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Continuous,
    Discrete,
    Projected,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Continuous => "continuous",
            Mode::Discrete => "discrete",
            Mode::Projected => "projected",
        })
    }
}

/// Classes, stepsize and mode of one mirror-descent problem.
///
/// The conjugate class is stored alongside the DGF class so that specs built
/// directly from `(mu_bar, L_bar)` keep those numbers bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    f_class: FunctionClass,
    phi_class: FunctionClass,
    phibar: ConjugateClass,
    eta: f64,
    mode: Mode,
    dim: usize,
}

impl ProblemSpec {
    pub fn new(f_class: FunctionClass, phi_class: FunctionClass, eta: f64, mode: Mode, dim: usize) -> Result<Self> {
        check_eta(eta)?;
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(ProblemSpec { f_class, phi_class, phibar: conjugate_class(phi_class), eta, mode, dim })
    }

    /// Builds a spec from the class of the conjugate `phī` instead of `phi`.
    pub fn from_conjugate(f_class: FunctionClass, phibar: FunctionClass, eta: f64, mode: Mode) -> Result<Self> {
        check_eta(eta)?;
        let phi_class = FunctionClass::new(1.0 / phibar.L(), 1.0 / phibar.mu())?;
        Ok(ProblemSpec {
            f_class,
            phi_class,
            phibar: ConjugateClass { mu_bar: phibar.mu(), l_bar: phibar.L() },
            eta,
            mode,
            dim: 1,
        })
    }

    /// Shorthand for `from_conjugate` with raw numbers.
    pub fn from_constants(mu_f: f64, l_f: f64, mu_bar: f64, l_bar: f64, eta: f64, mode: Mode) -> Result<Self> {
        Self::from_conjugate(FunctionClass::new(mu_f, l_f)?, FunctionClass::new(mu_bar, l_bar)?, eta, mode)
    }

    pub fn f_class(&self) -> FunctionClass {
        self.f_class
    }

    pub fn phi_class(&self) -> FunctionClass {
        self.phi_class
    }

    pub fn phibar(&self) -> ConjugateClass {
        self.phibar
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(ProblemSpec { eta, ..*self })
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        ProblemSpec { mode, ..*self }
    }

    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(ProblemSpec { dim, ..*self })
    }

    pub fn expect_mode(&self, mode: Mode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::ModeMismatch { expected: mode, found: self.mode });
        }
        Ok(())
    }

    pub fn mu_f(&self) -> f64 {
        self.f_class.mu
    }

    pub fn l_f(&self) -> f64 {
        self.f_class.l
    }

    pub fn mu_bar(&self) -> f64 {
        self.phibar.mu_bar
    }

    pub fn l_bar(&self) -> f64 {
        self.phibar.l_bar
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidStepsize(eta));
    }
    Ok(())
}

/// `(L_f / mu_f) * (L_bar / mu_bar)`.
pub fn composite_kappa(spec: &ProblemSpec) -> f64 {
    spec.f_class.kappa() * (spec.phibar.l_bar / spec.phibar.mu_bar)
}

/// Sector `[lo, hi]` of a scalar channel; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub lo: f64,
    pub hi: f64,
}

impl Sector {
    pub fn new(lo: f64, hi: f64) -> Self {
        Sector { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// A zero-width sector means the channel carries an identically zero signal.
    pub fn is_degenerate(&self) -> bool {
        self.width() == 0.0
    }
}

/// Lur'e system stored as scalar base blocks; the realized system is each
/// block Kronecker `I_d`.
///
/// `channel_sectors` has one entry per input. Projected systems carry one
/// more entry for the difference channel, which reads the extra output row.
#[derive(Debug, Clone, PartialEq)]
pub struct KronSystem {
    pub a0: DMatrix<f64>,
    pub b0: DMatrix<f64>,
    pub c0: DMatrix<f64>,
    pub d0: DMatrix<f64>,
    pub dim: usize,
    pub channel_sectors: Vec<Sector>,
    pub mode: Mode,
}

impl KronSystem {
    pub fn new(
        a0: DMatrix<f64>,
        b0: DMatrix<f64>,
        c0: DMatrix<f64>,
        d0: DMatrix<f64>,
        dim: usize,
        channel_sectors: Vec<Sector>,
        mode: Mode,
    ) -> Result<Self> {
        let n = a0.nrows();
        let shape_ok = a0.ncols() == n
            && b0.nrows() == n
            && c0.ncols() == n
            && d0.nrows() == c0.nrows()
            && d0.ncols() == b0.ncols()
            && channel_sectors.len() >= b0.ncols();
        if !shape_ok {
            return Err(Error::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{}, {} sectors",
                a0.nrows(),
                a0.ncols(),
                b0.nrows(),
                b0.ncols(),
                c0.nrows(),
                c0.ncols(),
                d0.nrows(),
                d0.ncols(),
                channel_sectors.len()
            )));
        }
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(KronSystem { a0, b0, c0, d0, dim, channel_sectors, mode })
    }

    pub fn n_states(&self) -> usize {
        self.a0.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b0.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c0.nrows()
    }

    /// Full matrices `(A0 ⊗ I_d, B0 ⊗ I_d, C0 ⊗ I_d, D0 ⊗ I_d)`.
    pub fn realize(&self, d: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let id = DMatrix::<f64>::identity(d, d);
        (self.a0.kronecker(&id), self.b0.kronecker(&id), self.c0.kronecker(&id), self.d0.kronecker(&id))
    }

    /// Base-scale transfer matrix `C0 (sI - A0)^-1 B0 + D0`.
    pub fn transfer(&self, s: Complex<f64>) -> Option<DMatrix<Complex<f64>>> {
        let n = self.n_states();
        let cplx = |m: &DMatrix<f64>| m.map(|v| Complex::new(v, 0.0));
        let resolvent = (DMatrix::<Complex<f64>>::identity(n, n) * s - cplx(&self.a0)).try_inverse()?;
        Some(cplx(&self.c0) * resolvent * cplx(&self.b0) + cplx(&self.d0))
    }

    /// Outputs for a stacked state `x` (length `n·d`) and stacked inputs `u`
    /// (length `m·d`), returned stacked as well.
    pub fn outputs(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        kron_apply(&self.c0, x, self.dim) + kron_apply(&self.d0, u, self.dim)
    }

    /// Next state (DT) or state derivative (CT).
    pub fn advance(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        kron_apply(&self.a0, x, self.dim) + kron_apply(&self.b0, u, self.dim)
    }
}

/// `(M ⊗ I_d) v` without forming the Kronecker product.
pub fn kron_apply(m: &DMatrix<f64>, v: &DVector<f64>, d: usize) -> DVector<f64> {
    assert_eq!(m.ncols() * d, v.len(), "kron_apply: length mismatch");
    let mut out = DVector::zeros(m.nrows() * d);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let c = m[(i, j)];
            if c != 0.0 {
                for k in 0..d {
                    out[i * d + k] += c * v[j * d + k];
                }
            }
        }
    }
    out
}

/// Named decision-coordinate values, in assembly order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Witness {
    entries: Vec<(String, f64)>,
}

impl Witness {
    pub fn new() -> Self {
        Witness::default()
    }

    pub fn set(&mut self, name: &str, value: f64) {
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((name.to_string(), value)),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|e| e.1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Witness { entries: self.entries.iter().map(|(n, v)| (n.clone(), v * c)).collect() }
    }
}

/// Which matrix inequality produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmiKind {
    /// Continuous-time sector plus Popov multipliers.
    ContinuousPopov,
    /// Continuous-time sector multipliers only (`gamma = 0`).
    ContinuousSector,
    /// Discrete-time sector plus weighted off-by-one filters.
    DiscreteOffByOne,
    /// Projected iteration with normal-cone and repeated-channel filters.
    Projected,
}

impl fmt::Display for LmiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LmiKind::ContinuousPopov => "sector+popov",
            LmiKind::ContinuousSector => "sector-only",
            LmiKind::DiscreteOffByOne => "sector+offbyone",
            LmiKind::Projected => "projected",
        })
    }
}

/// Certified rate with the witness that proves it.
///
/// Continuous-time rates are exponents (`rho >= 0`); discrete and projected
/// rates are contraction factors in `(0, 1]`. An uncertified result has
/// `certified == false`, `rho = 0` (CT) or `rho = 1` (DT, projected), and
/// an empty witness.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCertificate {
    pub rho: f64,
    pub certified: bool,
    pub witness: Witness,
    /// Most positive eigenvalue of the assembled inequality at the witness.
    pub margin: f64,
    pub mode: Mode,
    pub lmi: LmiKind,
    /// Stepsize the certificate applies to.
    pub eta: f64,
    /// Free-form description of how the rate was searched.
    pub note: String,
}
