//! Matrix inequalities in named scalar decision coordinates.
//!
//! Every certificate in this crate asks for coordinates `x` with
//! `F0 + Σ x_i F_i ⪯ −ε I`. The positivity of the Lyapunov matrix `P` is
//! folded into the same inequality as a trailing diagonal block `−P`, so a
//! single eigenvalue check verifies the whole certificate.

use std::io::{self, Write};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::iqc::{
    off_by_one_filter, projection_filters, repeated_difference_channels, sector_filter, ChannelSelector, IqcFilter,
};
use crate::model::{KronSystem, Mode, ProblemSpec};

pub use crate::model::Witness;

/// Default strictness threshold, on the unit-Frobenius scale used by the solver.
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Free,
    NonNeg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coordinate {
    pub name: String,
    pub sign: Sign,
    /// Optional explicit upper bound.
    pub upper: Option<f64>,
}

/// Labelled diagonal block of the assembled matrix, for dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub label: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrixInequality {
    pub f0: DMatrix<f64>,
    pub basis: Vec<DMatrix<f64>>,
    pub coords: Vec<Coordinate>,
    pub epsilon: f64,
    pub blocks: Vec<Block>,
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.abs().max().max(1.0);
    (m - m.transpose()).abs().max() <= 1e-14 * scale
}

impl AffineMatrixInequality {
    pub fn new(f0: DMatrix<f64>, blocks: Vec<Block>) -> Result<Self> {
        if !f0.is_square() || !is_symmetric(&f0) {
            return Err(Error::InvalidParameter("F0 must be square and symmetric".into()));
        }
        if blocks.iter().map(|b| b.size).sum::<usize>() != f0.nrows() {
            return Err(Error::DimensionMismatch("block sizes do not cover F0".into()));
        }
        Ok(AffineMatrixInequality { f0, basis: Vec::new(), coords: Vec::new(), epsilon: DEFAULT_EPSILON, blocks })
    }

    /// A problem over an unlabelled `n × n` matrix.
    pub fn plain(f0: DMatrix<f64>) -> Result<Self> {
        let n = f0.nrows();
        Self::new(f0, vec![Block { label: "lhs".into(), size: n }])
    }

    pub fn add_coordinate(&mut self, name: &str, sign: Sign, f: DMatrix<f64>) -> Result<()> {
        if f.shape() != self.f0.shape() {
            return Err(Error::DimensionMismatch(format!("basis matrix for `{name}` has the wrong shape")));
        }
        if !is_symmetric(&f) {
            return Err(Error::InvalidParameter(format!("basis matrix for `{name}` is not symmetric")));
        }
        if self.index_of(name).is_some() {
            return Err(Error::InvalidParameter(format!("duplicate coordinate `{name}`")));
        }
        self.coords.push(Coordinate { name: name.to_string(), sign, upper: None });
        self.basis.push(f);
        Ok(())
    }

    pub fn with_upper(mut self, name: &str, upper: f64) -> Result<Self> {
        let i = self.index_of(name).ok_or_else(|| Error::MissingCoordinate(name.into()))?;
        self.coords[i].upper = Some(upper);
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.f0.nrows()
    }

    pub fn n_coords(&self) -> usize {
        self.coords.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.coords.iter().map(|c| c.name.as_str())
    }

    pub fn is_homogeneous(&self) -> bool {
        self.f0.iter().all(|&v| v == 0.0)
    }

    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        assert_eq!(x.len(), self.basis.len(), "coordinate count mismatch");
        let mut m = self.f0.clone();
        for (xi, f) in x.iter().zip(&self.basis) {
            if *xi != 0.0 {
                m += f * *xi;
            }
        }
        m
    }

    /// Coordinate vector of a witness, in assembly order.
    pub fn coordinates_of(&self, w: &Witness) -> Result<Vec<f64>> {
        for (name, _) in w.iter() {
            if self.index_of(name).is_none() {
                return Err(Error::UnknownCoordinate(name.into()));
            }
        }
        self.coords
            .iter()
            .map(|c| w.get(&c.name).ok_or_else(|| Error::MissingCoordinate(c.name.clone())))
            .collect()
    }

    pub fn witness_from(&self, x: &[f64]) -> Witness {
        let mut w = Witness::new();
        for (c, v) in self.coords.iter().zip(x) {
            w.set(&c.name, *v);
        }
        w
    }

    /// Fixes coordinate `name` to `value`, folding it into `F0`.
    pub fn pin(&self, name: &str, value: f64) -> Result<Self> {
        let i = self.index_of(name).ok_or_else(|| Error::MissingCoordinate(name.into()))?;
        let mut out = self.clone();
        let f = out.basis.remove(i);
        out.coords.remove(i);
        out.f0 += f * value;
        Ok(out)
    }

    /// Removes rows and columns `idx` from every matrix, adjusting block sizes.
    fn drop_rows(&mut self, idx: &[usize]) {
        let keep: Vec<usize> = (0..self.size()).filter(|i| !idx.contains(i)).collect();
        let sub = |m: &DMatrix<f64>| DMatrix::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])]);
        for m in std::iter::once(&mut self.f0).chain(self.basis.iter_mut()) {
            *m = sub(m);
        }
        let mut start = 0;
        for b in &mut self.blocks {
            let removed = idx.iter().filter(|&&i| i >= start && i < start + b.size).count();
            start += b.size;
            b.size -= removed;
        }
        self.blocks.retain(|b| b.size > 0);
    }

    /// Plain-text listing: one header line per coordinate followed by the
    /// matrix rows in full precision.
    pub fn dump(&self, out: &mut dyn Write) -> io::Result<()> {
        let blocks: Vec<String> = self.blocks.iter().map(|b| format!("{}:{}", b.label, b.size)).collect();
        writeln!(out, "# size {} blocks {} epsilon {:e}", self.size(), blocks.join(","), self.epsilon)?;
        write_matrix(out, "F0", &self.f0)?;
        for (c, f) in self.coords.iter().zip(&self.basis) {
            let sign = match c.sign {
                Sign::Free => "free",
                Sign::NonNeg => "nonneg",
            };
            write_matrix(out, &format!("{} {}", c.name, sign), f)?;
        }
        Ok(())
    }
}

fn write_matrix(out: &mut dyn Write, header: &str, m: &DMatrix<f64>) -> io::Result<()> {
    writeln!(out, "[{header}]")?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

/// Checks signs and returns the largest eigenvalue of `F0 + Σ w_i F_i`.
/// A negative margin certifies the inequality, `P ≻ 0` included.
pub fn verify_witness(lmi: &AffineMatrixInequality, w: &Witness) -> Result<f64> {
    let x = lmi.coordinates_of(w)?;
    for (c, v) in lmi.coords.iter().zip(&x) {
        if !v.is_finite() || (c.sign == Sign::NonNeg && *v < 0.0) || c.upper.is_some_and(|u| *v > u) {
            return Err(Error::SignViolation { name: c.name.clone(), value: *v });
        }
    }
    Ok(max_eigenvalue(&lmi.evaluate(&x)))
}

fn p_name(i: usize, j: usize, n: usize) -> String {
    if n == 1 {
        "p".into()
    } else {
        format!("P[{i},{j}]")
    }
}

/// Symmetric unit basis `E_ij` of `n × n` matrices, upper triangle order.
fn symmetric_units(n: usize) -> Vec<(usize, usize, DMatrix<f64>)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            out.push((i, j, e));
        }
    }
    out
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

fn active_inputs(system: &KronSystem) -> Vec<usize> {
    (0..system.n_inputs()).filter(|&i| !system.channel_sectors[i].is_degenerate()).collect()
}

fn select_cols(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

fn check_rate(rho: f64, mode: Mode) -> Result<()> {
    let ok = match mode {
        Mode::Continuous => rho >= 0.0 && rho.is_finite(),
        Mode::Discrete | Mode::Projected => rho > 0.0 && rho <= 1.0,
    };
    if !ok {
        return Err(Error::InvalidParameter(format!("rate {rho} outside the {mode} range")));
    }
    Ok(())
}

fn expect_system(system: &KronSystem, mode: Mode) -> Result<()> {
    if system.mode != mode {
        return Err(Error::ModeMismatch { expected: mode, found: system.mode });
    }
    Ok(())
}

/// Continuous-time inequality with sector weights `Q = diag(q)` and Popov
/// weights `Γ = diag(gamma)`:
///
/// `[[PÃ + ÃᵀP, PB̃ − C̃ᵀ], [B̃ᵀP − C̃, −(D̃ + D̃ᵀ)]] ⪯ 0`, with
/// `Ã = A + ρI`, `B̃ = −B`, `C̃ = (Q + 2ρΓ)C + ΓCA`, `D̃ = −QD + QK⁻¹ − ΓCB`.
///
/// Popov weights exist only for channels whose output has no direct
/// feedthrough. For mirror descent that is the conjugate channel, named
/// `gamma`; any other is named `gamma<i>` by input number. Channels with a
/// zero-width sector carry no signal and are removed together with their
/// weights.
pub fn assemble_ct_lmi(system: &KronSystem, rho: f64) -> Result<AffineMatrixInequality> {
    expect_system(system, Mode::Continuous)?;
    check_rate(rho, Mode::Continuous)?;
    let act = active_inputs(system);
    let n = system.n_states();
    let m = act.len();
    let a = &system.a0;
    let b = select_cols(&system.b0, &act);
    let c = DMatrix::from_fn(m, n, |i, j| system.c0[(act[i], j)]);
    let d = DMatrix::from_fn(m, m, |i, j| system.d0[(act[i], act[j])]);
    let kinv: Vec<f64> = act.iter().map(|&i| 1.0 / system.channel_sectors[i].width()).collect();
    let popov: Vec<usize> = (0..m).filter(|&i| d.row(i).iter().all(|&v| v == 0.0)).collect();

    let main = |p: &DMatrix<f64>, q: &[f64], g: &[f64]| -> DMatrix<f64> {
        let at = a + DMatrix::identity(n, n) * rho;
        let bt = -&b;
        let qm = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(q));
        let gm = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(g));
        let kinv_m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&kinv));
        let ct = (&qm + &gm * (2.0 * rho)) * &c + &gm * &c * a;
        let dt = -(&qm * &d) + &qm * &kinv_m - &gm * &c * &b;
        let mut out = DMatrix::zeros(n + m, n + m);
        out.view_mut((0, 0), (n, n)).copy_from(&(p * &at + at.transpose() * p));
        let off = p * &bt - ct.transpose();
        out.view_mut((0, n), (n, m)).copy_from(&off);
        out.view_mut((n, 0), (m, n)).copy_from(&off.transpose());
        out.view_mut((n, n), (m, m)).copy_from(&(-(&dt + dt.transpose())));
        out
    };

    let blocks = vec![
        Block { label: "lyapunov".into(), size: n + m },
        Block { label: "P".into(), size: n },
    ];
    let mut lmi = AffineMatrixInequality::new(DMatrix::zeros(2 * n + m, 2 * n + m), blocks)?;
    let zq = vec![0.0; m];
    for (i, j, e) in symmetric_units(n) {
        lmi.add_coordinate(&p_name(i, j, n), Sign::Free, block_diag(&main(&e, &zq, &zq), &-&e))?;
    }
    let zp = DMatrix::zeros(n, n);
    let pad = |f: DMatrix<f64>| block_diag(&f, &DMatrix::zeros(n, n));
    for k in 0..m {
        let mut q = zq.clone();
        q[k] = 1.0;
        lmi.add_coordinate(&format!("q{}", act[k] + 1), Sign::NonNeg, pad(main(&zp, &q, &zq)))?;
    }
    for &k in &popov {
        let mut g = zq.clone();
        g[k] = 1.0;
        let name = if act[k] == 1 { "gamma".to_string() } else { format!("gamma{}", act[k] + 1) };
        lmi.add_coordinate(&name, Sign::NonNeg, pad(main(&zp, &zq, &g)))?;
    }
    Ok(lmi)
}

/// The same continuous-time inequality written out entry by entry for the
/// one-state mirror-descent loop, over `(p, q1, q2, gamma)`. Rows are
/// ordered `(z, u1, u2)`:
///
/// ```text
/// [ 2(ρ − η μf μ̄) p        ·                   ·                 ]
/// [ η p − q1 μ̄             −2 q1 / k1           ·                 ]
/// [ η μf p − q2 − 2ργ      q1 − ηγ             −2(q2/k2 + ηγ μf) ]
/// [   + ηγ μf μ̄                                                   ]
/// ```
pub fn assemble_ct_scalar_lmi(spec: &ProblemSpec, rho: f64) -> Result<AffineMatrixInequality> {
    spec.expect_mode(Mode::Continuous)?;
    check_rate(rho, Mode::Continuous)?;
    let (eta, mu_f, mu_bar) = (spec.eta(), spec.mu_f(), spec.mu_bar());
    let k1 = spec.f_class().width();
    let k2 = spec.l_bar() - mu_bar;
    let sym = |entries: &[((usize, usize), f64)]| {
        let mut m = DMatrix::zeros(4, 4);
        for &((i, j), v) in entries {
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v;
            }
        }
        m
    };
    let inv = |k: f64| if k > 0.0 { 1.0 / k } else { 0.0 };
    let blocks = vec![Block { label: "lyapunov".into(), size: 3 }, Block { label: "P".into(), size: 1 }];
    let mut lmi = AffineMatrixInequality::new(DMatrix::zeros(4, 4), blocks)?;
    let p = sym(&[((0, 0), 2.0 * (rho - eta * mu_f * mu_bar)), ((1, 0), eta), ((2, 0), eta * mu_f), ((3, 3), -1.0)]);
    lmi.add_coordinate("p", Sign::Free, p)?;
    lmi.add_coordinate("q1", Sign::NonNeg, sym(&[((1, 0), -mu_bar), ((1, 1), -2.0 * inv(k1)), ((2, 1), 1.0)]))?;
    lmi.add_coordinate("q2", Sign::NonNeg, sym(&[((2, 0), -1.0), ((2, 2), -2.0 * inv(k2))]))?;
    let gamma = sym(&[((2, 0), -2.0 * rho + eta * mu_f * mu_bar), ((2, 1), -eta), ((2, 2), -2.0 * eta * mu_f)]);
    lmi.add_coordinate("gamma", Sign::NonNeg, gamma)?;
    let mut dropped = Vec::new();
    if k2 == 0.0 {
        lmi = lmi.pin("q2", 0.0)?.pin("gamma", 0.0)?;
        dropped.push(2);
    }
    if k1 == 0.0 {
        lmi = lmi.pin("q1", 0.0)?;
        dropped.push(1);
    }
    lmi.drop_rows(&dropped);
    Ok(lmi)
}

/// One IQC attached to the plant: a filter fed by selected outputs and inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct IqcChannel {
    pub label: String,
    pub selector: ChannelSelector,
    pub filter: IqcFilter,
}

/// Plant augmented with filter states.
///
/// The state is the plant state followed by each stateful filter's state
/// in channel order. `c[i]`, `d[i]` give channel `i`'s `ζ` as a function of
/// the augmented state and the active inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct HattedRealization {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: Vec<DMatrix<f64>>,
    pub d: Vec<DMatrix<f64>>,
    pub m: Vec<DMatrix<f64>>,
    pub labels: Vec<String>,
    /// Sizes of the diagonal blocks of `a`: plant first, then filters.
    pub state_blocks: Vec<usize>,
    /// Indices of the plant inputs kept in `b` and `d`.
    pub inputs: Vec<usize>,
}

pub fn hatted_realization(
    system: &KronSystem,
    inputs: &[usize],
    channels: &[IqcChannel],
) -> Result<HattedRealization> {
    let n = system.n_states();
    let b = select_cols(&system.b0, inputs);
    let d = select_cols(&system.d0, inputs);
    for ch in channels {
        if ch.selector.output.len() != system.n_outputs() || ch.selector.input.len() != system.n_inputs() {
            return Err(Error::DimensionMismatch(format!("selector of `{}` does not match the plant", ch.label)));
        }
        let f = &ch.filter;
        let k = f.n_states();
        if f.b_y.shape() != (k, 1) || f.b_u.shape() != (k, 1) || f.c.shape() != (2, k) || f.d_y.shape() != (2, 1) {
            return Err(Error::DimensionMismatch(format!("filter of `{}` is not a scalar-channel filter", ch.label)));
        }
        if ch.selector.input.iter().enumerate().any(|(i, &v)| v != 0.0 && !inputs.contains(&i)) {
            return Err(Error::DimensionMismatch(format!("channel `{}` reads a removed input", ch.label)));
        }
    }
    let nf: usize = channels.iter().map(|c| c.filter.n_states()).sum();
    let ntot = n + nf;
    let m = inputs.len();
    let mut a_hat = DMatrix::zeros(ntot, ntot);
    let mut b_hat = DMatrix::zeros(ntot, m);
    a_hat.view_mut((0, 0), (n, n)).copy_from(&system.a0);
    b_hat.view_mut((0, 0), (n, m)).copy_from(&b);
    let mut cs = Vec::new();
    let mut ds = Vec::new();
    let mut state_blocks = vec![n];
    let mut offset = n;
    for ch in channels {
        let f = &ch.filter;
        let k = f.n_states();
        let sy_c = ch.selector.output.transpose() * &system.c0;
        let sy_d = ch.selector.output.transpose() * &d;
        let su = DMatrix::from_fn(1, m, |_, j| ch.selector.input[inputs[j]]);
        if k > 0 {
            a_hat.view_mut((offset, 0), (k, n)).copy_from(&(&f.b_y * &sy_c));
            a_hat.view_mut((offset, offset), (k, k)).copy_from(&f.a);
            b_hat.view_mut((offset, 0), (k, m)).copy_from(&(&f.b_y * &sy_d + &f.b_u * &su));
        }
        let mut c_hat = DMatrix::zeros(2, ntot);
        c_hat.view_mut((0, 0), (2, n)).copy_from(&(&f.d_y * &sy_c));
        if k > 0 {
            c_hat.view_mut((0, offset), (2, k)).copy_from(&f.c);
            state_blocks.push(k);
        }
        cs.push(c_hat);
        ds.push(&f.d_y * &sy_d + &f.d_u * &su);
        offset += k;
    }
    Ok(HattedRealization {
        a: a_hat,
        b: b_hat,
        c: cs,
        d: ds,
        m: channels.iter().map(|c| c.filter.m.clone()).collect(),
        labels: channels.iter().map(|c| c.label.clone()).collect(),
        state_blocks,
        inputs: inputs.to_vec(),
    })
}

/// `[[ÂᵀPÂ − ρ²P, ÂᵀPB̂], [B̂ᵀPÂ, B̂ᵀPB̂]] + Σ α_i [Ĉ_i D̂_i]ᵀ M_i [Ĉ_i D̂_i] ⪯ 0`
/// over the entries of `P` and the weights `alpha1, alpha2, …`.
pub fn assemble_hatted_lmi(real: &HattedRealization, rho: f64) -> Result<AffineMatrixInequality> {
    let n = real.a.nrows();
    let m = real.b.ncols();
    let ab = {
        let mut ab = DMatrix::zeros(n, n + m);
        ab.view_mut((0, 0), (n, n)).copy_from(&real.a);
        ab.view_mut((0, n), (n, m)).copy_from(&real.b);
        ab
    };
    let blocks = vec![
        Block { label: "dissipation".into(), size: n + m },
        Block { label: "P".into(), size: n },
    ];
    let mut lmi = AffineMatrixInequality::new(DMatrix::zeros(2 * n + m, 2 * n + m), blocks)?;
    for (i, j, e) in symmetric_units(n) {
        let mut main = ab.transpose() * &e * &ab;
        let decay = &e * (rho * rho);
        let mut tl = main.view_mut((0, 0), (n, n));
        tl -= &decay;
        lmi.add_coordinate(&p_name(i, j, n), Sign::Free, block_diag(&main, &-&e))?;
    }
    for (k, ((c, d), mm)) in real.c.iter().zip(&real.d).zip(&real.m).enumerate() {
        let mut cd = DMatrix::zeros(2, n + m);
        cd.view_mut((0, 0), (2, n)).copy_from(c);
        cd.view_mut((0, n), (2, m)).copy_from(d);
        let form = cd.transpose() * mm * &cd;
        lmi.add_coordinate(&format!("alpha{}", k + 1), Sign::NonNeg, block_diag(&form, &DMatrix::zeros(n, n)))?;
    }
    Ok(lmi)
}

fn gradient_channels(system: &KronSystem, inputs: &[usize], rho: f64) -> Result<Vec<IqcChannel>> {
    let names = ["f", "phibar", "normal-cone", "phibar+"];
    let mut out = Vec::new();
    for &i in inputs {
        let sel = ChannelSelector::unit(i, system.n_outputs(), system.n_inputs());
        let sector = system.channel_sectors[i];
        let (s, w) = if sector.hi.is_infinite() {
            projection_filters(rho)?
        } else {
            (sector_filter(sector.width())?, off_by_one_filter(sector.width(), rho)?)
        };
        for f in [s, w] {
            out.push(IqcChannel { label: format!("{} {}", names[i], f.label), selector: sel.clone(), filter: f });
        }
    }
    Ok(out)
}

/// Discrete-time inequality with a sector and a weighted off-by-one filter
/// on each gradient channel (`rho_bar = rho`).
pub fn assemble_dt_lmi(system: &KronSystem, rho: f64) -> Result<AffineMatrixInequality> {
    expect_system(system, Mode::Discrete)?;
    check_rate(rho, Mode::Discrete)?;
    let inputs = active_inputs(system);
    let chans = gradient_channels(system, &inputs, rho)?;
    assemble_hatted_lmi(&hatted_realization(system, &inputs, &chans)?, rho)
}

/// Augmented realization of the projected loop: sector and off-by-one
/// filters on the four inputs and on the difference channel.
pub fn proj_realization(system: &KronSystem, rho: f64) -> Result<HattedRealization> {
    expect_system(system, Mode::Projected)?;
    let inputs = active_inputs(system);
    let mut chans = gradient_channels(system, &inputs, rho)?;
    let diff = system.channel_sectors[4];
    if !diff.is_degenerate() {
        let sel = repeated_difference_channels(system)?;
        for f in [sector_filter(diff.width())?, off_by_one_filter(diff.width(), rho)?] {
            chans.push(IqcChannel { label: format!("difference {}", f.label), selector: sel.clone(), filter: f });
        }
    }
    hatted_realization(system, &inputs, &chans)
}

/// Projected-iteration inequality over `P` and `alpha1..alpha10`.
pub fn assemble_proj_lmi(system: &KronSystem, rho: f64) -> Result<AffineMatrixInequality> {
    check_rate(rho, Mode::Projected)?;
    assemble_hatted_lmi(&proj_realization(system, rho)?, rho)
}
