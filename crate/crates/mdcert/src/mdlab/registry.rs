use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::dgf::{DgfPair, QuadraticDgf, SeparableDgf};
use super::functions::{Quadratic, SmoothFunction, SoftplusFamily};
use crate::model::FunctionClass;

/// Named objectives and DGFs.
#[derive(Clone, Default)]
pub struct Registry {
    functions: BTreeMap<String, Arc<dyn SmoothFunction>>,
    dgfs: BTreeMap<String, Arc<dyn DgfPair>>,
}

impl Registry {
    pub fn function(&self, name: &str) -> Option<Arc<dyn SmoothFunction>> {
        self.functions.get(name).cloned()
    }

    pub fn dgf(&self, name: &str) -> Option<Arc<dyn DgfPair>> {
        self.dgfs.get(name).cloned()
    }

    pub fn function_names(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }

    pub fn dgf_names(&self) -> impl Iterator<Item = &str> {
        self.dgfs.keys().map(String::as_str)
    }

    pub fn insert_function(&mut self, name: &str, f: Arc<dyn SmoothFunction>) {
        self.functions.insert(name.to_string(), f);
    }

    pub fn insert_dgf(&mut self, name: &str, d: Arc<dyn DgfPair>) {
        self.dgfs.insert(name.to_string(), d);
    }
}

/// Two-dimensional quadratic with an ill-conditioned Hessian.
pub fn quad_6_3() -> Quadratic {
    Quadratic::new(DMatrix::from_row_slice(2, 2, &[100.0, -1.0, -1.0, 1.0]), DVector::from_vec(vec![1.0, 10.0]))
        .expect("fixed positive definite data")
}

/// Quadratic DGF matched to [`quad_6_3`].
pub fn dgf_6_3() -> QuadraticDgf {
    QuadraticDgf::new(DMatrix::from_row_slice(2, 2, &[10.0, 1.0, 1.0, 1.0])).expect("fixed positive definite data")
}

/// Built-in instances: `quad_6_3`, `softplus_2`, `dgf_6_3`, `identity_2`
/// and `separable_2`.
pub fn registry() -> Registry {
    let mut r = Registry::default();
    r.insert_function("quad_6_3", Arc::new(quad_6_3()));
    let class = FunctionClass::new(1.0, 10.0).expect("valid class");
    let softplus = SoftplusFamily::new(class, DVector::from_vec(vec![0.5, -1.0]), DVector::from_vec(vec![1.0, -2.0]))
        .expect("matching lengths");
    r.insert_function("softplus_2", Arc::new(softplus));
    r.insert_dgf("dgf_6_3", Arc::new(dgf_6_3()));
    r.insert_dgf("identity_2", Arc::new(QuadraticDgf::identity(2)));
    let dclass = FunctionClass::new(0.5, 2.0).expect("valid class");
    r.insert_dgf("separable_2", Arc::new(SeparableDgf::new(dclass, DVector::from_vec(vec![0.0, 1.0]))));
    r
}

/// Random orthogonal matrix from the QR factors of a Gaussian matrix.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Symmetric matrix with eigenvalues `mu`, `L` and the rest uniform between.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, d: usize, class: FunctionClass) -> DMatrix<f64> {
    let q = random_rotation(rng, d);
    let eig = DVector::from_fn(d, |i, _| match i {
        0 => class.mu(),
        1 => class.L(),
        _ => rng.gen_range(class.mu()..=class.L()),
    });
    let m = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Quadratic in `S(mu, L)` with a random rotation and linear term.
pub fn random_quadratic<R: Rng + ?Sized>(rng: &mut R, d: usize, class: FunctionClass) -> Quadratic {
    let f = random_spd(rng, d, class);
    let p = DVector::from_fn(d, |_, _| rng.gen_range(-5.0..5.0));
    Quadratic::with_class(f, p, class)
}

pub fn random_softplus<R: Rng + ?Sized>(rng: &mut R, d: usize, class: FunctionClass) -> SoftplusFamily {
    let shifts = DVector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0));
    let linear = DVector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0));
    SoftplusFamily::new(class, shifts, linear).expect("matching lengths")
}

pub fn random_quadratic_dgf<R: Rng + ?Sized>(rng: &mut R, d: usize, class: FunctionClass) -> QuadraticDgf {
    QuadraticDgf::with_class(random_spd(rng, d, class), class).expect("positive definite by construction")
}

/// Diagonal quadratic DGF, which projected mirror descent needs on simplices.
pub fn random_diagonal_dgf<R: Rng + ?Sized>(rng: &mut R, d: usize, class: FunctionClass) -> QuadraticDgf {
    let mut diag: Vec<f64> = (0..d)
        .map(|i| match i {
            0 => class.mu(),
            1 => class.L(),
            _ => rng.gen_range(class.mu()..=class.L()),
        })
        .collect();
    let perm = rng.gen_range(0..d.max(1));
    diag.rotate_left(perm);
    QuadraticDgf::with_class(DMatrix::from_diagonal(&DVector::from_vec(diag)), class).expect("positive diagonal")
}

pub fn random_separable_dgf<R: Rng + ?Sized>(rng: &mut R, d: usize, class: FunctionClass) -> SeparableDgf {
    SeparableDgf::new(class, DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)))
}
