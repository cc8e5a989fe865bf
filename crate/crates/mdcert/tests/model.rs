use approx::assert_relative_eq;
use mdcert::mdlab::{dgf_6_3, quad_6_3, DgfPair, SmoothFunction};
use mdcert::model::{composite_kappa, conjugate_class, FunctionClass, KronSystem, Mode, ProblemSpec, Sector};
use mdcert::Error;
use nalgebra::{dmatrix, DMatrix};
use proptest::prelude::*;

#[test]
fn class_rejects_bad_intervals() {
    assert!(matches!(FunctionClass::new(0.0, 1.0), Err(Error::InvalidClass { .. })));
    assert!(matches!(FunctionClass::new(2.0, 1.0), Err(Error::InvalidClass { .. })));
    assert!(FunctionClass::new(1.0, f64::INFINITY).is_err());
    assert!(FunctionClass::new(f64::NAN, 1.0).is_err());
    let c = FunctionClass::new(2.0, 8.0).unwrap();
    assert_eq!(c.kappa(), 4.0);
    assert_eq!(c.width(), 6.0);
}

#[test]
fn conjugate_of_identity_dgf() {
    let c = conjugate_class(FunctionClass::new(1.0, 1.0).unwrap());
    assert_eq!((c.mu_bar, c.l_bar), (1.0, 1.0));
}

#[test]
fn conjugate_is_reciprocal_swap() {
    let c = conjugate_class(FunctionClass::new(0.5, 2.0).unwrap());
    assert_eq!((c.mu_bar, c.l_bar), (0.5, 2.0));
}

#[test]
fn conjugate_of_worked_example_dgf() {
    let c = conjugate_class(dgf_6_3().class());
    assert_relative_eq!(c.mu_bar, 0.09891, max_relative = 5e-5);
    assert_relative_eq!(c.l_bar, 1.1233, max_relative = 5e-5);
}

#[test]
fn composite_kappa_examples() {
    let unit = ProblemSpec::from_constants(1.0, 1.0, 1.0, 1.0, 1.0, Mode::Discrete).unwrap();
    assert_eq!(composite_kappa(&unit), 1.0);

    let s = 34f64.sqrt();
    let fig2 = ProblemSpec::from_constants(1.0, s, 1.0, s, 1.0, Mode::Continuous).unwrap();
    assert_relative_eq!(composite_kappa(&fig2), 34.0, max_relative = 1e-14);

    // product of the four rounded constants of the worked example
    let rounded = (100.0101 / 0.9899) * (1.1233 / 0.09891);
    let spec = ProblemSpec::from_conjugate(quad_6_3().class(), conjugate_class(dgf_6_3().class()).as_class(), 0.1, Mode::Discrete)
        .unwrap();
    assert_relative_eq!(composite_kappa(&spec), rounded, max_relative = 1e-3);
    assert_relative_eq!(composite_kappa(&spec), 1147.3, max_relative = 1e-3);
}

#[test]
fn spec_validation() {
    let f = FunctionClass::new(1.0, 2.0).unwrap();
    assert!(matches!(ProblemSpec::new(f, f, 0.0, Mode::Discrete, 1), Err(Error::InvalidStepsize(_))));
    assert!(matches!(ProblemSpec::new(f, f, -1.0, Mode::Discrete, 1), Err(Error::InvalidStepsize(_))));
    assert!(matches!(ProblemSpec::new(f, f, 1.0, Mode::Discrete, 0), Err(Error::ZeroDimension)));
    let spec = ProblemSpec::new(f, f, 1.0, Mode::Discrete, 3).unwrap();
    assert!(matches!(spec.expect_mode(Mode::Continuous), Err(Error::ModeMismatch { .. })));
    assert_eq!(spec.with_mode(Mode::Projected).mode(), Mode::Projected);
    assert_eq!(spec.with_eta(0.25).unwrap().eta(), 0.25);
    assert_eq!(spec.dim(), 3);
}

#[test]
fn kron_system_rejects_bad_shapes() {
    let s = vec![Sector::new(0.0, 1.0); 2];
    let bad = KronSystem::new(dmatrix![1.0], dmatrix![1.0, 2.0, 3.0], dmatrix![1.0; 1.0], dmatrix![0.0, 0.0; 0.0, 0.0], 1, s.clone(), Mode::Discrete);
    assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
    let zero = KronSystem::new(dmatrix![1.0], dmatrix![1.0, 2.0], dmatrix![1.0; 1.0], dmatrix![0.0, 0.0; 0.0, 0.0], 0, s, Mode::Discrete);
    assert!(matches!(zero, Err(Error::ZeroDimension)));
}

fn random_system(seed: [f64; 9]) -> KronSystem {
    KronSystem::new(
        dmatrix![seed[0]],
        dmatrix![seed[1], seed[2]],
        dmatrix![seed[3]; seed[4]],
        dmatrix![seed[5], seed[6]; seed[7], seed[8]],
        1,
        vec![Sector::new(0.0, 1.0); 2],
        Mode::Discrete,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn conjugate_class_is_an_involution(mu in 1e-3f64..1e3, ratio in 1.0f64..1e3) {
        let c = FunctionClass::new(mu, mu * ratio).unwrap();
        let back = conjugate_class(conjugate_class(c).as_class()).as_class();
        // reciprocal of a reciprocal is exact up to one rounding each way
        prop_assert!((back.mu() - c.mu()).abs() <= 2.0 * f64::EPSILON * c.mu());
        prop_assert!((back.L() - c.L()).abs() <= 2.0 * f64::EPSILON * c.L());
        let cc = conjugate_class(c);
        prop_assert!((cc.mu_bar * c.L() - 1.0).abs() <= f64::EPSILON);
        prop_assert!((cc.l_bar * c.mu() - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn realization_is_kronecker_with_identity(seed in prop::array::uniform9(-5.0f64..5.0)) {
        let sys = random_system(seed);
        for d in 1..=3 {
            let (a, b, c, dd) = sys.realize(d);
            for (full, base) in [(&a, &sys.a0), (&b, &sys.b0), (&c, &sys.c0), (&dd, &sys.d0)] {
                prop_assert_eq!(full.shape(), (base.nrows() * d, base.ncols() * d));
                for i in 0..full.nrows() {
                    for j in 0..full.ncols() {
                        let expect = if i % d == j % d { base[(i / d, j / d)] } else { 0.0 };
                        prop_assert_eq!(full[(i, j)], expect);
                    }
                }
            }
        }
    }

    #[test]
    fn structured_action_matches_dense(seed in prop::array::uniform9(-5.0f64..5.0), v in prop::collection::vec(-3.0f64..3.0, 6)) {
        let sys = random_system(seed).clone();
        let sys = KronSystem { dim: 3, ..sys };
        let (a, b, c, d) = sys.realize(3);
        let x = nalgebra::DVector::from_column_slice(&v[..3]);
        let u = nalgebra::DVector::from_column_slice(&v);
        let dense_y = &c * &x + &d * &u;
        let dense_x = &a * &x + &b * &u;
        prop_assert!((sys.outputs(&x, &u) - dense_y).amax() <= 1e-12);
        prop_assert!((sys.advance(&x, &u) - dense_x).amax() <= 1e-12);
    }
}

#[test]
fn worked_example_classes_from_matrices() {
    let f = quad_6_3();
    assert_relative_eq!(f.class().mu(), 0.9899, max_relative = 5e-5);
    assert_relative_eq!(f.class().L(), 100.0101, max_relative = 5e-7);
    let expected: DMatrix<f64> = dmatrix![100.0, -1.0; -1.0, 1.0];
    assert_eq!(f.f, expected);
}
