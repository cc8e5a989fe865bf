use mdcert::mdlab::{
    dgf_6_3, quad_6_3, random_quadratic, random_quadratic_dgf, random_separable_dgf, random_softplus, registry,
    run_proj_md, ConstraintSet, DgfPair, QuadraticDgf, SmoothFunction,
};
use mdcert::model::{conjugate_class, FunctionClass, Mode, ProblemSpec};
use mdcert::reform::{build_ct_lure, build_dt_lure, build_proj_lure, residual_nonlinearity, stack, unstack};
use mdcert::Error;
use nalgebra::{dmatrix, Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(mu_f: f64, l_f: f64, mu_bar: f64, l_bar: f64, eta: f64, mode: Mode) -> ProblemSpec {
    ProblemSpec::from_constants(mu_f, l_f, mu_bar, l_bar, eta, mode).unwrap()
}

#[test]
fn ct_blocks_at_unit_settings() {
    let sys = build_ct_lure(&spec(1.0, 5.0, 1.0, 3.0, 1.0, Mode::Continuous)).unwrap();
    assert_eq!(sys.a0, dmatrix![-1.0]);
    assert_eq!(sys.b0, dmatrix![-1.0, -1.0]);
    assert_eq!(sys.c0, dmatrix![1.0; 1.0]);
    assert_eq!(sys.d0, dmatrix![0.0, 1.0; 0.0, 0.0]);
    assert_eq!(sys.channel_sectors[0].hi, 4.0);
    assert_eq!(sys.channel_sectors[1].hi, 2.0);
}

#[test]
fn builders_check_the_mode() {
    let dt = spec(1.0, 2.0, 1.0, 2.0, 1.0, Mode::Discrete);
    assert!(matches!(build_ct_lure(&dt), Err(Error::ModeMismatch { .. })));
    assert!(matches!(build_proj_lure(&dt), Err(Error::ModeMismatch { .. })));
    assert!(matches!(build_dt_lure(&dt.with_mode(Mode::Continuous)), Err(Error::ModeMismatch { .. })));
}

#[test]
fn vanishing_stepsize_limits() {
    let tiny = 1e-30;
    let sys = build_ct_lure(&spec(1.0, 2.0, 1.0, 2.0, tiny, Mode::Continuous)).unwrap();
    assert!(sys.a0[(0, 0)].abs() < 1e-29);
    assert!(sys.b0.amax() < 1e-29);

    let p = build_proj_lure(&spec(1.0, 2.0, 1.0, 2.0, tiny, Mode::Projected)).unwrap();
    // only the normal-cone input drives the state and the next-step outputs
    assert!((p.b0.clone() - dmatrix![0.0, 0.0, -1.0, 0.0]).amax() < 1e-29);
    assert!((p.d0.row(3) - dmatrix![0.0, 0.0, -1.0, 0.0]).amax() < 1e-29);
}

#[test]
fn dt_open_loop_pole() {
    let kappa: f64 = 9.0;
    let s = kappa.sqrt();
    let eta = 2.0 / (s * s + 1.0);
    let sys = build_dt_lure(&spec(1.0, s, 1.0, s, eta, Mode::Discrete)).unwrap();
    assert!((sys.a0[(0, 0)] - (kappa - 1.0) / (kappa + 1.0)).abs() < 1e-15);

    let deadbeat = build_dt_lure(&spec(1.0, 1.0, 1.0, 1.0, 1.0, Mode::Discrete)).unwrap();
    assert_eq!(deadbeat.a0, dmatrix![0.0]);

    let half = build_dt_lure(&spec(1.0, 2.0, 1.0, 2.0, 0.5, Mode::Discrete)).unwrap();
    assert_eq!(half.a0, dmatrix![0.5]);
    assert_eq!(half.b0, dmatrix![-0.5, -0.5]);
}

#[test]
fn projected_blocks_at_unit_settings() {
    let sys = build_proj_lure(&spec(1.0, 3.0, 1.0, 2.0, 1.0, Mode::Projected)).unwrap();
    assert_eq!(sys.a0, dmatrix![0.0]);
    assert_eq!(sys.b0, dmatrix![-1.0, -1.0, -1.0, 0.0]);
    assert_eq!(sys.c0.rows(0, 4).clone_owned(), dmatrix![1.0; 1.0; 0.0; 0.0]);
    assert_eq!(sys.d0.row(2).clone_owned(), dmatrix![-1.0, -1.0, -1.0, 1.0]);
    assert_eq!(sys.d0.row(3).clone_owned(), dmatrix![-1.0, -1.0, -1.0, 0.0]);
    assert_eq!(sys.n_outputs(), 5);
    assert_eq!(sys.channel_sectors.len(), 5);
    assert!(sys.channel_sectors[2].hi.is_infinite());
    assert_eq!(sys.channel_sectors[4], sys.channel_sectors[1]);
}

#[test]
fn projected_steady_state_repeats_the_conjugate_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let s = spec(
            rng.gen_range(0.1..2.0),
            rng.gen_range(2.0..9.0),
            rng.gen_range(0.1..2.0),
            rng.gen_range(2.0..9.0),
            rng.gen_range(0.01..0.5),
            Mode::Projected,
        );
        let sys = build_proj_lure(&s).unwrap();
        let u = DVector::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
        let a = sys.a0[(0, 0)];
        let z = DVector::from_element(1, (&sys.b0 * &u)[0] / (1.0 - a));
        assert!((sys.advance(&z, &u) - &z).amax() < 1e-12);
        let y = sys.outputs(&z, &u);
        assert!((y[1] - y[3]).abs() < 1e-12);
        assert!(y[4].abs() < 1e-12);
    }
}

#[test]
fn ct_transfer_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (mu_f, mu_bar, eta) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0), rng.gen_range(0.01..3.0));
        let s = spec(mu_f, mu_f * 4.0, mu_bar, mu_bar * 2.0, eta, Mode::Continuous);
        let sys = build_ct_lure(&s).unwrap();
        for _ in 0..20 {
            let sv = Complex::new(rng.gen_range(-0.5..3.0), rng.gen_range(-10.0..10.0));
            let g = sys.transfer(sv).unwrap();
            let scale = Complex::new(1.0, 0.0) / (sv + eta * mu_f * mu_bar);
            let closed = [
                [scale * (-eta * mu_bar), scale * sv],
                [scale * (-eta), scale * (-eta * mu_f)],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    assert!((g[(i, j)] - closed[i][j]).norm() <= 1e-12 * (1.0 + closed[i][j].norm()));
                }
            }
        }
    }
}

#[test]
fn residual_requires_reference() {
    let s = spec(1.0, 2.0, 1.0, 2.0, 1.0, Mode::Discrete);
    let id = |x: &DVector<f64>| x.clone();
    assert!(matches!(residual_nonlinearity(&id, &id, &s, None), Err(Error::MissingReference)));
}

#[test]
fn residual_vanishes_at_origin_and_is_linear_for_quadratics() {
    let (mu, l) = (0.5, 4.0);
    let s = spec(mu, l, 1.0, 1.0, 1.0, Mode::Discrete);
    let grad_f = move |x: &DVector<f64>| x * l;
    let id = |x: &DVector<f64>| x.clone();
    let r = DVector::from_vec(vec![0.3, -1.0]);
    let ch = residual_nonlinearity(&grad_f, &id, &s, Some((r.clone(), r))).unwrap();
    let zero = DVector::zeros(2);
    assert_eq!(ch.delta1(&zero), zero);
    assert_eq!(ch.channel(2, &zero).unwrap(), zero);
    assert!(ch.channel(3, &zero).is_err());
    let x = DVector::from_vec(vec![2.0, -0.7]);
    assert!((ch.delta1(&x) - &x * (l - mu)).amax() < 1e-14);
}

#[test]
fn stack_round_trip() {
    let a = DVector::from_vec(vec![1.0, 2.0]);
    let b = DVector::from_vec(vec![3.0, 4.0]);
    let s = stack(&[&a, &b]);
    assert_eq!(s.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(unstack(&s, 2), vec![a, b]);
}

/// Sector `[0, K]` quadratic constraint for vector maps:
/// `(Δa − Δb)ᵀ (K(a − b) − (Δa − Δb)) ≥ 0`.
fn sector_qc(da: &DVector<f64>, db: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>, k: f64) -> f64 {
    let du = da - db;
    du.dot(&((a - b) * k - &du))
}

fn audit_channels(f: &dyn SmoothFunction, dgf: &dyn DgfPair, rng: &mut ChaCha8Rng, pairs: usize) {
    let d = f.dim();
    let phibar = conjugate_class(dgf.class());
    let s = ProblemSpec::from_conjugate(f.class(), phibar.as_class(), 1.0, Mode::Discrete).unwrap();
    let gf = |x: &DVector<f64>| f.gradient(x);
    let gp = |z: &DVector<f64>| dgf.grad_conjugate(z);
    let x_opt = f.minimizer().unwrap();
    let z_opt = dgf.grad_phi(&x_opt);
    let ch = residual_nonlinearity(&gf, &gp, &s, Some((x_opt, z_opt))).unwrap();
    let (k1, k2) = (s.f_class().width(), s.l_bar() - s.mu_bar());
    for _ in 0..pairs {
        let a = DVector::from_fn(d, |_, _| rng.gen_range(-6.0..6.0));
        let b = DVector::from_fn(d, |_, _| rng.gen_range(-6.0..6.0));
        let scale = (&a - &b).norm_squared();
        let q1 = sector_qc(&ch.delta1(&a), &ch.delta1(&b), &a, &b, k1);
        let q2 = sector_qc(&ch.delta2(&a), &ch.delta2(&b), &a, &b, k2);
        assert!(q1 >= -1e-9 * scale * (1.0 + k1 * k1), "f channel qc {q1}");
        assert!(q2 >= -1e-9 * scale * (1.0 + k2 * k2), "phibar channel qc {q2}");
    }
}

#[test]
fn registered_pairs_stay_in_their_sectors() {
    let reg = registry();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for fname in reg.function_names() {
        for dname in reg.dgf_names() {
            let (f, dgf) = (reg.function(fname).unwrap(), reg.dgf(dname).unwrap());
            audit_channels(f.as_ref(), dgf.as_ref(), &mut rng, 10_000);
        }
    }
}

#[test]
fn random_pairs_stay_in_their_sectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let fc = FunctionClass::new(0.5, 6.0).unwrap();
    let dc = FunctionClass::new(0.8, 3.0).unwrap();
    for _ in 0..5 {
        let q = random_quadratic(&mut rng, 3, fc);
        let sp = random_softplus(&mut rng, 3, fc);
        let qd = random_quadratic_dgf(&mut rng, 3, dc);
        let sd = random_separable_dgf(&mut rng, 3, dc);
        audit_channels(&q, &qd, &mut rng, 2000);
        audit_channels(&sp, &sd, &mut rng, 2000);
    }
}

#[test]
fn softplus_residual_slopes_are_sector_bounded() {
    let reg = registry();
    let f = reg.function("softplus_2").unwrap();
    let id = QuadraticDgf::identity(2);
    let s = ProblemSpec::from_conjugate(f.class(), FunctionClass::new(1.0, 1.0).unwrap(), 1.0, Mode::Discrete).unwrap();
    let gf = |x: &DVector<f64>| f.gradient(x);
    let gp = |z: &DVector<f64>| id.grad_conjugate(z);
    let x_opt = f.minimizer().unwrap();
    let ch = residual_nonlinearity(&gf, &gp, &s, Some((x_opt.clone(), x_opt))).unwrap();
    let k = s.f_class().width();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // separable map: coordinatewise difference quotients
    for _ in 0..10_000 {
        let a = DVector::from_fn(2, |_, _| rng.gen_range(-8.0..8.0));
        let b = DVector::from_fn(2, |_, _| rng.gen_range(-8.0..8.0));
        let (da, db) = (ch.delta1(&a), ch.delta1(&b));
        for i in 0..2 {
            let slope = (da[i] - db[i]) / (a[i] - b[i]);
            assert!((-1e-9..=k + 1e-9).contains(&slope), "slope {slope}");
        }
    }
}

#[test]
fn projected_lure_reproduces_the_projected_recursion() {
    let f = quad_6_3();
    let set = ConstraintSet::Box { lo: DVector::from_vec(vec![-1.0, -5.0]), hi: DVector::from_vec(vec![1.0, 5.0]) };
    for dgf in [dgf_6_3(), QuadraticDgf::new(DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.5]))).unwrap()] {
        let eta = 0.05;
        let traj = run_proj_md(&f, &dgf, &set, &DVector::from_vec(vec![0.5, 4.0]), eta, 3000).unwrap();
        let x_opt = traj.x.last().unwrap().clone();
        let z_opt = dgf.grad_phi(&x_opt);
        let phibar = conjugate_class(dgf.class()).as_class();
        let spec = ProblemSpec::from_conjugate(f.class(), phibar, eta, Mode::Projected).unwrap().with_dim(2).unwrap();
        let sys = build_proj_lure(&spec).unwrap();
        let gf = |x: &DVector<f64>| f.gradient(x);
        let gp = |z: &DVector<f64>| dgf.grad_conjugate(z);
        let ch = residual_nonlinearity(&gf, &gp, &spec, Some((x_opt.clone(), z_opt.clone()))).unwrap();
        let t_opt = -eta * f.gradient(&x_opt);
        for k in 0..60 {
            let (zk, zn) = (&traj.z[k], &traj.z[k + 1]);
            let t_next = zk - eta * f.gradient(&traj.x[k]) - zn;
            let (xi, xi_next) = (zk - &z_opt, zn - &z_opt);
            let u = stack(&[&ch.delta1(&(&traj.x[k] - &x_opt)), &ch.delta2(&xi), &(t_next - &t_opt), &ch.delta2(&xi_next)]);
            assert!((sys.advance(&xi, &u) - &xi_next).amax() <= 1e-10, "state at step {k}");
            let y = unstack(&sys.outputs(&xi, &u), 2);
            assert!((&y[0] - (&traj.x[k] - &x_opt)).amax() <= 1e-10);
            assert!((&y[1] - &xi).amax() <= 1e-10);
            assert!((&y[2] - (&traj.x[k + 1] - &x_opt)).amax() <= 1e-10);
            assert!((&y[3] - &xi_next).amax() <= 1e-10);
            assert!((&y[4] - (&y[1] - &y[3])).amax() <= 1e-10);
        }
    }
}
