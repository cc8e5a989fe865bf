use mdcert::iqc::{
    off_by_one_filter, popov_multiplier, projection_filters, repeated_difference_channels, sector_filter,
    sector_multiplier_ct, sector_qc_matrix, IqcFilter,
};
use mdcert::mdlab::{dgf_6_3, quad_6_3, registry, run_proj_md, ConstraintSet, DgfPair, SmoothFunction};
use mdcert::model::{conjugate_class, Mode, ProblemSpec};
use mdcert::reform::{build_dt_lure, build_proj_lure, residual_nonlinearity};
use nalgebra::{dmatrix, DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn sector_qc_examples() {
    assert_eq!(sector_qc_matrix(0.0, 3.0).unwrap(), dmatrix![0.0, 3.0; 3.0, -2.0]);
    assert_eq!(sector_qc_matrix(1.0, 1.0).unwrap(), dmatrix![-2.0, 2.0; 2.0, -2.0]);
    assert!(sector_qc_matrix(2.0, 1.0).is_err());
}

#[test]
fn sector_qc_holds_for_registered_gradients() {
    let reg = registry();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for name in reg.function_names() {
        let f = reg.function(name).unwrap();
        let (mu, l) = (f.class().mu(), f.class().L());
        let q = sector_qc_matrix(mu, l).unwrap();
        for _ in 0..10_000 {
            let a = DVector::from_fn(f.dim(), |_, _| rng.gen_range(-10.0..10.0));
            let b = DVector::from_fn(f.dim(), |_, _| rng.gen_range(-10.0..10.0));
            let (y, u) = (&a - &b, f.gradient(&a) - f.gradient(&b));
            let v = q[(0, 0)] * y.dot(&y) + 2.0 * q[(0, 1)] * y.dot(&u) + q[(1, 1)] * u.dot(&u);
            assert!(v >= -1e-9 * (1.0 + l * l) * y.norm_squared(), "{name}: {v}");
        }
    }
}

fn spec() -> ProblemSpec {
    ProblemSpec::from_constants(1.0, 4.0, 0.5, 2.5, 0.7, Mode::Continuous).unwrap()
}

#[test]
fn sector_multiplier_examples() {
    let s = spec();
    let zero = sector_multiplier_ct(0.0, 0.0, &s).unwrap();
    assert_eq!(zero.constant, DMatrix::zeros(4, 4));
    let one = sector_multiplier_ct(1.0, 0.0, &s).unwrap();
    assert_eq!(one.constant[(0, 2)], 3.0);
    assert_eq!(one.constant[(2, 0)], 3.0);
    assert_eq!(one.constant[(2, 2)], -2.0);
    assert_eq!(one.constant[(3, 3)], 0.0);
    assert_eq!(one.constant[(1, 3)], 0.0);
    assert!(sector_multiplier_ct(-1.0, 0.0, &s).is_err());
}

#[test]
fn popov_examples() {
    let zero = popov_multiplier(0.0, 0.0);
    assert_eq!(zero.jw, DMatrix::zeros(4, 4));
    let p = popov_multiplier(0.0, 3.0).eval(2.5);
    assert_eq!(p, p.adjoint());
    assert_eq!(p[(1, 3)].im, -7.5);
}

#[test]
fn combined_multiplier_entries() {
    let s = spec();
    let (a1, a2, b1, b2) = (0.4, 1.3, 0.2, 0.9);
    let w = 1.7;
    let pi = (&sector_multiplier_ct(a1, a2, &s).unwrap() + &popov_multiplier(b1, b2)).eval(w);
    let (k1, k2) = (3.0, 2.0);
    // α_i K_i − β_i jω above the diagonal, −2 α_i on the input diagonal
    assert!((pi[(0, 2)].re - a1 * k1).abs() < 1e-15 && (pi[(0, 2)].im + b1 * w).abs() < 1e-15);
    assert!((pi[(1, 3)].re - a2 * k2).abs() < 1e-15 && (pi[(1, 3)].im + b2 * w).abs() < 1e-15);
    assert!((pi[(2, 0)] - pi[(0, 2)].conj()).norm() < 1e-15);
    assert_eq!(pi[(2, 2)].re, -2.0 * a1);
    assert_eq!(pi[(3, 3)].re, -2.0 * a2);
    assert_eq!(pi[(0, 0)].norm() + pi[(1, 1)].norm() + pi[(0, 1)].norm(), 0.0);
}

proptest! {
    #[test]
    fn sector_multiplier_is_linear(a in 0.0f64..5.0, b in 0.0f64..5.0, c in 0.0f64..5.0, d in 0.0f64..5.0) {
        let s = spec();
        let sum = &sector_multiplier_ct(a, b, &s).unwrap() + &sector_multiplier_ct(c, d, &s).unwrap();
        let joint = sector_multiplier_ct(a + c, b + d, &s).unwrap();
        prop_assert!((sum.constant - joint.constant).amax() <= 1e-12);
        let scaled = sector_multiplier_ct(a, b, &s).unwrap().scale(c);
        prop_assert!((scaled.constant - sector_multiplier_ct(a * c, b * c, &s).unwrap().constant).amax() <= 1e-12);
    }

    #[test]
    fn popov_part_is_purely_imaginary(b1 in -5.0f64..5.0, b2 in -5.0f64..5.0, w in -50.0f64..50.0) {
        let p = popov_multiplier(b1, b2).eval(w);
        prop_assert!(p.iter().all(|z| z.re == 0.0));
        prop_assert_eq!(p.clone(), p.adjoint());
    }

    #[test]
    fn sector_filter_matches_sector_qc(k in 0.0f64..10.0, y in -5.0f64..5.0, u in -5.0f64..5.0) {
        let f = sector_filter(k).unwrap();
        let z = f.zeta(&[DVector::from_element(1, y)], &[DVector::from_element(1, u)]);
        let form = z[0].dot(&(&f.m * &z[0]));
        let q = sector_qc_matrix(0.0, k).unwrap();
        let qv = q[(0, 0)] * y * y + 2.0 * q[(0, 1)] * y * u + q[(1, 1)] * u * u;
        prop_assert!((form - qv).abs() <= 1e-12 * (1.0 + qv.abs()));
    }

    #[test]
    fn sector_filter_is_nonnegative_inside_the_sector(k in 0.0f64..10.0, y in -5.0f64..5.0, t in 0.0f64..1.0) {
        let u = t * k * y;
        prop_assert!((k * y - u) * u >= -1e-12);
    }
}

#[test]
fn degenerate_sector_forces_zero_input() {
    let f = sector_filter(0.0).unwrap();
    for u in [-2.0, 0.5, 3.0] {
        let z = f.zeta(&[DVector::from_element(1, 1.0)], &[DVector::from_element(1, u)]);
        assert_eq!(z[0].dot(&(&f.m * &z[0])), -2.0 * u * u);
    }
}

#[test]
fn filter_shapes_and_errors() {
    let s = sector_filter(2.0).unwrap();
    assert_eq!(s.n_states(), 0);
    assert!(sector_filter(-1.0).is_err());
    assert!(off_by_one_filter(-1.0, 0.5).is_err());
    assert!(off_by_one_filter(1.0, -0.5).is_err());
    let w = off_by_one_filter(3.0, 0.8).unwrap();
    assert_eq!((w.a.clone(), w.b_y.clone(), w.b_u.clone()), (dmatrix![0.0], dmatrix![-3.0], dmatrix![1.0]));
    assert!((w.c.clone() - dmatrix![0.64; 0.0]).amax() < 1e-15);
    assert_eq!((w.d_y.clone(), w.d_u.clone()), (dmatrix![3.0; 0.0], dmatrix![-1.0; 1.0]));
    assert_eq!(w.m, dmatrix![0.0, 1.0; 1.0, 0.0]);
    let zero = off_by_one_filter(3.0, 0.0).unwrap();
    assert_eq!(zero.c, DMatrix::zeros(2, 1));
}

#[test]
fn projection_filter_realization() {
    let (s, w) = projection_filters(0.9).unwrap();
    assert_eq!(s.n_states(), 0);
    assert_eq!((s.d_y.clone(), s.d_u.clone()), (dmatrix![0.0; 1.0], dmatrix![1.0; 0.0]));
    assert_eq!((w.a.clone(), w.b_y.clone(), w.b_u.clone()), (dmatrix![0.0], dmatrix![-1.0], dmatrix![0.0]));
    assert!((w.c.clone() - dmatrix![0.0; 0.81]).amax() < 1e-15);
    assert_eq!((w.d_y.clone(), w.d_u.clone()), (dmatrix![0.0; 1.0], dmatrix![1.0; 0.0]));
    assert!(projection_filters(-0.1).is_err());
}

/// `u = K [c y + (1 − c)(tanh(y − t) + tanh(t))]`: slope in `[0, K]`, zero at the origin.
fn slope_restricted(k: f64, c: f64, t: f64) -> impl Fn(f64) -> f64 {
    move |y: f64| k * (c * y + (1.0 - c) * ((y - t).tanh() + t.tanh()))
}

fn min_partial_sum_ratio(filter: &IqcFilter, rho: f64, ys: &[DVector<f64>], us: &[DVector<f64>]) -> f64 {
    let sums = filter.partial_sums(rho, ys, us);
    let zs = filter.zeta(ys, us);
    // scale by the accumulated magnitude of the terms
    let mut w = 1.0;
    let mut mag = 0.0;
    sums.iter()
        .zip(&zs)
        .map(|(s, z)| {
            mag += w * z.norm_squared();
            w /= rho * rho;
            s / mag.max(f64::MIN_POSITIVE)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn off_by_one_sum_is_nonnegative_for_slope_restricted_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let k = rng.gen_range(0.1..10.0);
        let phi = slope_restricted(k, rng.gen_range(0.0..1.0), rng.gen_range(-2.0..2.0));
        let ys: Vec<DVector<f64>> = (0..200).map(|_| DVector::from_element(1, rng.gen_range(-4.0..4.0))).collect();
        let us: Vec<DVector<f64>> = ys.iter().map(|y| DVector::from_element(1, phi(y[0]))).collect();
        for rho in [1.0, 0.97] {
            let f = off_by_one_filter(k, rho).unwrap();
            assert!(min_partial_sum_ratio(&f, rho, &ys, &us) >= -1e-9);
        }
        let s = sector_filter(k).unwrap();
        assert!(min_partial_sum_ratio(&s, 0.97, &ys, &us) >= -1e-9);
    }
}

#[test]
fn every_filter_holds_along_true_mirror_descent_signals() {
    // 50 random quadratic/softplus instances; feed the residual channels of
    // an actual run through each gradient-channel filter
    use mdcert::mdlab::{random_quadratic, random_quadratic_dgf, random_softplus, run_dt_md};
    use mdcert::model::FunctionClass;
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let fc = FunctionClass::new(1.0, 8.0).unwrap();
    let dc = FunctionClass::new(0.5, 2.0).unwrap();
    for i in 0..50 {
        let f: Box<dyn SmoothFunction> =
            if i % 2 == 0 { Box::new(random_quadratic(&mut rng, 3, fc)) } else { Box::new(random_softplus(&mut rng, 3, fc)) };
        let dgf = random_quadratic_dgf(&mut rng, 3, dc);
        let spec = ProblemSpec::from_conjugate(fc, conjugate_class(dc).as_class(), 0.2, Mode::Discrete).unwrap();
        let z0 = DVector::from_fn(3, |_, _| rng.gen_range(-5.0..5.0));
        let traj = run_dt_md(f.as_ref(), &dgf, &z0, spec.eta(), 199).unwrap();
        let x_opt = f.minimizer().unwrap();
        let z_opt = dgf.grad_phi(&x_opt);
        let gf = |x: &DVector<f64>| f.gradient(x);
        let gp = |z: &DVector<f64>| dgf.grad_conjugate(z);
        let ch = residual_nonlinearity(&gf, &gp, &spec, Some((x_opt.clone(), z_opt.clone()))).unwrap();
        let sys = build_dt_lure(&spec).unwrap();
        let y1: Vec<_> = traj.x.iter().map(|x| x - &x_opt).collect();
        let y2: Vec<_> = traj.z.iter().map(|z| z - &z_opt).collect();
        let u1: Vec<_> = y1.iter().map(|y| ch.delta1(y)).collect();
        let u2: Vec<_> = y2.iter().map(|y| ch.delta2(y)).collect();
        for (c, (ys, us)) in [(&y1, &u1), (&y2, &u2)].into_iter().enumerate() {
            let k = sys.channel_sectors[c].width();
            for rho in [1.0, 0.95] {
                for filt in [sector_filter(k).unwrap(), off_by_one_filter(k, rho).unwrap()] {
                    let r = min_partial_sum_ratio(&filt, rho, ys, us);
                    assert!(r >= -1e-9, "instance {i}, channel {c}, {}: {r}", filt.label);
                }
            }
        }
    }
}

#[test]
fn normal_cone_filters_hold_on_box_trajectories() {
    let f = quad_6_3();
    let dgf = dgf_6_3();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..50 {
        let hi = DVector::from_fn(2, |_, _| rng.gen_range(0.2..3.0));
        let lo = DVector::from_fn(2, |i, _| -hi[i] - rng.gen_range(0.0..12.0));
        let set = ConstraintSet::Box { lo, hi };
        let eta = rng.gen_range(0.005..0.09);
        let x0 = DVector::from_fn(2, |i, _| match &set {
            ConstraintSet::Box { lo, hi } => rng.gen_range(lo[i]..hi[i]),
            _ => unreachable!(),
        });
        let traj = run_proj_md(&f, &dgf, &set, &x0, eta, 3000).unwrap();
        let x_opt = traj.x.last().unwrap().clone();
        let t_opt = -eta * f.gradient(&x_opt);
        let n = 200;
        // T(x_{k+1}) = z_k − η∇f(x_k) − z_{k+1}
        let ys: Vec<_> = (0..n).map(|k| &traj.x[k + 1] - &x_opt).collect();
        let us: Vec<_> = (0..n)
            .map(|k| &traj.z[k] - eta * f.gradient(&traj.x[k]) - &traj.z[k + 1] - &t_opt)
            .collect();
        for rho in [1.0, 0.95] {
            let (s, w) = projection_filters(rho).unwrap();
            assert!(min_partial_sum_ratio(&s, rho, &ys, &us) >= -1e-9);
            assert!(min_partial_sum_ratio(&w, rho, &ys, &us) >= -1e-9);
        }
    }
}

#[test]
fn equilibrium_signals_give_zero_sums() {
    let zero = vec![DVector::zeros(2); 20];
    let (s, w) = projection_filters(1.0).unwrap();
    for f in [s, w, off_by_one_filter(2.0, 1.0).unwrap()] {
        assert!(f.partial_sums(1.0, &zero, &zero).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn difference_channel_selectors() {
    let spec = ProblemSpec::from_constants(1.0, 3.0, 0.5, 2.0, 0.3, Mode::Projected).unwrap();
    let sys = build_proj_lure(&spec).unwrap();
    let sel = repeated_difference_channels(&sys).unwrap();
    for v in [&sel.output, &sel.input] {
        assert_eq!(v.iter().filter(|&&x| x == 1.0).count(), 1);
        assert_eq!(v.iter().filter(|&&x| x == -1.0).count(), 1);
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 2);
    }
    let u = DVector::from_vec(vec![0.3, 1.7, -2.0, 1.7]);
    assert_eq!(sel.input.dot(&u), 0.0);
    let dt = build_dt_lure(&spec.with_mode(Mode::Discrete)).unwrap();
    assert!(repeated_difference_channels(&dt).is_err());
}

#[test]
fn difference_channel_stays_in_the_conjugate_sector() {
    let reg = registry();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for name in reg.dgf_names() {
        let dgf = reg.dgf(name).unwrap();
        let cc = conjugate_class(dgf.class());
        let k = cc.l_bar - cc.mu_bar;
        let spec = ProblemSpec::from_conjugate(dgf.class(), cc.as_class(), 0.1, Mode::Projected).unwrap();
        let sys = build_proj_lure(&spec).unwrap();
        let sel = repeated_difference_channels(&sys).unwrap();
        let g2 = |z: &DVector<f64>| dgf.grad_conjugate(z) - z * cc.mu_bar;
        for _ in 0..10_000 {
            // y2 = z_k, y4 = z_{k+1}: the channel sees y2 − y4 and u2 − u4
            let (a, b) = (DVector::from_fn(2, |_, _| rng.gen_range(-8.0..8.0)), DVector::from_fn(2, |_, _| rng.gen_range(-8.0..8.0)));
            let y = &a * sel.output[1] + &b * sel.output[3];
            let u = g2(&a) * sel.input[1] + g2(&b) * sel.input[3];
            assert!(u.dot(&(&y * k - &u)) >= -1e-9 * (1.0 + k * k) * y.norm_squared(), "{name}");
        }
    }
}
