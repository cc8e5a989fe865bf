//! `simulate`: one run on a registered instance.

use mdcert::certify::{certified_rate, dt_certified_rate, quadratic_rate, spectrum_bound, RateQuery, MultiplierMode};
use mdcert::mdlab::{
    ct_step, empirical_rate, registry, run_ct_md, run_dt_md, run_gd, run_proj_md, ConstraintSet, DgfPair, QuadraticDgf,
    SmoothFunction, Trajectory,
};
use mdcert::model::{FunctionClass, Mode, ProblemSpec};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{Method, SimulateArgs};
use crate::error::CliError;
use crate::output::{fmt, open_out};

pub const SUMMARY_HEADER: [&str; 9] =
    ["method", "instance", "dgf", "eta", "steps", "rho_emp", "final_dist", "final_f_err", "rho_certified"];

fn method_label(m: Method) -> &'static str {
    match m {
        Method::Md => "md",
        Method::Gd => "gd",
        Method::Ct => "ct",
        Method::Proj => "proj",
    }
}

fn parse_box(pairs: &[String], d: usize) -> Result<ConstraintSet, CliError> {
    if pairs.len() != d {
        return Err(CliError::Config(format!("--box needs {d} lo:hi pairs, got {}", pairs.len())));
    }
    let (mut lo, mut hi) = (DVector::zeros(d), DVector::zeros(d));
    for (i, p) in pairs.iter().enumerate() {
        let bad = || CliError::Config(format!("bad box interval {p:?}; expected lo:hi"));
        let (a, b) = p.split_once(':').ok_or_else(bad)?;
        lo[i] = a.trim().parse().map_err(|_| bad())?;
        hi[i] = b.trim().parse().map_err(|_| bad())?;
        if !(lo[i] <= hi[i]) {
            return Err(bad());
        }
    }
    Ok(ConstraintSet::Box { lo, hi })
}

/// Default stepsize: `2/(λmin + λmax)` over the spectrum of `F Φ⁻¹` when
/// both the objective and the DGF are quadratic, otherwise the worst-case
/// quadratic stepsize of their classes. Continuous time uses `η = 1`.
fn default_eta(f: &dyn SmoothFunction, dgf: &dyn DgfPair, method: Method) -> Result<f64, CliError> {
    if method == Method::Ct {
        return Ok(1.0);
    }
    let identity = QuadraticDgf::identity(f.dim());
    let dgf: &dyn DgfPair = if method == Method::Gd { &identity } else { dgf };
    if let (Some(fm), Some(phi)) = (f.hessian(), dgf.quadratic_matrix()) {
        let phi_inv = phi.clone().try_inverse().ok_or_else(|| CliError::Config("singular DGF matrix".into()))?;
        let (lmin, lmax, _) = spectrum_bound(fm, &phi_inv)?;
        return Ok(2.0 / (lmin + lmax));
    }
    Ok(quadratic_rate(&class_spec(f, dgf, 1.0, Mode::Discrete)?).0)
}

fn class_spec(f: &dyn SmoothFunction, dgf: &dyn DgfPair, eta: f64, mode: Mode) -> Result<ProblemSpec, CliError> {
    Ok(ProblemSpec::new(f.class(), dgf.class(), eta, mode, f.dim())?)
}

struct Run {
    traj: Trajectory,
    x_opt: DVector<f64>,
    eta: f64,
}

/// Seeded start point: uniform on `[−5, 5]^d`, or inside the constraint set.
fn draw_start(rng: &mut ChaCha8Rng, d: usize, set: Option<&ConstraintSet>) -> DVector<f64> {
    match set {
        None => DVector::from_fn(d, |_, _| rng.gen_range(-5.0..5.0)),
        Some(ConstraintSet::Box { lo, hi }) => DVector::from_fn(d, |i, _| lo[i] + rng.gen::<f64>() * (hi[i] - lo[i])),
        Some(ConstraintSet::Simplex) => {
            // normalized exponentials are uniform on the simplex
            let e = DVector::from_fn(d, |_, _| -(1.0 - rng.gen::<f64>()).ln());
            let total = e.sum();
            e / total
        }
    }
}

fn run(
    args: &SimulateArgs,
    f: &dyn SmoothFunction,
    dgf: &dyn DgfPair,
    set: Option<&ConstraintSet>,
    x0: &DVector<f64>,
) -> Result<Run, CliError> {
    let eta = match args.eta {
        Some(e) if !(e > 0.0 && e.is_finite()) => return Err(CliError::Config(format!("--eta must be positive, got {e}"))),
        Some(e) => e,
        None => default_eta(f, dgf, args.method)?,
    };
    let unconstrained_opt =
        || f.minimizer().ok_or_else(|| CliError::Config("instance has no known minimizer".into()));
    let (traj, x_opt) = match args.method {
        Method::Md => (run_dt_md(f, dgf, &dgf.grad_phi(x0), eta, args.steps)?, unconstrained_opt()?),
        Method::Gd => (run_gd(f, x0, eta, args.steps)?, unconstrained_opt()?),
        Method::Ct => {
            if !(args.t_end > 0.0 && args.t_end.is_finite()) {
                return Err(CliError::Config(format!("--t-end must be positive, got {}", args.t_end)));
            }
            let (cf, cbar) = (f.class(), mdcert::model::conjugate_class(dgf.class()));
            let h = ct_step(eta, cf.L(), cbar.l_bar);
            (run_ct_md(f, dgf, &dgf.grad_phi(x0), eta, args.t_end, h)?, unconstrained_opt()?)
        }
        Method::Proj => {
            let set = set.expect("projected runs have a constraint set");
            let traj = run_proj_md(f, dgf, set, x0, eta, args.steps)?;
            // the constrained minimizer is taken from a run four times as long
            let long = run_proj_md(f, dgf, set, x0, eta, 4 * args.steps.max(1))?;
            let x_opt = long.x.last().cloned().expect("runs include the start point");
            (traj, x_opt)
        }
    };
    Ok(Run { traj, x_opt, eta })
}

fn certified(args: &SimulateArgs, f: &dyn SmoothFunction, dgf: &dyn DgfPair, eta: f64) -> Result<f64, CliError> {
    let phi_class = if args.method == Method::Gd { FunctionClass::new(1.0, 1.0)? } else { dgf.class() };
    let mode = match args.method {
        Method::Md | Method::Gd => Mode::Discrete,
        Method::Ct => Mode::Continuous,
        Method::Proj => Mode::Projected,
    };
    let spec = ProblemSpec::new(f.class(), phi_class, eta, mode, f.dim())?;
    let q = RateQuery::new(spec, MultiplierMode::Default);
    // the projected rate is certified at the stepsize actually run
    let cert = if mode == Mode::Projected { dt_certified_rate(&q)? } else { certified_rate(&q)? };
    Ok(cert.rho)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let reg = registry();
    let f = reg.function(&args.instance).ok_or_else(|| {
        CliError::Config(format!(
            "unknown instance {:?}; known: {}",
            args.instance,
            reg.function_names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    let dgf = reg.dgf(&args.dgf).ok_or_else(|| {
        CliError::Config(format!("unknown DGF {:?}; known: {}", args.dgf, reg.dgf_names().collect::<Vec<_>>().join(", ")))
    })?;
    let d = f.dim();
    if args.method != Method::Gd && dgf.dim() != d {
        return Err(CliError::Config(format!("DGF {} has dimension {}, instance {d}", args.dgf, dgf.dim())));
    }
    let set = match (args.method, args.r#box.is_empty()) {
        (Method::Proj, true) => Some(ConstraintSet::Simplex),
        (Method::Proj, false) => Some(parse_box(&args.r#box, d)?),
        _ => None,
    };
    let x0 = if args.x0.is_empty() {
        draw_start(&mut ChaCha8Rng::seed_from_u64(args.seed), d, set.as_ref())
    } else if args.x0.len() == d {
        DVector::from_vec(args.x0.clone())
    } else {
        return Err(CliError::Config(format!("--x0 needs {d} coordinates, got {}", args.x0.len())));
    };

    let Run { traj, x_opt, eta } = run(args, f.as_ref(), dgf.as_ref(), set.as_ref(), &x0)?;
    let f_opt = f.value(&x_opt);
    let last = traj.x.last().expect("runs include the start point");
    let (dist0, dist) = ((&x0 - &x_opt).norm(), (last - &x_opt).norm());
    if dist > 1e6 * dist0.max(1.0) {
        return Err(CliError::Diverged(format!("distance to the minimizer grew from {dist0} to {dist}")));
    }
    let rho_emp = empirical_rate(&traj, &x_opt).map(|r| fmt(r.rho)).unwrap_or_default();
    let rho_cert = if args.certify { fmt(certified(args, f.as_ref(), dgf.as_ref(), eta)?) } else { String::new() };

    if let Some(path) = &args.out {
        traj.write_csv(open_out(Some(path))?, f.as_ref(), &x_opt, f_opt)?;
    }
    let steps = traj.len() - 1;
    let mut w = csv::Writer::from_writer(open_out(None)?);
    w.write_record(SUMMARY_HEADER)?;
    w.write_record([
        method_label(args.method).to_string(),
        args.instance.clone(),
        if args.method == Method::Gd { String::new() } else { args.dgf.clone() },
        fmt(eta),
        steps.to_string(),
        rho_emp,
        fmt(dist),
        fmt((f.value(last) - f_opt).abs()),
        rho_cert,
    ])?;
    w.flush()?;
    Ok(())
}
