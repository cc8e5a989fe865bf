//! `figure N`: the data behind each figure, written to `figN.csv`.

use mdcert::certify::{certified_rate, dt_certified_rate, quadratic_rate, spectrum_bound, MultiplierMode, RateQuery};
use mdcert::mdlab::{dgf_6_3, quad_6_3, run_dt_md, run_gd, DgfPair, SmoothFunction};
use mdcert::model::{Mode, ProblemSpec};
use nalgebra::dvector;
use rayon::prelude::*;

use crate::args::FigureArgs;
use crate::certify::{kappa_grid, write_all};
use crate::error::CliError;
use crate::output::{fmt, open_out};

/// Runs `row` on every grid point in parallel and keeps grid order.
fn sweep<F>(grid: &[f64], row: F) -> Result<Vec<Vec<String>>, CliError>
where
    F: Fn(f64) -> Result<Vec<String>, CliError> + Sync,
{
    grid.par_iter().map(|&k| row(k)).collect::<Vec<_>>().into_iter().collect()
}

fn query(spec: ProblemSpec, mode: MultiplierMode, tol: f64) -> RateQuery {
    RateQuery::new(spec, mode).with_tol(tol)
}

/// Continuous time with `η = μ_f = μ̄ = 1`: default multipliers against
/// sector-only ones.
fn fig2(args: &FigureArgs) -> Result<(Vec<&'static str>, Vec<Vec<String>>), CliError> {
    let rows = sweep(&kappa_grid(1.0, 100.0, args.points), |k| {
        let spec = ProblemSpec::from_constants(1.0, k.sqrt(), 1.0, k.sqrt(), 1.0, Mode::Continuous)?;
        let full = certified_rate(&query(spec, MultiplierMode::Default, args.tol))?;
        let sector = certified_rate(&query(spec, MultiplierMode::SectorOnly, args.tol))?;
        Ok(vec![fmt(k), fmt(full.rho), fmt(sector.rho)])
    })?;
    Ok((vec!["kappa", "rho_sector_popov", "rho_sector_only"], rows))
}

/// Discrete time at the worst-case quadratic stepsize, with the analytic
/// curve `(κ − 1)/(κ + 1)` alongside.
fn fig3(args: &FigureArgs) -> Result<(Vec<&'static str>, Vec<Vec<String>>), CliError> {
    let rows = sweep(&kappa_grid(1.0, 100.0, args.points), |k| {
        let base = ProblemSpec::from_constants(1.0, k.sqrt(), 1.0, k.sqrt(), 1.0, Mode::Discrete)?;
        let (eta, analytic) = quadratic_rate(&base);
        let cert = certified_rate(&query(base.with_eta(eta)?, MultiplierMode::Default, args.tol))?;
        Ok(vec![fmt(k), fmt(eta), fmt(cert.rho), fmt(analytic)])
    })?;
    Ok((vec!["kappa", "eta", "rho_certified", "rho_analytic"], rows))
}

/// Objective errors of GD at `2/(μ + L)` and MD at `2/(λmin + λmax)` on the
/// worked quadratic, both from `(5, 5)`.
fn fig4(_args: &FigureArgs) -> Result<(Vec<&'static str>, Vec<Vec<String>>), CliError> {
    let (f, dgf) = (quad_6_3(), dgf_6_3());
    let x_opt = f.minimizer().expect("positive definite quadratic");
    let f_opt = f.value(&x_opt);
    let (lmin, lmax, _) = spectrum_bound(&f.f, dgf.phi_inv())?;
    let x0 = dvector![5.0, 5.0];
    let steps = 400;
    let gd = run_gd(&f, &x0, 2.0 / (f.class().mu() + f.class().L()), steps)?.f_errors(&f, f_opt);
    let md = run_dt_md(&f, &dgf, &dgf.grad_phi(&x0), 2.0 / (lmin + lmax), steps)?.f_errors(&f, f_opt);
    let rows = (0..=steps).map(|k| vec![k.to_string(), fmt(gd[k]), fmt(md[k])]).collect();
    Ok((vec!["k", "gd_error", "md_error"], rows))
}

/// Projected iteration with `L_f = L̄ = 1` and `μ_f = μ̄ = 1/√κ`, at the
/// searched stepsize, next to the unconstrained certificate at that stepsize.
fn fig5(args: &FigureArgs) -> Result<(Vec<&'static str>, Vec<Vec<String>>), CliError> {
    let rows = sweep(&kappa_grid(1.0, 100.0, args.points), |k| {
        let mu = 1.0 / k.sqrt();
        let spec = ProblemSpec::from_constants(mu, 1.0, mu, 1.0, 1.0, Mode::Projected)?;
        let proj = certified_rate(&query(spec, MultiplierMode::Default, args.tol))?;
        let dt = spec.with_mode(Mode::Discrete).with_eta(proj.eta)?;
        let unc = dt_certified_rate(&query(dt, MultiplierMode::Default, args.tol))?;
        Ok(vec![fmt(k), fmt(mu), fmt(proj.eta), fmt(proj.rho), fmt(unc.rho)])
    })?;
    Ok((vec!["kappa", "mu", "eta", "rho_projected", "rho_unconstrained"], rows))
}

pub fn cmd_figure(args: &FigureArgs) -> Result<(), CliError> {
    if args.points == 0 {
        return Err(CliError::Config("--points must be at least 1".into()));
    }
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(CliError::Config(format!("tolerance must be positive, got {}", args.tol)));
    }
    let (header, rows) = match args.number {
        2 => fig2(args)?,
        3 => fig3(args)?,
        4 => fig4(args)?,
        5 => fig5(args)?,
        n => return Err(CliError::Config(format!("no figure {n}"))),
    };
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Config(format!("{}: {e}", args.out.display())))?;
    let path = args.out.join(format!("fig{}.csv", args.number));
    write_all(csv::Writer::from_writer(open_out(Some(&path))?), &header, &rows)
}
