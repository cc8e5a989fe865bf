//! `certify` and `sweep`.

use std::io::Write;

use mdcert::certify::{certified_rate, dt_certified_rate, quadratic_rate, RateQuery};
use mdcert::model::{Mode, ProblemSpec, RateCertificate};
use rayon::prelude::*;

use crate::args::{CertifyArgs, RunConfig, StepsizeRule, SweepArgs};
use crate::error::CliError;
use crate::output::{fmt, open_out};

pub const CERTIFY_HEADER: [&str; 6] = ["kappa", "eta", "rho_certified", "margin", "multiplier_mode", "status"];

/// Class constants for a run. A bare `--kappa` follows the figures'
/// conventions: `μ's = 1, L's = √κ` for continuous and discrete time, and
/// `L's = 1, μ's = 1/√κ` for the projected iteration. Explicit constants
/// override the ones `--kappa` implies.
fn class_constants(cfg: &RunConfig, mode: Mode) -> Result<(f64, f64, f64, f64), CliError> {
    let implied = cfg.kappa.map(|k| match mode {
        Mode::Projected => (1.0 / k.sqrt(), 1.0),
        _ => (1.0, k.sqrt()),
    });
    let pick = |v: Option<f64>, from_kappa: Option<f64>, name: &str| {
        v.or(from_kappa).ok_or_else(|| CliError::Config(format!("need --kappa or --{name}")))
    };
    Ok((
        pick(cfg.mu_f, implied.map(|p| p.0), "mu-f")?,
        pick(cfg.l_f, implied.map(|p| p.1), "L-f")?,
        pick(cfg.mu_phibar, implied.map(|p| p.0), "mu-phibar")?,
        pick(cfg.l_phibar, implied.map(|p| p.1), "L-phibar")?,
    ))
}

/// Certifies one class. Continuous time defaults to `η = 1`; discrete
/// time defaults to the worst-case quadratic stepsize; the projected
/// iteration searches for its stepsize unless `--eta` fixes one.
pub fn certify_one(cfg: &RunConfig) -> Result<(f64, RateCertificate), CliError> {
    let mode: Mode = cfg.mode.into();
    let (mu_f, l_f, mu_bar, l_bar) = class_constants(cfg, mode)?;
    let base = ProblemSpec::from_constants(mu_f, l_f, mu_bar, l_bar, 1.0, mode)?;
    // echo a requested κ exactly rather than its round trip through √κ
    let kappa = match (cfg.kappa, cfg.mu_f, cfg.l_f, cfg.mu_phibar, cfg.l_phibar) {
        (Some(k), None, None, None, None) => k,
        _ => (l_f * l_bar) / (mu_f * mu_bar),
    };
    let prop2 = || quadratic_rate(&base).0;
    let eta = match (cfg.eta, cfg.stepsize, mode) {
        (Some(e), _, _) => e,
        (None, Some(StepsizeRule::Prop2), _) | (None, None, Mode::Discrete) => prop2(),
        (None, None, _) => 1.0,
    };
    let mut q = RateQuery::new(base.with_eta(eta)?, cfg.multipliers.mode()).with_tol(cfg.tol);
    q.solver.seed = cfg.seed;
    let cert = if mode == Mode::Projected && cfg.eta.is_some() {
        dt_certified_rate(&q)?
    } else {
        certified_rate(&q)?
    };
    Ok((kappa, cert))
}

pub fn certify_row(cfg: &RunConfig, kappa: f64, cert: &RateCertificate) -> Vec<String> {
    vec![
        fmt(kappa),
        fmt(cert.eta),
        fmt(cert.rho),
        fmt(cert.margin),
        cfg.multipliers.label().to_string(),
        if cert.certified { "certified" } else { "uncertified" }.to_string(),
    ]
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args.class, args.kappa)?;
    let (kappa, cert) = certify_one(&cfg)?;
    let mut w = csv::Writer::from_writer(open_out(cfg.out.as_deref())?);
    w.write_record(CERTIFY_HEADER)?;
    w.write_record(certify_row(&cfg, kappa, &cert))?;
    w.flush()?;
    Ok(())
}

pub fn kappa_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    (0..points).map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64)).collect()
}

/// Certifies every grid point in parallel and writes the rows in grid order.
pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args.class, None)?;
    let grid = if args.kappa.is_empty() {
        if !(args.kappa_min >= 1.0 && args.kappa_max >= args.kappa_min && args.points >= 1) {
            return Err(CliError::Config("need 1 <= kappa-min <= kappa-max and at least one point".into()));
        }
        kappa_grid(args.kappa_min, args.kappa_max, args.points)
    } else {
        args.kappa.clone()
    };
    let rows: Vec<Result<Vec<String>, CliError>> = grid
        .par_iter()
        .map(|&k| {
            let point = RunConfig { kappa: Some(k), ..cfg.clone() };
            point.validate_kappa()?;
            let (kappa, cert) = certify_one(&point)?;
            Ok(certify_row(&point, kappa, &cert))
        })
        .collect();
    let mut w = csv::Writer::from_writer(open_out(cfg.out.as_deref())?);
    w.write_record(CERTIFY_HEADER)?;
    for row in rows {
        w.write_record(row?)?;
    }
    w.flush()?;
    Ok(())
}

impl RunConfig {
    fn validate_kappa(&self) -> Result<(), CliError> {
        match self.kappa {
            Some(k) if !(k >= 1.0 && k.is_finite()) => Err(CliError::Config(format!("kappa must be at least 1, got {k}"))),
            _ => Ok(()),
        }
    }
}

pub fn write_all<W: Write>(mut w: csv::Writer<W>, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
