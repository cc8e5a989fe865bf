use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdcert::certify::MultiplierMode;
use mdcert::model::Mode;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "mdcert", version, about = "Convergence-rate certificates and simulations for mirror descent")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify one class of problems and print a CSV row.
    Certify(CertifyArgs),
    /// Certify a grid of condition numbers, one CSV row per point.
    Sweep(SweepArgs),
    /// Run an algorithm on a registered instance.
    Simulate(SimulateArgs),
    /// Write the data behind one of the figures (2, 3, 4 or 5).
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Ct,
    Dt,
    Proj,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Ct => Mode::Continuous,
            ModeArg::Dt => Mode::Discrete,
            ModeArg::Proj => Mode::Projected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultipliersArg {
    SectorOnly,
    Default,
}

impl MultipliersArg {
    pub fn mode(self) -> MultiplierMode {
        match self {
            MultipliersArg::SectorOnly => MultiplierMode::SectorOnly,
            MultipliersArg::Default => MultiplierMode::Default,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MultipliersArg::SectorOnly => "sector-only",
            MultipliersArg::Default => "default",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepsizeRule {
    /// `η = 2/(L_f L̄ + μ_f μ̄)`.
    Prop2,
}

/// Class and solver settings shared by `certify` and `sweep`. Every field
/// may also come from the `--config` file; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct ClassArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long = "mu-f")]
    pub mu_f: Option<f64>,
    #[arg(long = "L-f")]
    pub l_f: Option<f64>,
    #[arg(long = "mu-phibar")]
    pub mu_phibar: Option<f64>,
    #[arg(long = "L-phibar")]
    pub l_phibar: Option<f64>,
    #[arg(long, conflicts_with = "stepsize")]
    pub eta: Option<f64>,
    #[arg(long, value_enum)]
    pub stepsize: Option<StepsizeRule>,
    #[arg(long, value_enum)]
    pub multipliers: Option<MultipliersArg>,
    /// Bisection tolerance on the rate.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file with any of the flags above, spelled with underscores.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    /// Composite condition number; sets the class constants the figures use.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[command(flatten)]
    pub class: ClassArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Comma-separated condition numbers; overrides the log grid.
    #[arg(long, value_delimiter = ',')]
    pub kappa: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub kappa_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub kappa_max: f64,
    #[arg(long, default_value_t = 10)]
    pub points: usize,
    #[command(flatten)]
    pub class: ClassArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Md,
    Gd,
    Ct,
    Proj,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Registered objective.
    #[arg(long, default_value = "quad_6_3")]
    pub instance: String,
    /// Registered distance-generating function (ignored by `gd`).
    #[arg(long, default_value = "dgf_6_3")]
    pub dgf: String,
    #[arg(long, value_enum, default_value = "md")]
    pub method: Method,
    /// Stepsize; by default the worst-case quadratic optimum for the
    /// instance's classes (the spectrum-based optimum for quadratic pairs).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Start point as comma-separated coordinates; drawn from `--seed` when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 400)]
    pub steps: usize,
    /// Time horizon for `ct`.
    #[arg(long, default_value_t = 50.0)]
    pub t_end: f64,
    /// Box for `proj` as comma-separated `lo:hi` pairs; the simplex when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub r#box: Vec<String>,
    /// Also certify the instance's class and report the certified rate.
    #[arg(long)]
    pub certify: bool,
    /// Trajectory CSV; the summary row goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[arg(value_parser = clap::value_parser!(u8).range(2..=5))]
    pub number: u8,
    /// Directory for `figN.csv`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 25)]
    pub points: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<ModeArg>,
    kappa: Option<f64>,
    mu_f: Option<f64>,
    #[serde(rename = "L_f")]
    l_f: Option<f64>,
    mu_phibar: Option<f64>,
    #[serde(rename = "L_phibar")]
    l_phibar: Option<f64>,
    eta: Option<f64>,
    stepsize: Option<StepsizeRule>,
    multipliers: Option<MultipliersArg>,
    tol: Option<f64>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

/// Fully resolved settings for one certification run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: ModeArg,
    pub kappa: Option<f64>,
    pub mu_f: Option<f64>,
    pub l_f: Option<f64>,
    pub mu_phibar: Option<f64>,
    pub l_phibar: Option<f64>,
    pub eta: Option<f64>,
    pub stepsize: Option<StepsizeRule>,
    pub multipliers: MultipliersArg,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

fn read_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Merges flags over the config file and checks the result.
    pub fn resolve(class: &ClassArgs, kappa: Option<f64>) -> Result<Self, CliError> {
        let file = match &class.config {
            Some(p) => read_config(p)?,
            None => FileConfig::default(),
        };
        let (eta, stepsize) = match (class.eta, class.stepsize) {
            (Some(e), _) => (Some(e), None),
            (None, Some(s)) => (None, Some(s)),
            (None, None) => (file.eta, if file.eta.is_some() { None } else { file.stepsize }),
        };
        let cfg = RunConfig {
            mode: class.mode.or(file.mode).ok_or_else(|| CliError::Config("--mode is required".into()))?,
            kappa: kappa.or(file.kappa),
            mu_f: class.mu_f.or(file.mu_f),
            l_f: class.l_f.or(file.l_f),
            mu_phibar: class.mu_phibar.or(file.mu_phibar),
            l_phibar: class.l_phibar.or(file.l_phibar),
            eta,
            stepsize,
            multipliers: class.multipliers.or(file.multipliers).unwrap_or(MultipliersArg::Default),
            tol: class.tol.or(file.tol).unwrap_or(1e-7),
            out: class.out.clone().or(file.out),
            seed: class.seed.or(file.seed).unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if let Some(k) = self.kappa {
            if !(k >= 1.0 && k.is_finite()) {
                return Err(CliError::Config(format!("kappa must be at least 1, got {k}")));
            }
        }
        for (name, v) in [("mu-f", self.mu_f), ("L-f", self.l_f), ("mu-phibar", self.mu_phibar), ("L-phibar", self.l_phibar)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("--{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(e) = self.eta {
            if !(e > 0.0 && e.is_finite()) {
                return Err(CliError::Config(format!("--eta must be positive, got {e}")));
            }
        }
        Ok(())
    }
}
