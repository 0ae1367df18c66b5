//! Command-line front end: `classify`, `shoot`, `find`, `scan`, `verify`
//! and `plot-data`.
//!
//! Exit codes: 0 success, 1 nothing found (or a failed check), 2 invalid
//! configuration, 3 integrator or internal failure.

pub mod config;

pub mod commands;
pub mod plot;
pub mod scan_cmd;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homoclinic_core::scan::GridSpec;
use homoclinic_core::{HomoclinicError, NonlinearitySpec, ScanError, Sigma, StepControl};
use thiserror::Error;

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_FOUND: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    NotFound(String),
    #[error("computation failed: {0}")]
    Failed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::NotFound(_) => EXIT_NOT_FOUND,
            CliError::Failed(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

impl From<HomoclinicError> for CliError {
    fn from(e: HomoclinicError) -> Self {
        match e {
            HomoclinicError::InvalidConfig(_) | HomoclinicError::NotSaddleCenter(_) => {
                CliError::Config(e.to_string())
            }
            HomoclinicError::Integrate(_) => CliError::Failed(e.to_string()),
            HomoclinicError::BracketInvalid { .. }
            | HomoclinicError::CrossingIndexJumped { .. }
            | HomoclinicError::MissTooLarge { .. }
            | HomoclinicError::CrossingAbsent { .. } => CliError::NotFound(e.to_string()),
        }
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::Homoclinic(h) => h.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "homoclinic", version, about = "Homoclinic orbits of a reversible fourth-order system by shooting")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for `scan` (default: machine parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Continue an interrupted `scan` in `--out`.
    #[arg(long, global = true)]
    resume: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrum of the origin as JSON.
    Classify(Overrides),
    /// Trajectory CSV of one manifold branch.
    Shoot(Overrides),
    /// Homoclinic parameter value in a bracket of `a`, as JSON.
    Find {
        #[command(flatten)]
        o: Overrides,
        /// Uniform cells the bracket is sampled at before refinement.
        #[arg(long, default_value_t = 1)]
        subdivisions: usize,
    },
    /// Grid scan: locus CSV plus manifest.
    Scan {
        #[command(flatten)]
        o: Overrides,
        /// Also write every shot to profiles.csv.
        #[arg(long)]
        raw: bool,
    },
    /// Checks against the closed-form solutions; JSON report.
    Verify(Overrides),
    /// CSV point sets for the model figures.
    PlotData(Overrides),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Sech,
    Sech2,
}

fn parse_sigma(s: &str) -> Result<Sigma, String> {
    match s {
        "plus" | "+" | "+1" | "1" => Ok(Sigma::Plus),
        "minus" | "-" | "-1" => Ok(Sigma::Minus),
        _ => Err(format!("expected plus or minus, got {s:?}")),
    }
}

/// Flags that override fields of the configuration file.
#[derive(Debug, Clone, Default, Args)]
struct Overrides {
    /// Built-in nonlinearity, replacing the config's.
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["A_LO", "A_HI"], allow_negative_numbers = true)]
    bracket: Option<Vec<f64>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_parser = parse_sigma, allow_hyphen_values = true)]
    sigma: Option<Sigma>,
    #[arg(long, allow_negative_numbers = true)]
    a_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Sets both relative and absolute integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        match self.family {
            Some(Family::Sech) => cfg.nonlinearity = Some(NonlinearitySpec::sech_family()),
            Some(Family::Sech2) => cfg.nonlinearity = Some(NonlinearitySpec::sech2_family()),
            None => {}
        }
        cfg.a = self.a.or(cfg.a);
        cfg.b = self.b.or(cfg.b);
        if let Some(br) = &self.bracket {
            cfg.bracket = Some([br[0], br[1]]);
        }
        cfg.k = self.k.or(cfg.k);
        cfg.sigma = self.sigma.or(cfg.sigma);

        let grid_flags = [self.a_min, self.a_max, self.b_min, self.b_max, self.step];
        if grid_flags.iter().any(Option::is_some) {
            let mut g = cfg.grid.unwrap_or(GridSpec::new((f64::NAN, f64::NAN), (f64::NAN, f64::NAN), 1e-2));
            g.a_min = self.a_min.unwrap_or(g.a_min);
            g.a_max = self.a_max.unwrap_or(g.a_max);
            g.b_min = self.b_min.unwrap_or(g.b_min);
            g.b_max = self.b_max.unwrap_or(g.b_max);
            g.step = self.step.unwrap_or(g.step);
            if [g.a_min, g.a_max, g.b_min, g.b_max].iter().any(|x| x.is_nan()) {
                return Err(CliError::Config(
                    "grid flags need all of --a-min --a-max --b-min --b-max unless the config has a grid".into(),
                ));
            }
            cfg.grid = Some(g);
        }

        let s = &mut cfg.shot;
        s.epsilon = self.epsilon.or(s.epsilon);
        s.t_max = self.t_max.or(s.t_max);
        s.r_max = self.r_max.or(s.r_max);
        s.k_max = self.k_max.or(s.k_max);
        if let Some(tol) = self.tol {
            let base = s.ctrl.unwrap_or_default();
            s.ctrl = Some(StepControl {
                rel_tol: tol,
                abs_tol: tol,
                ..base
            });
        }
        Ok(())
    }
}

/// Everything a subcommand needs after config and flags are merged.
pub(crate) struct Context {
    pub cfg: RunConfig,
    pub jobs: Option<usize>,
    pub resume: bool,
}

impl Context {
    pub fn out_dir(&self) -> Option<PathBuf> {
        self.cfg.output_dir.clone()
    }

    pub fn require_out(&self) -> Result<PathBuf, CliError> {
        self.out_dir()
            .ok_or_else(|| CliError::Config("an output directory is required (--out)".into()))
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("HOMOCLINIC_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Parses `args` (including the program name) and runs the command,
/// writing primary output to standard output.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run_with(args, &mut lock)
}

/// [`run`] with primary output sent to `out`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let overrides = match &cli.command {
        Command::Classify(o) | Command::Shoot(o) | Command::Verify(o) | Command::PlotData(o) => o,
        Command::Find { o, .. } | Command::Scan { o, .. } => o,
    };
    overrides.apply(&mut cfg)?;
    if let Some(dir) = &cli.out {
        cfg.output_dir = Some(dir.clone());
    }
    if cli.jobs == Some(0) {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    cfg.validate()?;
    let ctx = Context {
        cfg,
        jobs: cli.jobs,
        resume: cli.resume,
    };
    match cli.command {
        Command::Classify(_) => commands::classify(&ctx, out),
        Command::Shoot(_) => commands::shoot(&ctx, out),
        Command::Find { subdivisions, .. } => commands::find(&ctx, subdivisions, out),
        Command::Scan { raw, .. } => scan_cmd::scan(&ctx, raw, out),
        Command::Verify(_) => commands::verify(&ctx, out),
        Command::PlotData(_) => plot::plot_data(&ctx, out),
    }
}
