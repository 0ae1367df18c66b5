use std::fs::File;
use std::io::{BufWriter, Write};

use homoclinic_core::homoclinic::{find_homoclinic, refine_root, shoot_path, verify_reversibility};
use homoclinic_core::io::write_trajectory_csv;
use homoclinic_core::known::{closed_form_residual, uniform_grid};
use homoclinic_core::spectral::{classify as classify_params, unstable_eigenpair};
use homoclinic_core::{KnownSolution, LocusPoint, Params, ShotConfig, Sigma, State};
use serde::Serialize;

use crate::{CliError, Context, EXIT_NOT_FOUND, EXIT_OK};

pub(crate) fn params(ctx: &Context) -> Result<Params, CliError> {
    let spec = ctx.cfg.nonlinearity()?;
    Params::new(ctx.cfg.require_a()?, ctx.cfg.require_b()?, spec)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

pub(crate) fn classify(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let p = params(ctx)?;
    write_json(out, &classify_params(&p))?;
    Ok(EXIT_OK)
}

pub(crate) fn shoot(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let p = params(ctx)?;
    let cfg = ctx.cfg.shot.resolve().with_sigma(ctx.cfg.sigma.unwrap_or(Sigma::Plus));
    unstable_eigenpair(&p)?;
    let (profile, path) = shoot_path(&p, &cfg)?;
    let Some(path) = path else {
        let msg = profile
            .failure
            .map(|e| e.to_string())
            .unwrap_or_else(|| "integration failed".into());
        return Err(CliError::Failed(msg));
    };
    for c in &profile.crossings {
        log::info!("crossing {}: t = {:.12}, v = {:.6e}", c.index, c.t, c.s.v);
    }
    eprintln!(
        "{} after {} crossing(s)",
        profile.outcome.label(),
        profile.crossings.len()
    );
    match ctx.out_dir() {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            let mut w = BufWriter::new(File::create(dir.join("trajectory.csv"))?);
            write_trajectory_csv(&mut w, &path, &p)?;
            w.flush()?;
        }
        None => write_trajectory_csv(out, &path, &p)?,
    }
    Ok(EXIT_OK)
}

pub(crate) fn find(ctx: &Context, subdivisions: usize, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = ctx.cfg.nonlinearity()?;
    let b = ctx.cfg.require_b()?;
    let [lo, hi] = ctx
        .cfg
        .bracket
        .ok_or_else(|| CliError::Config("a bracket is required (--bracket A_LO A_HI)".into()))?;
    if subdivisions == 0 {
        return Err(CliError::Config("--subdivisions must be at least 1".into()));
    }
    let cfg = ctx.cfg.shot.resolve();
    if let (Some(sigma), Some(k)) = (ctx.cfg.sigma, ctx.cfg.k) {
        let lp = refine_root(b, &spec, (lo, hi), &cfg.with_sigma(sigma), k)?;
        write_json(out, &lp)?;
        return Ok(EXIT_OK);
    }
    let found: Vec<LocusPoint> = find_homoclinic(b, &spec, (lo, hi), &cfg, subdivisions)?
        .into_iter()
        .filter(|lp| ctx.cfg.sigma.is_none_or(|s| s == lp.sigma))
        .filter(|lp| ctx.cfg.k.is_none_or(|k| k == lp.k))
        .collect();
    for lp in found.iter().skip(1) {
        log::info!("also found a* = {} (sigma {}, k {})", lp.a_star, lp.sigma.as_int(), lp.k);
    }
    match found.first() {
        Some(lp) => {
            write_json(out, lp)?;
            Ok(EXIT_OK)
        }
        None => Err(CliError::NotFound(format!(
            "no homoclinic value in [{lo}, {hi}] at b = {b}"
        ))),
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub residual_sech: f64,
    pub residual_sech2: f64,
    pub reversibility_defect: f64,
    pub recovered_a_sech: Option<f64>,
    pub recovered_a_sech2: Option<f64>,
}

pub const RESIDUAL_TOL: f64 = 1e-8;
pub const REVERSIBILITY_TOL: f64 = 1e-8;
pub const RECOVERY_TOL: f64 = 1e-4;
pub const REVERSIBILITY_SAMPLES: usize = 100;
pub const REVERSIBILITY_T: f64 = 5.0;

/// Half-width of a box around the origin whose states stay bounded for
/// `|t| <= REVERSIBILITY_T`.
pub fn bounded_box(lambda: f64) -> f64 {
    0.5 * (-REVERSIBILITY_T * lambda).exp()
}

/// Additive-recurrence points built on the generalized golden ratio for four
/// dimensions, mapped to `[-r, r]^4`.
pub fn quasi_random_states(n: usize, r: f64) -> Vec<State> {
    // root of x^5 = x + 1
    let g = 1.167_303_978_261_418_7_f64;
    let alpha = [1.0 / g, 1.0 / (g * g), 1.0 / g.powi(3), 1.0 / g.powi(4)];
    (1..=n)
        .map(|i| {
            let c: Vec<f64> = alpha
                .iter()
                .map(|al| r * (2.0 * (0.5 + al * i as f64).fract() - 1.0))
                .collect();
            State::new(c[0], c[1], c[2], c[3])
        })
        .collect()
}

fn recover(ks: &KnownSolution, half_width: f64, cfg: &ShotConfig) -> Result<Option<f64>, CliError> {
    let p = &ks.params_star;
    let bracket = (p.a - half_width, p.a + half_width);
    let found = find_homoclinic(p.b, &p.nonlinearity, bracket, cfg, 1)?;
    Ok(found.first().map(|lp| lp.a_star))
}

pub fn verify_report(cfg: &ShotConfig) -> Result<VerifyReport, CliError> {
    let grid = uniform_grid(-10.0, 10.0, 2000);
    let sech = KnownSolution::sech();
    let sech2 = KnownSolution::sech2();
    let mut defect: f64 = 0.0;
    for ks in [&sech, &sech2] {
        let (lambda, _) = unstable_eigenpair(&ks.params_star)?;
        for s in quasi_random_states(REVERSIBILITY_SAMPLES, bounded_box(lambda)) {
            let d = verify_reversibility(&ks.params_star, &s, REVERSIBILITY_T, &cfg.ctrl)?;
            defect = defect.max(d);
        }
    }
    Ok(VerifyReport {
        residual_sech: closed_form_residual(&sech, &grid),
        residual_sech2: closed_form_residual(&sech2, &grid),
        reversibility_defect: defect,
        recovered_a_sech: recover(&sech, 0.01, cfg)?,
        recovered_a_sech2: recover(&sech2, 0.01, cfg)?,
    })
}

impl VerifyReport {
    pub fn passes(&self) -> bool {
        let close = |got: Option<f64>, want: f64| got.is_some_and(|a| (a - want).abs() <= RECOVERY_TOL);
        self.residual_sech < RESIDUAL_TOL
            && self.residual_sech2 < RESIDUAL_TOL
            && self.reversibility_defect <= REVERSIBILITY_TOL
            && close(self.recovered_a_sech, KnownSolution::sech().params_star.a)
            && close(self.recovered_a_sech2, KnownSolution::sech2().params_star.a)
    }
}

pub(crate) fn verify(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let report = verify_report(&ctx.cfg.shot.resolve())?;
    write_json(out, &report)?;
    if report.passes() {
        Ok(EXIT_OK)
    } else {
        eprintln!("verification failed");
        Ok(EXIT_NOT_FOUND)
    }
}

