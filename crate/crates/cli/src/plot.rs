//! `plot-data`: CSV point sets for the model figures. No rendering.
//!
//! * `level_curves.csv`   `u,du,E` for the first integral `du^2/2 - u^2/2 + u^4/2`
//!   of the second-order reduction `u'' = u - 2u^3`
//! * `potential.csv`      `u,V` with `V = -u^2/2 + u^4/2`
//! * `energy_surface.csv` `u,v,p_v` on `p_v^2/2 + a v^2/2 + u^2/2 - F(u, b) = 0`
//! * `chi_set.csv`        `u,p_v` on the zero-energy part of `v = p_u = 0`
//! * `orbit_homoclinic.csv`, `orbit_perturbed.csv`  trajectories at `a*` and `a* + 0.01`
//! * `locus.csv`          scan of the configured grid (only when one is given)

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use homoclinic_core::homoclinic::{find_homoclinic, reconstruct_orbit, shoot_path};
use homoclinic_core::io::{fmt17, write_locus_csv, write_trajectory_csv};
use homoclinic_core::scan::scan_loci;
use homoclinic_core::{KnownSolution, NonlinearitySpec, Params};

use crate::scan_cmd::execution;
use crate::{CliError, Context, EXIT_NOT_FOUND, EXIT_OK};

pub const PERTURBATION: f64 = 1e-2;
const SEARCH_HALF_WIDTH: f64 = 1e-2;

fn csv(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn steps(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

fn write_level_curves(dir: &Path) -> Result<(), CliError> {
    let mut w = csv(dir, "level_curves.csv")?;
    writeln!(w, "u,du,E")?;
    for u in steps(-1.5, 1.5, 150) {
        for du in steps(-1.0, 1.0, 100) {
            let e = 0.5 * du * du - 0.5 * u * u + 0.5 * u.powi(4);
            writeln!(w, "{},{},{}", fmt17(u), fmt17(du), fmt17(e))?;
        }
    }
    w.flush()?;

    let mut w = csv(dir, "potential.csv")?;
    writeln!(w, "u,V")?;
    for u in steps(-1.5, 1.5, 600) {
        writeln!(w, "{},{}", fmt17(u), fmt17(-0.5 * u * u + 0.5 * u.powi(4)))?;
    }
    w.flush()?;
    Ok(())
}

fn write_energy_sets(dir: &Path, p: &Params) -> Result<(), CliError> {
    let mut w = csv(dir, "energy_surface.csv")?;
    writeln!(w, "u,v,p_v")?;
    for u in steps(-1.5, 1.5, 150) {
        for v in steps(-1.5, 1.5, 150) {
            let rhs = 2.0 * (p.primitive(u) - 0.5 * u * u - 0.5 * p.a * v * v);
            if rhs >= 0.0 {
                let pv = rhs.sqrt();
                writeln!(w, "{},{},{}", fmt17(u), fmt17(v), fmt17(pv))?;
                if pv > 0.0 {
                    writeln!(w, "{},{},{}", fmt17(u), fmt17(v), fmt17(-pv))?;
                }
            }
        }
    }
    w.flush()?;

    let mut w = csv(dir, "chi_set.csv")?;
    writeln!(w, "u,p_v")?;
    for u in steps(-1.5, 1.5, 1200) {
        let rhs = 2.0 * (p.primitive(u) - 0.5 * u * u);
        if rhs >= 0.0 {
            let pv = rhs.sqrt();
            writeln!(w, "{},{}", fmt17(u), fmt17(pv))?;
            if pv > 0.0 {
                writeln!(w, "{},{}", fmt17(u), fmt17(-pv))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Homoclinic orbit near `p.a` and the shot at `a* + 0.01`. Returns whether
/// an orbit was found.
fn write_orbits(dir: &Path, p: &Params, ctx: &Context) -> Result<bool, CliError> {
    let cfg = ctx.cfg.shot.resolve();
    let bracket = (p.a - SEARCH_HALF_WIDTH, p.a + SEARCH_HALF_WIDTH);
    let found = find_homoclinic(p.b, &p.nonlinearity, bracket, &cfg, 4)?;
    let found: Vec<_> = found
        .into_iter()
        .filter(|lp| ctx.cfg.sigma.is_none_or(|s| s == lp.sigma))
        .collect();
    let Some(lp) = found.first() else {
        log::warn!("no homoclinic value within {SEARCH_HALF_WIDTH} of a = {}", p.a);
        return Ok(false);
    };
    let orbit = reconstruct_orbit(lp, &p.nonlinearity, &cfg)?;
    let p_star = p.with_a(lp.a_star);
    let mut w = csv(dir, "orbit_homoclinic.csv")?;
    write_trajectory_csv(&mut w, &orbit, &p_star)?;
    w.flush()?;

    let p_pert = p.with_a(lp.a_star + PERTURBATION);
    let cfg_pert = cfg.with_sigma(lp.sigma);
    let (profile, path) = shoot_path(&p_pert, &cfg_pert)?;
    let path = path.ok_or_else(|| {
        CliError::Failed(format!(
            "perturbed shot failed: {}",
            profile.failure.map(|e| e.to_string()).unwrap_or_default()
        ))
    })?;
    let mut w = csv(dir, "orbit_perturbed.csv")?;
    write_trajectory_csv(&mut w, &path, &p_pert)?;
    w.flush()?;
    eprintln!(
        "a* = {} (sigma {}, k {}); perturbed shot {}",
        lp.a_star,
        lp.sigma.as_int(),
        lp.k,
        profile.outcome.label()
    );
    Ok(true)
}

pub(crate) fn plot_data(ctx: &Context, out: &mut dyn Write) -> Result<i32, CliError> {
    let dir = ctx.require_out()?;
    let p = match &ctx.cfg.nonlinearity {
        Some(spec) => Params::new(ctx.cfg.require_a()?, ctx.cfg.require_b()?, spec.clone())
            .map_err(|e| CliError::Config(e.to_string()))?,
        None => {
            let ks = KnownSolution::sech().params_star;
            let a = ctx.cfg.a.unwrap_or(ks.a);
            let b = ctx.cfg.b.unwrap_or(ks.b);
            Params::new(a, b, NonlinearitySpec::sech_family())
                .map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    fs::create_dir_all(&dir)?;
    write_level_curves(&dir)?;
    write_energy_sets(&dir, &p)?;
    let orbit_found = write_orbits(&dir, &p, ctx)?;

    if let Some(grid) = ctx.cfg.grid {
        let exec = execution(ctx.jobs);
        let loci = scan_loci(&grid, &p.nonlinearity, &ctx.cfg.shot.resolve(), exec)?;
        let mut w = csv(&dir, "locus.csv")?;
        write_locus_csv(&mut w, &loci)?;
        w.flush()?;
    }
    writeln!(out, "plot data written to {}", dir.display())?;
    Ok(if orbit_found { EXIT_OK } else { EXIT_NOT_FOUND })
}
