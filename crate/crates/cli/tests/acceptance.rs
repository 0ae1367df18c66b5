//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.
//!
//! Run with `cargo test --release -p homoclinic-cli --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use homoclinic_cli::commands::bounded_box;
use homoclinic_core::homoclinic::{
    junction_time, reconstruct_orbit, seed_unstable, shoot, tail_decay_rate, verify_reversibility,
};
use homoclinic_core::integrate::{integrate_with, Flow};
use homoclinic_core::known::{closed_form_residual, uniform_grid};
use homoclinic_core::scan::scan_loci;
use homoclinic_core::spectral::{classify_linear, unstable_eigenpair};
use homoclinic_core::sysdef::{hamiltonian, reversal};
use homoclinic_core::{
    Execution, HomoclinicError, KnownSolution, LocusPoint, Params, ShotConfig, State, StepControl,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn family_config(name: &str) -> PathBuf {
    configs_dir().join(format!("{name}.json"))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_homoclinic"))
}

/// The known solution with its bundled config and search bracket.
fn families() -> [(KnownSolution, &'static str, (f64, f64)); 2] {
    [
        (KnownSolution::sech2(), "sech2", (-3.76, -3.74)),
        (KnownSolution::sech(), "sech", (0.70, 0.72)),
    ]
}

fn find_via_cli(name: &str, b: f64, bracket: (f64, f64)) -> Result<(LocusPoint, Duration), String> {
    let start = Instant::now();
    let out = bin()
        .arg("--config")
        .arg(family_config(name))
        .args(["find", "--b", &b.to_string(), "--bracket"])
        .args([bracket.0.to_string(), bracket.1.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "{name}: exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    let lp = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    Ok((lp, took))
}

fn root(ks: &KnownSolution, name: &str, bracket: (f64, f64)) -> Result<LocusPoint, String> {
    find_via_cli(name, ks.params_star.b, bracket).map(|(lp, _)| lp)
}

fn c1_closed_form() -> Outcome {
    let grid = uniform_grid(-10.0, 10.0, 2000);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (ks, name, _) in families() {
        let r = closed_form_residual(&ks, &grid);
        worst = worst.max(r);
        parts.push(format!("{name} {r:.2e}"));
    }
    check(worst < 1e-8, format!("max residual: {} (< 1e-8)", parts.join(", ")))
}

fn c2_spectral() -> Outcome {
    let s = classify_linear(-3.75, 1.0);
    let e_lambda = (s.lambda.unwrap_or(f64::NAN) - 2.0).abs();
    let e_omega = (s.omega.unwrap_or(f64::NAN) - 0.5).abs();
    let t = classify_linear(std::f64::consts::FRAC_1_SQRT_2, 1.0);
    let e_sech = (t.lambda.unwrap_or(f64::NAN) - 2f64.powf(-0.25)).abs();
    let worst = e_lambda.max(e_omega).max(e_sech);
    check(
        worst < 1e-12,
        format!("|dlambda| {e_lambda:.1e}, |domega| {e_omega:.1e}, |dlambda_sech| {e_sech:.1e} (< 1e-12)"),
    )
}

fn c3_recovery() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (ks, name, bracket) in families() {
        let want = ks.params_star.a;
        match find_via_cli(name, ks.params_star.b, bracket) {
            Ok((lp, took)) => {
                let err = (lp.a_star - want).abs();
                ok &= err < 1e-4 && took < Duration::from_secs(30);
                parts.push(format!("{name} a* = {:.11} |err| {err:.1e} in {:.2}s", lp.a_star, took.as_secs_f64()));
            }
            Err(e) => {
                ok = false;
                parts.push(e);
            }
        }
    }
    check(ok, parts.join("; "))
}

fn c4_perturbation() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let cfg = ShotConfig::default();
    for (ks, name, bracket) in families() {
        let lp = root(&ks, name, bracket)?;
        let spec = &ks.params_star.nonlinearity;
        let p = Params::new(lp.a_star + 0.01, lp.b, spec.clone()).map_err(|e| e.to_string())?;
        let prof = shoot(&p, &cfg.with_sigma(lp.sigma)).map_err(|e| e.to_string())?;
        let miss = prof.miss(lp.k);
        let perturbed = LocusPoint {
            a_star: lp.a_star + 0.01,
            ..lp
        };
        let refused = matches!(
            reconstruct_orbit(&perturbed, spec, &cfg),
            Err(HomoclinicError::MissTooLarge { .. }) | Err(HomoclinicError::CrossingAbsent { .. })
        );
        let big = miss.is_none_or(|m| m.abs() > 1e-4);
        ok &= big && refused;
        parts.push(format!(
            "{name} miss {} refused={refused}",
            miss.map_or("absent".to_string(), |m| format!("{m:.2e}"))
        ));
    }
    check(ok, format!("{} (|miss| > 1e-4)", parts.join(", ")))
}

fn c5_cascade() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let cfg = ShotConfig::default();
    for (ks, name, _) in families() {
        let run: homoclinic_cli::RunConfig =
            serde_json::from_str(&std::fs::read_to_string(family_config(name)).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        let grid = run.grid.ok_or("bundled config lacks a grid")?;
        let (pa, pb) = (ks.params_star.a, ks.params_star.b);
        let area_ok = grid.a_max - grid.a_min >= 0.5 - 1e-12
            && grid.b_max - grid.b_min >= 0.5 - 1e-12
            && (grid.a_min..=grid.a_max).contains(&pa)
            && (grid.b_min..=grid.b_max).contains(&pb)
            && grid.step <= 1e-2;
        let loci = scan_loci(&grid, &ks.params_star.nonlinearity, &cfg, Execution::Parallel)
            .map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for lp in &loci {
            let p = Params::new(lp.a_star, lp.b, ks.params_star.nonlinearity.clone())
                .map_err(|e| e.to_string())?;
            let m = shoot(&p, &cfg.with_sigma(lp.sigma))
                .map_err(|e| e.to_string())?
                .miss(lp.k)
                .map_or(f64::INFINITY, f64::abs);
            worst = worst.max(m);
        }
        let near_known = loci
            .iter()
            .any(|lp| (lp.b - pb).abs() < 1e-9 && (lp.a_star - pa).abs() < 1e-4);
        ok &= area_ok && loci.len() >= 3 && worst <= 1e-7 && near_known;
        parts.push(format!(
            "{name}: {} loci, worst recertified |miss| {worst:.1e}, known point {}",
            loci.len(),
            if near_known { "found" } else { "MISSING" }
        ));
    }
    check(ok, parts.join("; "))
}

fn c6_invariants() -> Outcome {
    let ctrl = StepControl::default();
    let cfg = ShotConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;

    // Energy: from the manifold seed at the homoclinic value. The sech orbit
    // shadows its homoclinic loops for the whole horizon; the sech2 orbit
    // (lambda = 2) leaves the ball of radius 10 first and is followed until then.
    for (ks, name, bracket) in families() {
        let lp = root(&ks, name, bracket)?;
        let p = ks.params_star.with_a(lp.a_star);
        let s0 = seed_unstable(&p, &cfg.with_sigma(lp.sigma)).map_err(|e| e.to_string())?;
        let h0 = hamiltonian(&s0, &p);
        let (mut drift, mut t_end) = (0.0f64, 0.0);
        integrate_with(s0, &p, (0.0, 50.0), &ctrl, |seg, _| {
            let s = State::from_array(seg.y1);
            t_end = seg.t1;
            if s.norm() > cfg.r_max {
                return Flow::Stop;
            }
            drift = drift.max((hamiltonian(&s, &p) - h0).abs());
            Flow::Continue
        })
        .map_err(|e| e.to_string())?;
        ok &= drift <= 1e-9;
        if name == "sech" {
            ok &= t_end >= 50.0;
        }
        parts.push(format!("{name} drift {drift:.1e} over t = {t_end:.1}"));
    }

    let mut rng = StdRng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for (ks, _, _) in families() {
        let p = &ks.params_star;
        let (lambda, _) = unstable_eigenpair(p).map_err(|e| e.to_string())?;
        let r = bounded_box(lambda);
        for _ in 0..100 {
            let s = State::new(
                rng.random_range(-r..r),
                rng.random_range(-r..r),
                rng.random_range(-r..r),
                rng.random_range(-r..r),
            );
            let d = verify_reversibility(p, &s, 5.0, &ctrl).map_err(|e| e.to_string())?;
            worst = worst.max(d);
        }
    }
    ok &= worst <= 1e-8;
    parts.push(format!("reversibility defect {worst:.1e} on 2x100 states, t = 5"));
    check(ok, format!("{} (drift <= 1e-9, defect <= 1e-8)", parts.join(", ")))
}

fn c7_symmetry() -> Outcome {
    let cfg = ShotConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (ks, name, bracket) in families() {
        let lp = root(&ks, name, bracket)?;
        let tr = reconstruct_orbit(&lp, &ks.params_star.nonlinearity, &cfg).map_err(|e| e.to_string())?;
        let t_star = junction_time(&tr).ok_or("empty orbit")?;
        let half = t_star - tr.first().ok_or("empty orbit")?.0;
        let mut sym: f64 = 0.0;
        for i in 0..=2000 {
            let tau = half * i as f64 / 2000.0;
            let (Some(fwd), Some(back)) = (tr.eval(t_star + tau), tr.eval(t_star - tau)) else {
                return Err(format!("{name}: orbit not defined at t* +- {tau}"));
            };
            sym = sym.max(fwd.max_abs_diff(&reversal(&back)));
        }
        let rate = tail_decay_rate(&tr, 2.0 * cfg.epsilon).ok_or("tail too short")?;
        let rel = (rate + lp.lambda).abs() / lp.lambda;
        ok &= sym <= 1e-6 && rel <= 0.02;
        parts.push(format!("{name} symmetry {sym:.1e}, decay {rate:.4} vs -{:.4} ({:.2}%)", lp.lambda, 100.0 * rel));
    }
    check(ok, format!("{} (<= 1e-6, within 2%)", parts.join("; ")))
}

fn c8_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["sech2", "sech"] {
        let mut csvs = Vec::new();
        for jobs in ["1", "4"] {
            let dir = tmp.path().join(format!("{name}-{jobs}"));
            let out = bin()
                .arg("--config")
                .arg(family_config(name))
                .args(["--jobs", jobs, "--out"])
                .arg(&dir)
                .arg("scan")
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!("{name} scan --jobs {jobs} exit {:?}", out.status.code()));
            }
            csvs.push(std::fs::read(dir.join("locus.csv")).map_err(|e| e.to_string())?);
        }
        let same = csvs[0] == csvs[1];
        ok &= same;
        parts.push(format!(
            "{name} {} ({} bytes)",
            if same { "identical" } else { "DIFFER" },
            csvs[0].len()
        ));
    }
    check(ok, format!("--jobs 1 vs 4: {}", parts.join(", ")))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("closed-form residuals", c1_closed_form),
        ("spectral exactness", c2_spectral),
        ("homoclinic value recovery", c3_recovery),
        ("perturbation sensitivity", c4_perturbation),
        ("cascade multiplicity", c5_cascade),
        ("energy and reversibility", c6_invariants),
        ("orbit symmetry and decay", c7_symmetry),
        ("scan determinism", c8_determinism),
    ];
    let mut failed = 0;
    for (i, (label, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {tag} [{label}] {detail} ({secs:.2}s)", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
