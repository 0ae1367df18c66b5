//! Sweep of a rectangular `(a, b)` grid.
//!
//! Rows (fixed `b`) are independent work units. Each row is shot on both
//! manifold branches; sign changes of the k-th miss between neighbouring
//! cells are refined by bisection in `a`. Rows run on the rayon pool when the
//! `parallel` feature is enabled and are merged by a total sort, so output
//! does not depend on scheduling.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::ScanError;
use crate::homoclinic::{refine_root, shoot, sign_change_brackets, LocusPoint, MissProfile, ShotConfig, Sigma};
use crate::sysdef::{NonlinearitySpec, Params};

/// Upper bound on grid cells accepted by a scan.
pub const MAX_CELLS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    1e-2
}

impl GridSpec {
    pub fn new(a: (f64, f64), b: (f64, f64), step: f64) -> Self {
        Self {
            a_min: a.0,
            a_max: a.1,
            b_min: b.0,
            b_max: b.1,
            step,
        }
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        let vals = [self.a_min, self.a_max, self.b_min, self.b_max, self.step];
        if !vals.iter().all(|x| x.is_finite()) {
            return Err(ScanError::InvalidGrid("grid bounds must be finite"));
        }
        if self.a_min >= self.a_max {
            return Err(ScanError::InvalidGrid("need a_min < a_max"));
        }
        if self.b_min > self.b_max {
            return Err(ScanError::InvalidGrid("need b_min <= b_max"));
        }
        if self.step <= 0.0 {
            return Err(ScanError::InvalidGrid("step must be positive"));
        }
        let cells = self.cell_count();
        if cells > MAX_CELLS {
            return Err(ScanError::GridTooLarge(cells));
        }
        Ok(())
    }

    fn count(lo: f64, hi: f64, step: f64) -> u64 {
        // tolerate round-off in (hi - lo) / step
        let n = ((hi - lo) / step * (1.0 + 1e-12) + 1e-9).floor();
        if n.is_finite() && n >= 0.0 {
            n.min(u64::MAX as f64 / 4.0) as u64 + 1
        } else {
            u64::MAX / 4
        }
    }

    pub fn n_a(&self) -> u64 {
        Self::count(self.a_min, self.a_max, self.step)
    }

    pub fn n_b(&self) -> u64 {
        Self::count(self.b_min, self.b_max, self.step)
    }

    pub fn cell_count(&self) -> u64 {
        self.n_a().saturating_mul(self.n_b())
    }

    pub fn a_values(&self) -> Vec<f64> {
        (0..self.n_a())
            .map(|i| self.a_min + i as f64 * self.step)
            .collect()
    }

    pub fn b_values(&self) -> Vec<f64> {
        (0..self.n_b())
            .map(|j| self.b_min + j as f64 * self.step)
            .collect()
    }

    pub fn b_at(&self, row: usize) -> f64 {
        self.b_min + row as f64 * self.step
    }
}

/// How rows are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rows on the global rayon pool. Without the `parallel` feature this
    /// and `ParallelJobs` fall back to sequential execution.
    #[default]
    Parallel,
    /// Rows on a dedicated pool of the given size.
    ParallelJobs(usize),
}

/// Everything computed for one `b` row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowResult {
    pub row: usize,
    pub b: f64,
    /// Branch `Plus` cells in increasing `a`, then branch `Minus`.
    pub profiles: Vec<MissProfile>,
    pub loci: Vec<LocusPoint>,
}

fn shoot_row(
    a_values: &[f64],
    b: f64,
    spec: &NonlinearitySpec,
    cfg: &ShotConfig,
) -> Result<Vec<MissProfile>, ScanError> {
    let mut out = Vec::with_capacity(2 * a_values.len());
    for sigma in Sigma::BOTH {
        let cfg = cfg.with_sigma(sigma);
        for &a in a_values {
            let p = Params::new(a, b, spec.clone())
                .map_err(|_| ScanError::InvalidGrid("grid values must be finite"))?;
            out.push(shoot(&p, &cfg)?);
        }
    }
    Ok(out)
}

/// Refines every sign-change bracket of one row and one branch; `profiles`
/// must be sorted by increasing `a`.
fn row_loci(
    profiles: &[&MissProfile],
    b: f64,
    spec: &NonlinearitySpec,
    cfg: &ShotConfig,
    sigma: Sigma,
) -> Vec<LocusPoint> {
    let cfg = cfg.with_sigma(sigma);
    let mut out = Vec::new();
    for (i, j, k) in sign_change_brackets(profiles, cfg.k_max) {
        let bracket = (profiles[i].params.a, profiles[j].params.a);
        match refine_root(b, spec, bracket, &cfg, k) {
            Ok(lp) => out.push(lp),
            Err(e) => log::debug!("b={b} {sigma:?} [{}, {}] k={k}: {e}", bracket.0, bracket.1),
        }
    }
    out
}

/// Total order used for merged locus lists: `(b, sigma, k, a_star)`.
pub fn sort_loci(loci: &mut [LocusPoint]) {
    loci.sort_by(|x, y| {
        x.b.total_cmp(&y.b)
            .then(x.sigma.cmp(&y.sigma))
            .then(x.k.cmp(&y.k))
            .then(x.a_star.total_cmp(&y.a_star))
    });
}

/// Drops loci of the same row and branch closer than `min_gap` in `a`,
/// keeping the one with the smaller residual. Returns the result sorted.
pub fn dedup_loci(mut loci: Vec<LocusPoint>, min_gap: f64) -> Vec<LocusPoint> {
    loci.sort_by(|x, y| {
        x.b.total_cmp(&y.b)
            .then(x.sigma.cmp(&y.sigma))
            .then(x.a_star.total_cmp(&y.a_star))
    });
    let mut kept: Vec<LocusPoint> = Vec::with_capacity(loci.len());
    for lp in loci {
        match kept.last_mut() {
            Some(prev)
                if prev.b == lp.b && prev.sigma == lp.sigma && lp.a_star - prev.a_star < min_gap =>
            {
                if lp.miss_residual.abs() < prev.miss_residual.abs() {
                    *prev = lp;
                }
            }
            _ => kept.push(lp),
        }
    }
    sort_loci(&mut kept);
    kept
}

/// Shoots and refines one row.
pub fn scan_row(
    g: &GridSpec,
    row: usize,
    spec: &NonlinearitySpec,
    cfg: &ShotConfig,
) -> Result<RowResult, ScanError> {
    let b = g.b_at(row);
    let a_values = g.a_values();
    let profiles = shoot_row(&a_values, b, spec, cfg)?;
    let n = a_values.len();
    let mut loci = Vec::new();
    for (chunk, sigma) in profiles.chunks(n).zip(Sigma::BOTH) {
        let refs: Vec<&MissProfile> = chunk.iter().collect();
        loci.extend(row_loci(&refs, b, spec, cfg, sigma));
    }
    let loci = dedup_loci(loci, g.step / 10.0);
    Ok(RowResult {
        row,
        b,
        profiles,
        loci,
    })
}

#[cfg(feature = "parallel")]
fn map_rows<T, F>(rows: &[usize], exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Sequential => rows.iter().map(|&r| f(r)).collect(),
        Execution::Parallel => rows.par_iter().map(|&r| f(r)).collect(),
        Execution::ParallelJobs(jobs) => match rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
        {
            Ok(pool) => pool.install(|| rows.par_iter().map(|&r| f(r)).collect()),
            Err(e) => {
                log::warn!("thread pool unavailable ({e}); scanning sequentially");
                rows.iter().map(|&r| f(r)).collect()
            }
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn map_rows<T, F>(rows: &[usize], _exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    rows.iter().map(|&r| f(r)).collect()
}

/// Runs every row not listed in `skip`, calling `on_row` as each finishes
/// (from worker threads, in completion order). Results are returned in row order.
pub fn scan_rows<F>(
    g: &GridSpec,
    spec: &NonlinearitySpec,
    cfg: &ShotConfig,
    exec: Execution,
    skip: &BTreeSet<usize>,
    on_row: F,
) -> Result<Vec<RowResult>, ScanError>
where
    F: Fn(&RowResult) + Sync + Send,
{
    g.validate()?;
    cfg.validate()?;
    let n_rows = g.n_b() as usize;
    let rows: Vec<usize> = (0..n_rows).filter(|r| !skip.contains(r)).collect();
    let done = AtomicUsize::new(0);
    let results = map_rows(&rows, exec, |row| {
        let res = scan_row(g, row, spec, cfg);
        if let Ok(r) = &res {
            on_row(r);
        }
        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
        log::info!("row {row} (b = {}) finished, {n}/{}", g.b_at(row), rows.len());
        res
    });
    results.into_iter().collect()
}

/// One profile per grid point per branch, in row order, then branch, then `a`.
pub fn scan_grid(
    g: &GridSpec,
    spec: &NonlinearitySpec,
    cfg: &ShotConfig,
) -> Result<Vec<MissProfile>, ScanError> {
    scan_grid_with(g, spec, cfg, Execution::default())
}

pub fn scan_grid_with(
    g: &GridSpec,
    spec: &NonlinearitySpec,
    cfg: &ShotConfig,
    exec: Execution,
) -> Result<Vec<MissProfile>, ScanError> {
    g.validate()?;
    cfg.validate()?;
    let a_values = g.a_values();
    let rows: Vec<usize> = (0..g.n_b() as usize).collect();
    let per_row = map_rows(&rows, exec, |row| shoot_row(&a_values, g.b_at(row), spec, cfg));
    let mut out = Vec::with_capacity(g.cell_count() as usize * 2);
    for r in per_row {
        out.extend(r?);
    }
    Ok(out)
}

/// Refines every bracket found in `profiles` (as produced by [`scan_grid`]).
pub fn extract_loci(
    profiles: &[MissProfile],
    g: &GridSpec,
    spec: &NonlinearitySpec,
    cfg: &ShotConfig,
) -> Vec<LocusPoint> {
    extract_loci_with(profiles, g, spec, cfg, Execution::default())
}

pub fn extract_loci_with(
    profiles: &[MissProfile],
    g: &GridSpec,
    spec: &NonlinearitySpec,
    cfg: &ShotConfig,
    exec: Execution,
) -> Vec<LocusPoint> {
    let mut groups: HashMap<(u64, Sigma), Vec<&MissProfile>> = HashMap::new();
    for p in profiles {
        groups
            .entry((p.params.b.to_bits(), p.sigma))
            .or_default()
            .push(p);
    }
    let mut keys: Vec<(u64, Sigma)> = groups.keys().copied().collect();
    keys.sort_by(|x, y| f64::from_bits(x.0).total_cmp(&f64::from_bits(y.0)).then(x.1.cmp(&y.1)));
    for v in groups.values_mut() {
        v.sort_by(|x, y| x.params.a.total_cmp(&y.params.a));
    }
    let idx: Vec<usize> = (0..keys.len()).collect();
    let per_group = map_rows(&idx, exec, |i| {
        let (bits, sigma) = keys[i];
        row_loci(&groups[&keys[i]], f64::from_bits(bits), spec, cfg, sigma)
    });
    dedup_loci(per_group.into_iter().flatten().collect(), g.step / 10.0)
}

/// Full scan: shoot every row, refine, merge.
pub fn scan_loci(
    g: &GridSpec,
    spec: &NonlinearitySpec,
    cfg: &ShotConfig,
    exec: Execution,
) -> Result<Vec<LocusPoint>, ScanError> {
    let rows = scan_rows(g, spec, cfg, exec, &BTreeSet::new(), |_| {})?;
    let mut loci: Vec<LocusPoint> = rows.into_iter().flat_map(|r| r.loci).collect();
    sort_loci(&mut loci);
    Ok(loci)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let g = GridSpec::new((-3.8, -3.7), (3.0, 3.0), 0.01);
        assert_eq!(g.n_a(), 11);
        assert_eq!(g.n_b(), 1);
        assert!((g.a_values()[10] + 3.7).abs() < 1e-12);
        let g = GridSpec::new((0.0, 0.005), (1.0, 1.0), 0.01);
        assert_eq!(g.n_a(), 1);
        assert!(g.validate().is_ok());
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new((1.0, 0.0), (0.0, 0.0), 0.1).validate().is_err());
        assert!(GridSpec::new((0.0, 1.0), (1.0, 0.0), 0.1).validate().is_err());
        assert!(GridSpec::new((0.0, 1.0), (0.0, 0.0), 0.0).validate().is_err());
        let big = GridSpec::new((0.0, 100.0), (0.0, 100.0), 1e-2);
        assert!(matches!(big.validate(), Err(ScanError::GridTooLarge(_))));
    }

    #[test]
    fn dedup_keeps_best() {
        let lp = |a: f64, m: f64| LocusPoint {
            a_star: a,
            b: 1.0,
            sigma: Sigma::Plus,
            k: 2,
            miss_residual: m,
            lambda: 1.0,
        };
        let out = dedup_loci(vec![lp(0.5, 1e-9), lp(0.5005, 1e-10), lp(0.6, 1e-9)], 1e-3);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].a_star, 0.5005);
        let mut other = lp(0.5, 1e-9);
        other.sigma = Sigma::Minus;
        assert_eq!(dedup_loci(vec![lp(0.5, 1e-9), other], 1e-3).len(), 2);
    }

    #[test]
    fn single_row_locates_sech2_value() {
        let g = GridSpec::new((-3.8, -3.7), (3.0, 3.0), 0.01);
        let spec = NonlinearitySpec::sech2_family();
        let cfg = ShotConfig::default();
        let profiles = scan_grid_with(&g, &spec, &cfg, Execution::Sequential).unwrap();
        assert_eq!(profiles.len(), 22);
        let loci = extract_loci(&profiles, &g, &spec, &cfg);
        assert!(loci.iter().any(|lp| (lp.a_star + 3.75).abs() < 1e-4));
    }
}
