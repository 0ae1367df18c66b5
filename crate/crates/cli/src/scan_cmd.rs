//! `scan`: locus CSV, manifest, and per-row checkpoints for `--resume`.
//!
//! Layout of the output directory:
//!
//! ```text
//! manifest.json
//! locus.csv
//! profiles.csv          (with --raw)
//! rows/row_000012.json  one finished row: its b and loci
//! rows/row_000012.csv   its raw profiles (with --raw)
//! ```

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use homoclinic_core::io::{write_locus_csv, write_profile_rows, PROFILE_HEADER};
use homoclinic_core::scan::{scan_rows, sort_loci, GridSpec, RowResult};
use homoclinic_core::{Execution, LocusPoint, NonlinearitySpec, ShotConfig};
use serde::{Deserialize, Serialize};

use crate::{CliError, Context, EXIT_NOT_FOUND, EXIT_OK};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCUS_FILE: &str = "locus.csv";
pub const PROFILES_FILE: &str = "profiles.csv";
const ROWS_DIR: &str = "rows";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub grid: GridSpec,
    pub nonlinearity: NonlinearitySpec,
    pub shot: ShotConfig,
    pub rows_total: usize,
    pub rows_completed: usize,
    pub loci: usize,
    pub wall_time_s: f64,
    pub complete: bool,
}

impl Manifest {
    fn same_run(&self, other: &Manifest) -> bool {
        self.grid == other.grid && self.nonlinearity == other.nonlinearity && self.shot == other.shot
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowCheckpoint {
    row: usize,
    b: f64,
    loci: Vec<LocusPoint>,
}

fn row_path(dir: &Path, row: usize, ext: &str) -> PathBuf {
    dir.join(ROWS_DIR).join(format!("row_{row:06}.{ext}"))
}

/// Writes through a temporary file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(m).map_err(|e| CliError::Failed(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST_FILE), format!("{text}\n").as_bytes())?;
    Ok(())
}

fn read_manifest(dir: &Path) -> Result<Option<Manifest>, CliError> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_checkpoint(dir: &Path, row: usize, raw: bool) -> Option<RowCheckpoint> {
    if raw && !row_path(dir, row, "csv").exists() {
        return None;
    }
    let text = fs::read_to_string(row_path(dir, row, "json")).ok()?;
    match serde_json::from_str::<RowCheckpoint>(&text) {
        Ok(cp) if cp.row == row => Some(cp),
        _ => {
            log::warn!("ignoring unreadable checkpoint for row {row}");
            None
        }
    }
}

fn save_checkpoint(dir: &Path, r: &RowResult, raw: bool) -> Result<(), CliError> {
    if raw {
        let mut buf = Vec::new();
        write_profile_rows(&mut buf, &r.profiles)?;
        write_atomic(&row_path(dir, r.row, "csv"), &buf)?;
    }
    let cp = RowCheckpoint {
        row: r.row,
        b: r.b,
        loci: r.loci.clone(),
    };
    let text = serde_json::to_string(&cp).map_err(|e| CliError::Failed(e.to_string()))?;
    write_atomic(&row_path(dir, r.row, "json"), text.as_bytes())?;
    Ok(())
}

fn clear_checkpoints(dir: &Path) -> io::Result<()> {
    let rows = dir.join(ROWS_DIR);
    if !rows.exists() {
        return Ok(());
    }
    for entry in fs::read_dir(&rows)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("row_") {
            fs::remove_file(&path)?;
        }
    }
    Ok(())
}

pub(crate) fn execution(jobs: Option<usize>) -> Execution {
    match jobs {
        None => Execution::Parallel,
        Some(1) => Execution::Sequential,
        Some(n) => Execution::ParallelJobs(n),
    }
}

pub(crate) fn scan(ctx: &Context, raw: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let started = Instant::now();
    let grid = ctx.cfg.require_grid()?;
    let spec = ctx.cfg.nonlinearity()?;
    let shot = ctx.cfg.shot.resolve();
    let dir = ctx.require_out()?;
    let n_rows = grid.n_b() as usize;

    let mut manifest = Manifest {
        tool: "homoclinic".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        grid,
        nonlinearity: spec.clone(),
        shot,
        rows_total: n_rows,
        rows_completed: 0,
        loci: 0,
        wall_time_s: 0.0,
        complete: false,
    };

    fs::create_dir_all(dir.join(ROWS_DIR))?;
    let mut done: Vec<RowCheckpoint> = Vec::new();
    let mut prior_time = 0.0;
    match (ctx.resume, read_manifest(&dir)?) {
        (true, Some(prev)) => {
            if !prev.same_run(&manifest) {
                return Err(CliError::Config(format!(
                    "{} describes a different run; refusing to resume",
                    dir.join(MANIFEST_FILE).display()
                )));
            }
            prior_time = prev.wall_time_s;
            done = (0..n_rows).filter_map(|r| load_checkpoint(&dir, r, raw)).collect();
            log::info!("resuming: {}/{n_rows} rows already complete", done.len());
        }
        (true, None) => {
            log::warn!("no manifest in {}; starting a fresh scan", dir.display());
            clear_checkpoints(&dir)?;
        }
        (false, _) => clear_checkpoints(&dir)?,
    }
    manifest.rows_completed = done.len();
    write_manifest(&dir, &manifest)?;

    let skip: BTreeSet<usize> = done.iter().map(|cp| cp.row).collect();
    let save_error: Mutex<Option<CliError>> = Mutex::new(None);
    let fresh = scan_rows(&grid, &spec, &shot, execution(ctx.jobs), &skip, |r| {
        if let Err(e) = save_checkpoint(&dir, r, raw) {
            save_error.lock().expect("poisoned").get_or_insert(e);
        }
    })?;
    if let Some(e) = save_error.into_inner().expect("poisoned") {
        return Err(e);
    }

    let mut loci: Vec<LocusPoint> = done
        .into_iter()
        .flat_map(|cp| cp.loci)
        .chain(fresh.into_iter().flat_map(|r| r.loci))
        .collect();
    sort_loci(&mut loci);

    let mut w = BufWriter::new(File::create(dir.join(LOCUS_FILE))?);
    write_locus_csv(&mut w, &loci)?;
    w.flush()?;

    if raw {
        let mut w = BufWriter::new(File::create(dir.join(PROFILES_FILE))?);
        writeln!(w, "{PROFILE_HEADER}")?;
        for row in 0..n_rows {
            w.write_all(&fs::read(row_path(&dir, row, "csv"))?)?;
        }
        w.flush()?;
    }

    manifest.rows_completed = n_rows;
    manifest.loci = loci.len();
    manifest.complete = true;
    manifest.wall_time_s = prior_time + started.elapsed().as_secs_f64();
    write_manifest(&dir, &manifest)?;

    writeln!(
        out,
        "{} loci written to {}",
        loci.len(),
        dir.join(LOCUS_FILE).display()
    )?;
    Ok(if loci.is_empty() { EXIT_NOT_FOUND } else { EXIT_OK })
}
