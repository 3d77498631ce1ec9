//! Main sweep over (d, sigma_n, k).

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentSpec;
use super::plot::render_plots;
use super::results::{write_atomic, write_results, ResultRow};
use crate::error::{Error, Result};
use crate::model::GaussianModel;
use crate::montecarlo::{estimate_d1_sweep, estimate_d2, Estimator};
use crate::rng::Seed;
use crate::theory::{TheoryCurve, ZadorConstants};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

const STREAM_D1: u64 = 1;
const STREAM_D2: u64 = 2;

/// Stream for one (estimator, d, sigma_n) cell. Keyed by the noise level's
/// bits rather than its list position, so editing the list leaves other cells unchanged.
fn cell_seed(root: u64, stream: u64, d: usize, sigma_n: f64) -> Seed {
    Seed::new(root).descend(&[stream, d as u64, sigma_n.to_bits()])
}

fn cell_rows(spec: &ExperimentSpec, d: usize, sigma_n: f64) -> Result<Vec<ResultRow>> {
    let model = GaussianModel::from_std(d, spec.sigma_x, sigma_n)?;
    let ks = &spec.k_grid;
    let d1_theory = TheoryCurve::gaussian_d1(&model, &ZadorConstants::default(), ks)?;
    let d2_theory = TheoryCurve::gaussian_d2(&model, ks)?;
    let row = |est: Estimator, k: usize, trials: usize, mean: f64, stderr: f64, curve: &TheoryCurve| ResultRow {
        estimator: est.as_str().to_string(),
        d,
        sigma_x: spec.sigma_x,
        sigma_n,
        k,
        trials,
        mean,
        stderr,
        theory_value: curve.value_at(k),
        theory_kind: curve.kind.as_str().to_string(),
        seed_root: spec.seed_root,
    };

    let mut rows = Vec::with_capacity(2 * ks.len());
    let sweep = estimate_d1_sweep(
        &model,
        ks,
        spec.trials_d1,
        &spec.fit,
        &cell_seed(spec.seed_root, STREAM_D1, d, sigma_n),
    )?;
    for (_, e) in &sweep {
        rows.push(row(e.estimator, e.k, e.trials, e.mean, e.stderr, &d1_theory));
    }
    let d2_seed = cell_seed(spec.seed_root, STREAM_D2, d, sigma_n);
    for &k in ks {
        let e = estimate_d2(&model, k, spec.trials_d2, &d2_seed)?;
        rows.push(row(e.estimator, k, e.trials, e.mean, e.stderr, &d2_theory));
    }
    Ok(rows)
}

/// All rows of the sweep, unsorted. Cells run in parallel.
pub fn sweep_rows(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let cells: Vec<(usize, f64)> = spec
        .dims
        .iter()
        .flat_map(|&d| spec.sigma_n_list.iter().map(move |&s| (d, s)))
        .collect();
    let per_cell = cells
        .par_iter()
        .map(|&(d, s)| cell_rows(spec, d, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

/// Spec echo prefixed by the tool version; it loads back as a config file.
pub fn manifest_text(spec: &ExperimentSpec, rows: usize) -> String {
    format!(
        "# klist {}\n# {RESULTS_FILE}: {rows} rows\n{}",
        env!("CARGO_PKG_VERSION"),
        spec.to_toml()
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub plots: Vec<PathBuf>,
    pub rows: usize,
}

pub fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = fs::metadata(dir).map_err(|e| Error::io(dir, e))?;
    if meta.permissions().readonly() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::PermissionDenied, "output directory is read-only"),
        ));
    }
    Ok(())
}

/// Runs the sweep and writes `results.csv`, `manifest.toml` and, if enabled, one SVG per dimension.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutput> {
    spec.validate()?;
    prepare_out_dir(&spec.out_dir)?;
    let mut rows = sweep_rows(spec)?;
    let csv_path = spec.out_dir.join(RESULTS_FILE);
    write_results(&csv_path, &mut rows)?;
    let manifest_path = spec.out_dir.join(MANIFEST_FILE);
    write_atomic(&manifest_path, manifest_text(spec, rows.len()).as_bytes())?;
    let plots = if spec.emit_plots {
        render_plots(&csv_path, &spec.out_dir)?
    } else {
        Vec::new()
    };
    Ok(RunOutput {
        csv_path,
        manifest_path,
        plots,
        rows: rows.len(),
    })
}
