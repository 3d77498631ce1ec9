//! Empirical small-ball CDF of the MMSE error against its theoretical bounds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::results::write_atomic;
use super::run::prepare_out_dir;
use crate::error::Result;
use crate::model::{ErrorSampler, GaussianModel, PowerLawErrorModel};
use crate::montecarlo::{default_gaussian_grid, estimate_smallball, log_spaced, SmallBallEstimate};
use crate::rng::Seed;
use crate::theory::{gaussian_smallball_params, powerlaw_smallball_bounds};

pub const SMALLBALL_FILE: &str = "smallball.csv";
const STREAM_SMALLBALL: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorModelSelection {
    Gaussian { d: usize, sigma_x: f64, sigma_n: f64 },
    PowerLaw { d: usize, beta: f64, r_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallBallSpec {
    pub model: ErrorModelSelection,
    pub trials: usize,
    /// `None` uses 16 log-spaced points over `[1e-4, 1]` times the natural scale
    /// (`d * sigma_g2` for the Gaussian model, `r_max^2` for the power law).
    pub a_grid: Option<Vec<f64>>,
    pub seed_root: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallRow {
    pub model: String,
    pub d: usize,
    pub beta: Option<f64>,
    pub a: f64,
    pub prob_empirical: f64,
    pub bound_lower: Option<f64>,
    pub bound_upper: Option<f64>,
    pub fitted_alpha: f64,
    pub alpha_theory: f64,
}

fn rows_from<F>(model: &str, d: usize, beta: Option<f64>, est: &SmallBallEstimate, alpha: f64, bounds: F) -> Vec<SmallBallRow>
where
    F: Fn(f64) -> (Option<f64>, Option<f64>),
{
    est.a_grid
        .iter()
        .zip(&est.prob)
        .map(|(&a, &p)| {
            let (bound_lower, bound_upper) = bounds(a);
            SmallBallRow {
                model: model.to_string(),
                d,
                beta,
                a,
                prob_empirical: p,
                bound_lower,
                bound_upper,
                fitted_alpha: est.fitted_alpha,
                alpha_theory: alpha,
            }
        })
        .collect()
}

pub fn smallball_rows(spec: &SmallBallSpec) -> Result<Vec<SmallBallRow>> {
    let seed = Seed::new(spec.seed_root).child(STREAM_SMALLBALL);
    match spec.model {
        ErrorModelSelection::Gaussian { d, sigma_x, sigma_n } => {
            let m = GaussianModel::from_std(d, sigma_x, sigma_n)?;
            let grid = spec.a_grid.clone().unwrap_or_else(|| default_gaussian_grid(&m));
            let est = estimate_smallball(&m, spec.trials, &grid, &seed)?;
            // The error density peaks at the origin, which gives an upper bound only.
            let p = gaussian_smallball_params(&m);
            Ok(rows_from("gaussian", d, None, &est, m.alpha_theory(), |a| {
                (None, Some(p.c() * a.powf(p.alpha())))
            }))
        }
        ErrorModelSelection::PowerLaw { d, beta, r_max } => {
            let m = PowerLawErrorModel::new(d, beta, r_max)?;
            let grid = spec
                .a_grid
                .clone()
                .unwrap_or_else(|| log_spaced(1e-4 * r_max * r_max, r_max * r_max, 16));
            let est = estimate_smallball(&m, spec.trials, &grid, &seed)?;
            let c = m.density_constant();
            let rows = rows_from("powerlaw", d, Some(beta), &est, m.alpha_theory(), |a| {
                // The density bounds hold on the support radius only.
                if a <= r_max * r_max {
                    let (lo, hi) = powerlaw_smallball_bounds(d, beta, c, c, a).expect("validated model");
                    (Some(lo), Some(hi))
                } else {
                    (None, None)
                }
            });
            Ok(rows)
        }
    }
}

pub fn smallball_csv(rows: &[SmallBallRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Writes `smallball.csv` into the configured output directory.
pub fn run_smallball(spec: &SmallBallSpec) -> Result<PathBuf> {
    let rows = smallball_rows(spec)?;
    prepare_out_dir(&spec.out_dir)?;
    let path = spec.out_dir.join(SMALLBALL_FILE);
    write_atomic(&path, &smallball_csv(&rows))?;
    Ok(path)
}

pub fn read_smallball(path: &Path) -> Result<Vec<SmallBallRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::error::Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| crate::error::Error::MalformedCsv {
                row: i + 2,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(model: ErrorModelSelection, dir: &Path) -> SmallBallSpec {
        SmallBallSpec {
            model,
            trials: 200_000,
            a_grid: None,
            seed_root: 5,
            out_dir: dir.to_path_buf(),
        }
    }

    #[test]
    fn gaussian_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = run_smallball(&spec(
            ErrorModelSelection::Gaussian { d: 2, sigma_x: 1.0, sigma_n: 1.0 },
            dir.path(),
        ))
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("model,d,beta,a,prob_empirical,bound_lower,bound_upper,fitted_alpha,alpha_theory\n"));
        let rows = read_smallball(&path).unwrap();
        assert_eq!(rows.len(), 16);
        for r in &rows {
            assert_eq!(r.alpha_theory, 1.0);
            assert!(r.beta.is_none() && r.bound_lower.is_none());
            let se = (r.prob_empirical * (1.0 - r.prob_empirical) / 200_000.0).sqrt();
            assert!(r.prob_empirical <= r.bound_upper.unwrap() + 3.0 * se);
        }
    }

    #[test]
    fn powerlaw_rows_bracket_the_empirical_cdf() {
        let dir = tempfile::tempdir().unwrap();
        let rows = smallball_rows(&spec(
            ErrorModelSelection::PowerLaw { d: 1, beta: 1.0, r_max: 1.5 },
            dir.path(),
        ))
        .unwrap();
        for r in &rows {
            assert_eq!(r.alpha_theory, 1.0);
            assert_eq!(r.beta, Some(1.0));
            let se = (r.prob_empirical * (1.0 - r.prob_empirical) / 200_000.0).sqrt();
            let (lo, hi) = (r.bound_lower.unwrap(), r.bound_upper.unwrap());
            assert!(lo - 3.0 * se <= r.prob_empirical && r.prob_empirical <= hi + 3.0 * se, "{r:?}");
        }
    }
}
