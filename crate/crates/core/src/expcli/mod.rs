//! Experiment runner behind the `klist` binary: sweep configuration, the
//! results table, SVG figures, small-ball tables and closed-form reports.

pub mod config;
pub mod plot;
pub mod results;
pub mod run;
pub mod smallball;

use std::fmt::Write as _;

pub use config::{default_k_grid, ExperimentSpec, Overrides};
pub use plot::{render_plots, render_svg, Series};
pub use results::{parse_results, read_results, write_results, ResultRow, RESULT_COLUMNS};
pub use run::{run_experiment, sweep_rows, RunOutput, MANIFEST_FILE, RESULTS_FILE};
pub use smallball::{run_smallball, smallball_rows, ErrorModelSelection, SmallBallRow, SmallBallSpec};

use crate::error::Result;
use crate::model::GaussianModel;
use crate::theory::{gaussian_d1_highrate, gaussian_d2_lower, ZadorConstants};

/// Closed-form quantities of one Gaussian model: a short header followed by a
/// CSV block `k,d1_highrate_leading,d2_lower_bound`.
pub fn theory_report(d: usize, sigma_x: f64, sigma_n: f64, ks: &[usize]) -> Result<String> {
    let m = GaussianModel::from_std(d, sigma_x, sigma_n)?;
    let zc = ZadorConstants::default();
    let g = zc.get(d);
    let mut s = String::new();
    let _ = writeln!(s, "# d = {d}, sigma_x = {sigma_x}, sigma_n = {sigma_n}");
    let _ = writeln!(s, "# gain = {}", m.gain());
    let _ = writeln!(s, "# posterior_var = {}", m.posterior_var());
    let _ = writeln!(s, "# mmse = {}", m.mmse());
    let _ = writeln!(s, "# sigma_g2 = {}", m.sigma_g2());
    let _ = writeln!(s, "# G_d = {} ({})", g.value, g.provenance.as_str());
    let _ = writeln!(s, "k,d1_highrate_leading,d2_lower_bound");
    for &k in ks {
        crate::error::check(k >= 1, "k", "list size must be at least 1")?;
        let _ = writeln!(s, "{k},{},{}", gaussian_d1_highrate(&m, k, &zc)?, gaussian_d2_lower(&m, k));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_report_scalar() {
        let r = theory_report(1, 1.0, 1.0, &[1, 10]).unwrap();
        assert!(r.contains("# mmse = 0.5\n"));
        let line = r.lines().find(|l| l.starts_with("10,")).unwrap();
        let d1: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((d1 - 0.013_603_50).abs() < 1e-8);
        assert!(theory_report(0, 1.0, 1.0, &[1]).is_err());
        assert!(theory_report(1, 1.0, 1.0, &[0]).is_err());
    }
}
