//! Results CSV, manifest and SVG surfaces of a complete run.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use klist::expcli::{read_results, render_plots, run_experiment, ExperimentSpec, ResultRow};
use klist::FitConfig;

fn spec(out: &Path) -> ExperimentSpec {
    ExperimentSpec {
        dims: vec![1, 3],
        sigma_x: 1.0,
        sigma_n_list: vec![0.2, 1.0, 5.0],
        k_grid: vec![1, 2, 4, 8, 16],
        trials_d1: 500,
        trials_d2: 500,
        fit: FitConfig { n_train: Some(4_000), max_iters: 20, restarts: 2, ..Default::default() },
        seed_root: 77,
        out_dir: out.to_path_buf(),
        emit_plots: true,
    }
}

/// `(series, sigma_n, k, value)` for every marker element in an SVG.
fn markers(svg: &str) -> Vec<(String, f64, usize, f64)> {
    let attr = |tag: &str, name: &str| -> String {
        let key = format!("{name}=\"");
        let start = tag.find(&key).unwrap() + key.len();
        tag[start..].split('"').next().unwrap().to_string()
    };
    svg.split('<')
        .filter(|t| t.contains("class=\"marker\""))
        .map(|t| {
            (
                attr(t, "data-series"),
                attr(t, "data-sigma-n").parse().unwrap(),
                attr(t, "data-k").parse().unwrap(),
                attr(t, "data-value").parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn every_mean_is_a_marker() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&spec(dir.path())).unwrap();
    let rows = read_results(&out.csv_path).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3 * 5);
    assert_eq!(out.plots.len(), 2);
    for plot in &out.plots {
        let svg = fs::read_to_string(plot).unwrap();
        let d: usize = plot.file_stem().unwrap().to_str().unwrap()["fig_d".len()..].parse().unwrap();
        let found: HashSet<(String, u64, usize, u64)> = markers(&svg)
            .into_iter()
            .map(|(s, sn, k, v)| (s, sn.to_bits(), k, v.to_bits()))
            .collect();
        for r in rows.iter().filter(|r| r.d == d) {
            let series = format!("empirical_{}", r.estimator);
            assert!(found.contains(&(series, r.sigma_n.to_bits(), r.k, r.mean.to_bits())), "{r:?}");
            let series = format!("theory_{}", r.estimator);
            let t = r.theory_value.unwrap();
            assert!(found.contains(&(series, r.sigma_n.to_bits(), r.k, t.to_bits())), "{r:?}");
        }
        let series: HashSet<String> = markers(&svg).into_iter().map(|m| m.0).collect();
        assert_eq!(series.len(), 4);
    }
}

#[test]
fn dual_noise_levels_share_the_bound_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&spec(dir.path())).unwrap();
    let svg = fs::read_to_string(dir.path().join("fig_d1.svg")).unwrap();
    let bound = |sn: f64| -> Vec<(usize, u64)> {
        let mut v: Vec<_> = markers(&svg)
            .into_iter()
            .filter(|m| m.0 == "theory_d2" && m.1 == sn)
            .map(|m| (m.2, m.3.to_bits()))
            .collect();
        v.sort();
        v
    };
    let (lo, hi) = (bound(0.2), bound(5.0));
    assert_eq!(lo.len(), 5);
    for (a, b) in lo.iter().zip(&hi) {
        assert_eq!(a.0, b.0);
        let (x, y) = (f64::from_bits(a.1), f64::from_bits(b.1));
        assert!((x - y).abs() <= 1e-14 * x, "{x} vs {y}");
    }
    assert!(out.rows > 0);
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_experiment(&spec(a.path())).unwrap();
    let rb = run_experiment(&spec(b.path())).unwrap();
    assert_eq!(fs::read(&ra.csv_path).unwrap(), fs::read(&rb.csv_path).unwrap());
    for (pa, pb) in ra.plots.iter().zip(&rb.plots) {
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
    }
    let mut other = spec(b.path());
    other.seed_root = 78;
    let rc = run_experiment(&other).unwrap();
    assert_ne!(fs::read(&ra.csv_path).unwrap(), fs::read(&rc.csv_path).unwrap());
}

#[test]
fn single_candidate_estimators_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(dir.path());
    s.k_grid = vec![1];
    s.trials_d1 = 20_000;
    s.trials_d2 = 20_000;
    s.emit_plots = false;
    let rows = read_results(&run_experiment(&s).unwrap().csv_path).unwrap();
    let find = |est: &str, d: usize, sn: f64| -> ResultRow {
        rows.iter()
            .find(|r| r.estimator == est && r.d == d && r.sigma_n == sn)
            .unwrap()
            .clone()
    };
    for &d in &s.dims {
        for &sn in &s.sigma_n_list {
            let (a, b) = (find("d1", d, sn), find("d2", d, sn));
            assert!((a.mean - b.mean).abs() <= 3.0 * a.stderr.hypot(b.stderr), "{a:?} {b:?}");
        }
    }
}

#[test]
fn plotting_a_broken_file_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&ExperimentSpec { emit_plots: false, ..spec(dir.path()) }).unwrap();
    let text = fs::read_to_string(&out.csv_path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[7] = "d1,1,1,0.2,xx,500,0.1,0.01,,d1_highrate_leading,77";
    let broken = dir.path().join("broken.csv");
    fs::write(&broken, lines.join("\n")).unwrap();
    let figs = dir.path().join("figs");
    let err = render_plots(&broken, &figs).unwrap_err().to_string();
    assert!(err.contains("row 8"), "{err}");
    assert!(!figs.exists());
}
