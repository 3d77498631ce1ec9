//! Log-log SVG figures, one per dimension.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::results::{read_results, write_atomic, ResultRow};
use crate::error::{Error, Result};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// The four series drawn for every noise level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    EmpiricalD1,
    EmpiricalD2,
    TheoryD1,
    TheoryD2,
}

impl Series {
    pub const ALL: [Series; 4] = [Series::EmpiricalD1, Series::EmpiricalD2, Series::TheoryD1, Series::TheoryD2];

    pub fn as_str(self) -> &'static str {
        match self {
            Series::EmpiricalD1 => "empirical_d1",
            Series::EmpiricalD2 => "empirical_d2",
            Series::TheoryD1 => "theory_d1",
            Series::TheoryD2 => "theory_d2",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Series::EmpiricalD1 => "D1 empirical",
            Series::EmpiricalD2 => "D2 empirical",
            Series::TheoryD1 => "D1 leading term",
            Series::TheoryD2 => "D2 lower bound",
        }
    }

    fn dash(self) -> &'static str {
        match self {
            Series::EmpiricalD1 | Series::EmpiricalD2 => "",
            Series::TheoryD1 => " stroke-dasharray=\"8 4\"",
            Series::TheoryD2 => " stroke-dasharray=\"2 3\"",
        }
    }

    fn points(self, rows: &[&ResultRow]) -> Vec<(usize, f64)> {
        let want = match self {
            Series::EmpiricalD1 | Series::TheoryD1 => "d1",
            Series::EmpiricalD2 | Series::TheoryD2 => "d2",
        };
        let mut pts: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.estimator == want)
            .filter_map(|r| match self {
                Series::EmpiricalD1 | Series::EmpiricalD2 => Some((r.k, r.mean)),
                _ => r.theory_value.map(|v| (r.k, v)),
            })
            .collect();
        pts.sort_by_key(|p| p.0);
        pts
    }
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, k: f64) -> f64 {
        LEFT + (k.log10() - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        let l = v.max(10f64.powf(self.y.0)).log10();
        HEIGHT - BOTTOM - (l - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn decade_label(e: i32) -> String {
    if (0..=4).contains(&e) {
        format!("{}", 10u32.pow(e as u32))
    } else {
        format!("1e{e}")
    }
}

fn decade_range(lo: f64, hi: f64) -> (f64, f64) {
    let (a, mut b) = (lo.log10().floor(), hi.log10().ceil());
    if b <= a {
        b = a + 1.0;
    }
    (a, b)
}

/// SVG for the rows of one dimension.
pub fn render_svg(d: usize, rows: &[&ResultRow]) -> String {
    let mut by_sigma: BTreeMap<u64, (f64, Vec<&ResultRow>)> = BTreeMap::new();
    for &r in rows {
        // Positive floats order like their bit patterns.
        by_sigma.entry(r.sigma_n.to_bits()).or_insert((r.sigma_n, Vec::new())).1.push(r);
    }
    let ks = rows.iter().map(|r| r.k as f64);
    let values = rows
        .iter()
        .flat_map(|r| [Some(r.mean), r.theory_value])
        .flatten()
        .filter(|v| *v > 0.0);
    let kmin = ks.clone().fold(f64::INFINITY, f64::min);
    let kmax = ks.fold(0.0, f64::max);
    let vmin = values.clone().fold(f64::INFINITY, f64::min);
    let vmax = values.fold(0.0, f64::max);
    let (vmin, vmax) = if vmin.is_finite() { (vmin, vmax) } else { (1e-3, 1.0) };
    let axes = Axes {
        x: decade_range(kmin, kmax.max(kmin * 10.0)),
        y: decade_range(vmin, vmax),
    };
    let sigma_x = rows.first().map(|r| r.sigma_x).unwrap_or(1.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">d = {d}, sigma_x = {sigma_x}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0
    );

    // Frame, decade grid and tick labels.
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(s, r##"<g class="axes" stroke="#444" fill="none">"##);
    let _ = writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}"/>"#, x1 - x0, y1 - y0);
    for e in axes.x.0 as i32..=axes.x.1 as i32 {
        let x = axes.px(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="#ddd"/>"##);
    }
    for e in axes.y.0 as i32..=axes.y.1 as i32 {
        let y = axes.py(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/>"##);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks" fill="black">"#);
    for e in axes.x.0 as i32..=axes.x.1 as i32 {
        let x = axes.px(10f64.powi(e));
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y1 + 16.0, decade_label(e));
    }
    for e in axes.y.0 as i32..=axes.y.1 as i32 {
        let y = axes.py(10f64.powi(e));
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, y + 4.0, decade_label(e));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text class="xlabel" x="{}" y="{}" text-anchor="middle">k</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text class="ylabel" x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">distortion</text>"#,
        (y0 + y1) / 2.0
    );

    // Series and legend.
    let mut legend_y = TOP + 10.0;
    let lx = WIDTH - RIGHT + 16.0;
    for (i, (sigma_n, group)) in by_sigma.values().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for series in Series::ALL {
            let pts = series.points(group);
            let _ = writeln!(
                s,
                r#"<g class="series" data-series="{}" data-sigma-n="{sigma_n}" stroke="{color}" fill="{color}">"#,
                series.as_str()
            );
            if pts.len() > 1 {
                let path: Vec<String> = pts
                    .iter()
                    .map(|&(k, v)| format!("{:.2},{:.2}", axes.px(k as f64), axes.py(v)))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke-width="1.5"{} points="{}"/>"#,
                    series.dash(),
                    path.join(" ")
                );
            }
            for (k, v) in pts {
                let (x, y) = (axes.px(k as f64), axes.py(v));
                let attrs = format!(
                    r#"class="marker" data-series="{}" data-sigma-n="{sigma_n}" data-k="{k}" data-value="{v}""#,
                    series.as_str()
                );
                let _ = match series {
                    Series::EmpiricalD1 => writeln!(s, r#"<circle {attrs} cx="{x:.2}" cy="{y:.2}" r="3.5"/>"#),
                    Series::EmpiricalD2 => writeln!(
                        s,
                        r#"<rect {attrs} x="{:.2}" y="{:.2}" width="7" height="7"/>"#,
                        x - 3.5,
                        y - 3.5
                    ),
                    _ => writeln!(s, r#"<circle {attrs} cx="{x:.2}" cy="{y:.2}" r="1.5" fill="white"/>"#),
                };
            }
            let _ = writeln!(s, "</g>");
            let _ = writeln!(
                s,
                r#"<g class="legend-entry"><line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{color}" stroke-width="1.5"{}/><text x="{}" y="{}">{} (sigma_n = {sigma_n})</text></g>"#,
                lx + 24.0,
                series.dash(),
                lx + 30.0,
                legend_y + 4.0,
                series.label()
            );
            legend_y += 16.0;
        }
        legend_y += 6.0;
    }
    s.push_str("</svg>\n");
    s
}

/// Reads a results CSV and writes `fig_d{d}.svg` per dimension into `out_dir`.
/// Nothing is written if the CSV fails to parse.
pub fn render_plots(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = read_results(csv_path)?;
    let mut by_dim: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for r in &rows {
        by_dim.entry(r.d).or_default().push(r);
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::with_capacity(by_dim.len());
    for (d, group) in by_dim {
        let path = out_dir.join(format!("fig_d{d}.svg"));
        write_atomic(&path, render_svg(d, &group).as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}
