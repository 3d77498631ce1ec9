//! Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, bisecting the worst segment until the summed
/// error estimate meets the tolerance or the segment cap is hit.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidParameter {
            name: "interval",
            reason: format!("need finite a < b, got [{a}, {b}]"),
        });
    }
    let mut segments = vec![kronrod(&f, a, b)];
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
            return Ok(Integral {
                value,
                abs_error: error,
                intervals: segments.len(),
            });
        }
        if segments.len() >= cfg.max_intervals {
            return Err(Error::Quadrature {
                estimate: value,
                residual: error,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(kronrod(&f, s.a, mid));
        segments.push(kronrod(&f, mid, s.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| 3.0 * x * x + 1.0, 0.0, 2.0, QuadConfig::default()).unwrap();
        assert!((r.value - 10.0).abs() < 1e-13);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn gaussian_mass() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let r = integrate(f, -12.0, 12.0, QuadConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_singularity_converges() {
        let r = integrate(f64::sqrt, 0.0, 1.0, QuadConfig::default()).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = QuadConfig {
            rel_tol: 1e-15,
            abs_tol: 0.0,
            max_intervals: 3,
        };
        let err = integrate(|x: f64| x.abs().powf(-0.9), -1.0, 1.0, cfg).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
        assert!(integrate(|x| x, 1.0, 1.0, QuadConfig::default()).is_err());
    }
}
