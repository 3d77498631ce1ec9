//! Closed-form predictions and converse bounds.
//!
//! Centralized side: the high-rate law `D1(k) ~ G_d k^{-2/d} E[J(Y)]` with
//! the Zador functional `J` evaluated in closed form for Gaussian posteriors.
//! Decentralized side: the small-ball lower bound
//! `D2(k) >= e^{-1/alpha} (1 / (C (1 + alpha k)))^{1/alpha}` and its
//! bounded-density and Gaussian specializations.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use statrs::function::gamma::gamma;

use crate::error::{check, Error, Result};
use crate::model::GaussianModel;
use crate::quadrature::{integrate, QuadConfig};

/// Volume of the Euclidean unit ball, `pi^{d/2} / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    check(d >= 1, "d", "dimension must be at least 1")?;
    Ok(ball_volume(d))
}

fn ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        _ => {
            let h = d as f64 / 2.0;
            PI.powf(h) / gamma(h + 1.0)
        }
    }
}

/// Surface area of the unit sphere, `S_d = d V_d`.
pub fn sphere_surface(d: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    d as f64 * ball_volume(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Known in closed form.
    Exact,
    /// `d` times the best reported lattice normalized second moment.
    LatticeProxy,
    /// Large-dimension proxy `d / (2 pi e)`.
    HighDimProxy,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::LatticeProxy => "lattice_proxy",
            Provenance::HighDimProxy => "high_dim_proxy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZadorConstant {
    pub value: f64,
    pub provenance: Provenance,
}

/// Table of Zador-Gersho constants `G_d` in the `D ~ G_d k^{-2/d} J` normalization.
#[derive(Debug, Clone)]
pub struct ZadorConstants {
    table: BTreeMap<usize, ZadorConstant>,
}

impl Default for ZadorConstants {
    fn default() -> Self {
        let mut table = BTreeMap::new();
        table.insert(
            1,
            ZadorConstant {
                value: 1.0 / 12.0,
                provenance: Provenance::Exact,
            },
        );
        // D4 and D10+ normalized second moments, scaled by d.
        table.insert(
            4,
            ZadorConstant {
                value: 0.306_412_94,
                provenance: Provenance::LatticeProxy,
            },
        );
        table.insert(
            10,
            ZadorConstant {
                value: 0.708_138_18,
                provenance: Provenance::LatticeProxy,
            },
        );
        Self { table }
    }
}

impl ZadorConstants {
    pub fn high_dim_proxy(d: usize) -> f64 {
        d as f64 / (2.0 * PI * E)
    }

    pub fn insert(&mut self, d: usize, value: f64, provenance: Provenance) -> Result<()> {
        check(d >= 1, "d", "dimension must be at least 1")?;
        check(value > 0.0 && value.is_finite(), "G_d", "must be positive")?;
        self.table.insert(d, ZadorConstant { value, provenance });
        Ok(())
    }

    /// Table entry for `d`, or the `d / (2 pi e)` proxy when absent.
    pub fn get(&self, d: usize) -> ZadorConstant {
        self.table.get(&d).copied().unwrap_or(ZadorConstant {
            value: Self::high_dim_proxy(d),
            provenance: Provenance::HighDimProxy,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, ZadorConstant)> + '_ {
        self.table.iter().map(|(&d, &c)| (d, c))
    }
}

/// `(int f^{d/(d+2)})^{(d+2)/d}` for `f = N(mu, Sigma)`, given `det(Sigma)^{1/d}`:
/// `2 pi det(Sigma)^{1/d} ((d+2)/d)^{(d+2)/2}`.
pub fn zador_gaussian_functional(d: usize, det_sigma_pow: f64) -> Result<f64> {
    check(d >= 1, "d", "dimension must be at least 1")?;
    check(
        det_sigma_pow.is_finite() && det_sigma_pow > 0.0,
        "det_sigma_pow",
        format!("must be positive, got {det_sigma_pow}"),
    )?;
    let df = d as f64;
    Ok(2.0 * PI * det_sigma_pow * ((df + 2.0) / df).powf((df + 2.0) / 2.0))
}

/// Leading high-rate term `G k^{-2/d} E[J(Y)]`; the `o(k^{-2/d})` remainder is not modeled.
pub fn d1_highrate(d: usize, k: usize, g: f64, mean_functional: f64) -> Result<f64> {
    check(d >= 1, "d", "dimension must be at least 1")?;
    check(k >= 1, "k", "list size must be at least 1")?;
    check(g.is_finite() && g > 0.0, "G", "must be positive")?;
    check(
        mean_functional.is_finite() && mean_functional > 0.0,
        "mean_functional",
        "must be positive",
    )?;
    Ok(g * (k as f64).powf(-2.0 / d as f64) * mean_functional)
}

/// Centralized leading term for the isotropic Gaussian model.
pub fn gaussian_d1_highrate(model: &GaussianModel, k: usize, constants: &ZadorConstants) -> Result<f64> {
    let d = model.dim();
    let j = zador_gaussian_functional(d, model.posterior_var())?;
    d1_highrate(d, k, constants.get(d).value, j)
}

/// Constants of the averaged small-ball condition `P(W <= a) <= C a^alpha` on `[0, a0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallBallParams {
    c: f64,
    alpha: f64,
    a0: f64,
}

impl SmallBallParams {
    /// `a0` may be `f64::INFINITY` when the condition holds globally.
    pub fn new(c: f64, alpha: f64, a0: f64) -> Result<Self> {
        check(c.is_finite() && c > 0.0, "C", format!("must be positive, got {c}"))?;
        check(
            alpha.is_finite() && alpha > 0.0,
            "alpha",
            format!("must be positive, got {alpha}"),
        )?;
        check(!a0.is_nan() && a0 > 0.0, "a0", format!("must be positive, got {a0}"))?;
        Ok(Self { c, alpha, a0 })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Maximizer `a* = (1 / (C (1 + alpha k)))^{1/alpha}` of [`Self::truncation_objective`].
    pub fn optimal_truncation_point(&self, k: usize) -> f64 {
        (1.0 / (self.c * (1.0 + self.alpha * k as f64))).powf(1.0 / self.alpha)
    }

    /// `L(a) = a (1 - C a^alpha)^k`, the truncation lower bound on `D2(k)`;
    /// zero where `C a^alpha >= 1`.
    pub fn truncation_objective(&self, k: usize, a: f64) -> f64 {
        let mass = self.c * a.powf(self.alpha);
        if mass >= 1.0 {
            return 0.0;
        }
        a * (1.0 - mass).powi(k as i32)
    }
}

/// `e^{-1/alpha} a*`, valid only when `a* <= a0`.
pub fn d2_smallball_lower(params: &SmallBallParams, k: usize) -> Result<f64> {
    check(k >= 1, "k", "list size must be at least 1")?;
    let a_star = params.optimal_truncation_point(k);
    if a_star > params.a0 {
        return Err(Error::Inadmissible {
            a_star,
            a0: params.a0,
        });
    }
    Ok((-1.0 / params.alpha).exp() * a_star)
}

/// Lower bound when the conditional error density is at most `m` on the ball of radius `r`.
pub fn d2_bounded_density_lower(d: usize, m: f64, r: f64, k: usize) -> Result<f64> {
    let vd = unit_ball_volume(d)?;
    check(m.is_finite() && m > 0.0, "M", format!("must be positive, got {m}"))?;
    check(!r.is_nan() && r > 0.0, "r", format!("must be positive, got {r}"))?;
    let params = SmallBallParams::new(m * vd, d as f64 / 2.0, r * r)?;
    d2_smallball_lower(&params, k)
}

/// Small-ball constants of the Gaussian single-agent error: `alpha = d/2`,
/// `C = V_d (2 pi sigma_g2)^{-d/2}`, valid for every `a`.
pub fn gaussian_smallball_params(model: &GaussianModel) -> SmallBallParams {
    let d = model.dim() as f64;
    let m = (2.0 * PI * model.sigma_g2()).powf(-d / 2.0);
    SmallBallParams {
        c: m * ball_volume(model.dim()),
        alpha: d / 2.0,
        a0: f64::INFINITY,
    }
}

/// Gaussian benchmark bound `e^{-2/d} 2 pi sigma_g2 / (V_d^{2/d} (1 + d k / 2)^{2/d})`.
/// The Gaussian error density is globally bounded, so this is admissible for every `k >= 1`.
pub fn gaussian_d2_lower(model: &GaussianModel, k: usize) -> f64 {
    let d = model.dim() as f64;
    let vd = ball_volume(model.dim());
    let p = 2.0 / d;
    (-p).exp() * 2.0 * PI * model.sigma_g2() / (vd.powf(p) * (1.0 + d * k as f64 / 2.0).powf(p))
}

/// Two-sided small-ball bounds `S_d / (d + beta) * c * a^{(d+beta)/2}` for
/// `c = c_min` and `c = c_max`. The caller keeps `a` within the radius where
/// the density bounds hold.
pub fn powerlaw_smallball_bounds(d: usize, beta: f64, c_min: f64, c_max: f64, a: f64) -> Result<(f64, f64)> {
    check(d >= 1, "d", "dimension must be at least 1")?;
    let s = d as f64 + beta;
    check(
        beta.is_finite() && s > 0.0,
        "beta",
        format!("must exceed -d = {}, got {beta}", -(d as f64)),
    )?;
    check(c_min >= 0.0 && c_min <= c_max, "c_min", "need 0 <= c_min <= c_max")?;
    check(c_max.is_finite(), "c_max", "must be finite")?;
    check(a >= 0.0 && a.is_finite(), "a", "must be nonnegative")?;
    let factor = sphere_surface(d) / s * a.powf(s / 2.0);
    Ok((factor * c_min, factor * c_max))
}

/// `c(y) = (1/12) (int f(x|y)^{1/3} dx)^3` by adaptive quadrature over `[lo, hi]`.
pub fn scalar_posterior_coefficient<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64, cfg: QuadConfig) -> Result<f64> {
    let integral = integrate(|x| density(x).max(0.0).cbrt(), lo, hi, cfg)?;
    Ok(integral.value.powi(3) / 12.0)
}

/// Scalar coefficient for a Gaussian posterior of variance `var`, truncated at 12 standard deviations.
pub fn gaussian_posterior_coefficient(var: f64) -> Result<f64> {
    check(var.is_finite() && var > 0.0, "var", "must be positive")?;
    let sd = var.sqrt();
    let norm = 1.0 / (2.0 * PI * var).sqrt();
    scalar_posterior_coefficient(
        |x| norm * (-0.5 * x * x / var).exp(),
        -12.0 * sd,
        12.0 * sd,
        QuadConfig::default(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    D1HighRate,
    D2LowerBound,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::D1HighRate => "d1_highrate_leading",
            CurveKind::D2LowerBound => "d2_lower_bound",
        }
    }
}

/// Theory values along a k-grid. Entries are `None` where the bound is not admissible.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCurve {
    pub kind: CurveKind,
    pub points: Vec<(usize, Option<f64>)>,
    pub params_digest: String,
}

impl TheoryCurve {
    fn check_grid(ks: &[usize]) -> Result<()> {
        check(
            !ks.is_empty() && ks[0] >= 1 && ks.windows(2).all(|w| w[0] < w[1]),
            "k_grid",
            "must be nonempty, positive and strictly increasing",
        )
    }

    pub fn gaussian_d1(model: &GaussianModel, constants: &ZadorConstants, ks: &[usize]) -> Result<Self> {
        Self::check_grid(ks)?;
        let g = constants.get(model.dim());
        let points = ks
            .iter()
            .map(|&k| Ok((k, Some(gaussian_d1_highrate(model, k, constants)?))))
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: CurveKind::D1HighRate,
            points,
            params_digest: format!(
                "d={} sigma_x2={} sigma_n2={} G={} ({})",
                model.dim(),
                model.sigma_x2(),
                model.sigma_n2(),
                g.value,
                g.provenance.as_str()
            ),
        })
    }

    pub fn gaussian_d2(model: &GaussianModel, ks: &[usize]) -> Result<Self> {
        Self::check_grid(ks)?;
        Ok(Self {
            kind: CurveKind::D2LowerBound,
            points: ks.iter().map(|&k| (k, Some(gaussian_d2_lower(model, k)))).collect(),
            params_digest: format!(
                "d={} sigma_x2={} sigma_n2={} sigma_g2={}",
                model.dim(),
                model.sigma_x2(),
                model.sigma_n2(),
                model.sigma_g2()
            ),
        })
    }

    /// Generic small-ball bound; inadmissible grid points are left empty.
    pub fn smallball(params: &SmallBallParams, ks: &[usize]) -> Result<Self> {
        Self::check_grid(ks)?;
        let points = ks
            .iter()
            .map(|&k| match d2_smallball_lower(params, k) {
                Ok(v) => Ok((k, Some(v))),
                Err(Error::Inadmissible { .. }) => Ok((k, None)),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: CurveKind::D2LowerBound,
            points,
            params_digest: format!("C={} alpha={} a0={}", params.c, params.alpha, params.a0),
        })
    }

    pub fn value_at(&self, k: usize) -> Option<f64> {
        self.points.iter().find(|p| p.0 == k).and_then(|p| p.1)
    }
}
