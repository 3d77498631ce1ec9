//! Observation and error models.
//!
//! [`GaussianModel`] is the isotropic additive model `Y_i = X + N_i` with
//! `X ~ N(0, sigma_x2 I)` and `N_i ~ N(0, sigma_n2 I)`. [`PowerLawErrorModel`]
//! samples an error vector directly from a radial law with density
//! proportional to `||z||^beta` on a ball, which is the vanishing-density
//! regime where the decentralized benchmark loses the `k^{-2/d}` exponent.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check, Error, Result};
use crate::theory::sphere_surface;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModel {
    d: usize,
    sigma_x2: f64,
    sigma_n2: f64,
}

impl GaussianModel {
    pub fn new(d: usize, sigma_x2: f64, sigma_n2: f64) -> Result<Self> {
        check(d >= 1, "d", "dimension must be at least 1")?;
        check(
            sigma_x2.is_finite() && sigma_x2 > 0.0,
            "sigma_x2",
            format!("prior variance must be positive and finite, got {sigma_x2}"),
        )?;
        check(
            sigma_n2.is_finite() && sigma_n2 > 0.0,
            "sigma_n2",
            format!("noise variance must be positive and finite, got {sigma_n2}"),
        )?;
        Ok(Self {
            d,
            sigma_x2,
            sigma_n2,
        })
    }

    /// Builds the model from standard deviations.
    pub fn from_std(d: usize, sigma_x: f64, sigma_n: f64) -> Result<Self> {
        Self::new(d, sigma_x * sigma_x, sigma_n * sigma_n)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sigma_x2(&self) -> f64 {
        self.sigma_x2
    }

    pub fn sigma_n2(&self) -> f64 {
        self.sigma_n2
    }

    /// Linear MMSE gain `sigma_x2 / (sigma_x2 + sigma_n2)`.
    pub fn gain(&self) -> f64 {
        self.sigma_x2 / (self.sigma_x2 + self.sigma_n2)
    }

    /// Per-coordinate posterior variance `sigma_x2 sigma_n2 / (sigma_x2 + sigma_n2)`.
    pub fn posterior_var(&self) -> f64 {
        self.sigma_x2 * self.sigma_n2 / (self.sigma_x2 + self.sigma_n2)
    }

    /// Per-coordinate variance of the single-agent error given `X = x`:
    /// `sigma_x2^2 sigma_n2 / (sigma_x2 + sigma_n2)^2`.
    pub fn sigma_g2(&self) -> f64 {
        let s = self.sigma_x2 + self.sigma_n2;
        self.sigma_x2 * self.sigma_x2 * self.sigma_n2 / (s * s)
    }

    /// Total MMSE `d * posterior_var`, the `k = 1` distortion of both architectures.
    pub fn mmse(&self) -> f64 {
        self.d as f64 * self.posterior_var()
    }

    pub fn fill_prior<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let sx = self.sigma_x2.sqrt();
        for v in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *v = sx * g;
        }
    }

    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        self.fill_prior(rng, &mut x);
        x
    }

    /// Writes `x + n` into `out`, `n ~ N(0, sigma_n2 I)`.
    pub fn fill_observation<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R, out: &mut [f64]) {
        let sn = self.sigma_n2.sqrt();
        for (o, &xi) in out.iter_mut().zip(x) {
            let g: f64 = StandardNormal.sample(rng);
            *o = xi + sn * g;
        }
    }

    pub fn sample_observation<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut y = vec![0.0; self.d];
        self.fill_observation(x, rng, &mut y);
        Ok(y)
    }

    /// Posterior mean `E[X | Y = y] = gain * y`.
    pub fn mmse_estimate(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y.len())?;
        let g = self.gain();
        Ok(y.iter().map(|v| g * v).collect())
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<()> {
        if got == self.d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.d,
                got,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawErrorModel {
    d: usize,
    beta: f64,
    r_max: f64,
}

impl PowerLawErrorModel {
    pub fn new(d: usize, beta: f64, r_max: f64) -> Result<Self> {
        check(d >= 1, "d", "dimension must be at least 1")?;
        check(
            beta.is_finite() && beta > -(d as f64),
            "beta",
            format!("exponent must exceed -d = {}, got {beta}", -(d as f64)),
        )?;
        check(
            r_max.is_finite() && r_max > 0.0,
            "r_max",
            format!("support radius must be positive, got {r_max}"),
        )?;
        Ok(Self { d, beta, r_max })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Small-ball exponent `(d + beta) / 2`.
    pub fn alpha(&self) -> f64 {
        (self.d as f64 + self.beta) / 2.0
    }

    /// Constant `c` with density `f(z) = c ||z||^beta` on the ball; it is both
    /// `c_min` and `c_max` of the two-sided power-law bound.
    pub fn density_constant(&self) -> f64 {
        let s = self.d as f64 + self.beta;
        s / (sphere_surface(self.d) * self.r_max.powf(s))
    }

    /// Exact `P(||Z||^2 <= a)`.
    pub fn smallball_cdf(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        let ratio = (a.sqrt() / self.r_max).min(1.0);
        ratio.powf(self.d as f64 + self.beta)
    }

    /// Exact `E[min of k i.i.d. ||Z||^2] = r^2 Gamma(1 + 1/s) Gamma(k + 1) / Gamma(k + 1 + 1/s)`
    /// with `s = (d + beta) / 2`.
    pub fn expected_min_sq_error(&self, k: usize) -> f64 {
        use statrs::function::gamma::ln_gamma;
        let inv_s = 1.0 / self.alpha();
        let kf = k as f64;
        let ln = ln_gamma(1.0 + inv_s) + ln_gamma(kf + 1.0) - ln_gamma(kf + 1.0 + inv_s);
        self.r_max * self.r_max * ln.exp()
    }

    pub fn fill_error<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let u: f64 = rng.random();
        // Open interval keeps the radius strictly positive.
        let u = if u > 0.0 { u } else { f64::MIN_POSITIVE };
        let radius = self.r_max * u.powf(1.0 / (self.d as f64 + self.beta));
        if self.d == 1 {
            out[0] = if rng.random::<bool>() { radius } else { -radius };
            return;
        }
        loop {
            let mut norm2 = 0.0;
            for v in out.iter_mut() {
                let g: f64 = StandardNormal.sample(rng);
                *v = g;
                norm2 += g * g;
            }
            if norm2 > 0.0 {
                let scale = radius / norm2.sqrt();
                out.iter_mut().for_each(|v| *v *= scale);
                return;
            }
        }
    }

    pub fn sample_error<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z = vec![0.0; self.d];
        self.fill_error(rng, &mut z);
        z
    }
}

/// Source of single-agent squared errors `W = ||Z||^2`.
///
/// Errors of different agents are i.i.d. only conditionally on the target, so
/// a trial first draws a shared context (the target) and then any number of
/// errors given it.
pub trait ErrorSampler: Sync {
    type Context;

    fn dim(&self) -> usize;

    fn draw_context<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Context;

    fn sample_sq_error<R: Rng + ?Sized>(&self, ctx: &Self::Context, rng: &mut R) -> f64;

    /// Small-ball exponent predicted for this error law.
    fn alpha_theory(&self) -> f64;
}

impl ErrorSampler for GaussianModel {
    type Context = Vec<f64>;

    fn dim(&self) -> usize {
        self.d
    }

    fn draw_context<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_prior(rng)
    }

    fn sample_sq_error<R: Rng + ?Sized>(&self, x: &Vec<f64>, rng: &mut R) -> f64 {
        let sn = self.sigma_n2.sqrt();
        let g = self.gain();
        x.iter()
            .map(|&xi| {
                let n: f64 = StandardNormal.sample(rng);
                let z = xi - g * (xi + sn * n);
                z * z
            })
            .sum()
    }

    fn alpha_theory(&self) -> f64 {
        self.d as f64 / 2.0
    }
}

impl ErrorSampler for PowerLawErrorModel {
    type Context = ();

    fn dim(&self) -> usize {
        self.d
    }

    fn draw_context<R: Rng + ?Sized>(&self, _rng: &mut R) {}

    fn sample_sq_error<R: Rng + ?Sized>(&self, _ctx: &(), rng: &mut R) -> f64 {
        let mut z = [0.0; 16];
        if self.d <= z.len() {
            let z = &mut z[..self.d];
            self.fill_error(rng, z);
            z.iter().map(|v| v * v).sum()
        } else {
            self.sample_error(rng).iter().map(|v| v * v).sum()
        }
    }

    fn alpha_theory(&self) -> f64 {
        self.alpha()
    }
}
