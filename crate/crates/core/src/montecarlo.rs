//! Seeded Monte Carlo estimators for the centralized and decentralized
//! best-candidate distortions, empirical small-ball probabilities, and
//! log-log exponent fits.
//!
//! Every trial owns the stream `seed / trial`, per-trial results are
//! collected in trial order and reduced by pairwise summation, so estimates
//! are bit-identical for any worker count.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{check, Error, Result};
use crate::model::{ErrorSampler, GaussianModel};
use crate::quantizer::{kmeans_fit, kmeans_fit_warm, Codebook, FitConfig};
use crate::rng::Seed;

const MIN_TRIALS: usize = 100;
const MIN_SMALLBALL_TRIALS: usize = 10_000;
/// Grid points with fewer hits than this are too noisy in log space to enter the exponent fit.
pub const MIN_FIT_HITS: usize = 20;
const MIN_FIT_POINTS: usize = 4;

// Sub-stream tags below an estimator seed.
const TRAIN: u64 = 0;
const FIT: u64 = 1;
const EVAL: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    CentralizedD1,
    DecentralizedD2,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::CentralizedD1 => "d1",
            Estimator::DecentralizedD2 => "d2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub stderr: f64,
    pub trials: usize,
    pub k: usize,
    pub estimator: Estimator,
    pub seed_root: u64,
}

impl DistortionEstimate {
    fn from_samples(values: &[f64], k: usize, estimator: Estimator, seed: &Seed) -> Self {
        let (mean, stderr) = mean_stderr(values);
        Self {
            mean,
            stderr,
            trials: values.len(),
            k,
            estimator,
            seed_root: seed.root(),
        }
    }

    /// `sqrt(se_a^2 + se_b^2)` for two independent estimates.
    pub fn combined_stderr(&self, other: &Self) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn per_trial<F>(trials: usize, seed: &Seed, f: F) -> Vec<f64>
where
    F: Fn(&mut crate::rng::StreamRng) -> f64 + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(&mut seed.child(t as u64).rng()))
        .collect()
}

fn check_trials(trials: usize, min: usize) -> Result<()> {
    check(trials >= min, "trials", format!("need at least {min}, got {trials}"))
}

/// Decentralized MMSE benchmark: per trial one target, `k` conditionally
/// i.i.d. observations, each mapped through the MMSE rule, and the best of
/// the `k` squared errors.
///
/// Observation `i` of trial `t` is the same draw for every `k`, so estimates
/// for increasing `k` under one seed are nonincreasing trial by trial.
pub fn estimate_d2(model: &GaussianModel, k: usize, trials: usize, seed: &Seed) -> Result<DistortionEstimate> {
    check(k >= 1, "k", "list size must be at least 1")?;
    check_trials(trials, MIN_TRIALS)?;
    let d = model.dim();
    let values = per_trial(trials, seed, |rng| {
        let x = model.sample_prior(rng);
        let mut y = vec![0.0; d];
        let g = model.gain();
        let mut best = f64::INFINITY;
        for _ in 0..k {
            model.fill_observation(&x, rng, &mut y);
            let w: f64 = x.iter().zip(&y).map(|(xi, yi)| (xi - g * yi) * (xi - g * yi)).sum();
            best = best.min(w);
        }
        best
    });
    Ok(DistortionEstimate::from_samples(&values, k, Estimator::DecentralizedD2, seed))
}

/// `n` draws from the zero-mean posterior `N(0, posterior_var I)`, flattened.
pub fn posterior_training_set(model: &GaussianModel, n: usize, seed: &Seed) -> Vec<f64> {
    let d = model.dim();
    let sd = model.posterior_var().sqrt();
    let posterior = GaussianModel::new(d, 1.0, 1.0).expect("unit model");
    let mut rng = seed.rng();
    let mut out = vec![0.0; n * d];
    posterior.fill_prior(&mut rng, &mut out);
    out.iter_mut().for_each(|v| *v *= sd);
    out
}

/// Evaluates a zero-mean posterior codebook on fresh `(X, Y)` draws: the list
/// for observation `y` is the codebook translated by the posterior mean.
pub fn evaluate_d1(model: &GaussianModel, codebook: &Codebook, trials: usize, seed: &Seed) -> Result<DistortionEstimate> {
    model.check_len(codebook.dim())?;
    check_trials(trials, MIN_TRIALS)?;
    let d = model.dim();
    let g = model.gain();
    let values = per_trial(trials, seed, |rng| {
        let x = model.sample_prior(rng);
        let mut y = vec![0.0; d];
        model.fill_observation(&x, rng, &mut y);
        // ||x - (mu + c)||^2 = ||(x - mu) - c||^2
        let residual: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| xi - g * yi).collect();
        codebook.nearest(&residual).1
    });
    Ok(DistortionEstimate::from_samples(&values, codebook.k(), Estimator::CentralizedD1, seed))
}

/// Same quantity as [`evaluate_d1`], drawing the posterior residual `X - E[X|Y]`
/// directly from `N(0, posterior_var I)`.
pub fn evaluate_d1_residual(
    model: &GaussianModel,
    codebook: &Codebook,
    trials: usize,
    seed: &Seed,
) -> Result<DistortionEstimate> {
    model.check_len(codebook.dim())?;
    check_trials(trials, MIN_TRIALS)?;
    let values = per_trial(trials, seed, |rng| {
        let r = posterior_training_set(model, 1, &Seed::new(rng.random()));
        codebook.nearest(&r).1
    });
    Ok(DistortionEstimate::from_samples(&values, codebook.k(), Estimator::CentralizedD1, seed))
}

/// Fits one codebook to the zero-mean posterior and evaluates it on fresh draws.
pub fn fit_posterior_codebook(model: &GaussianModel, k: usize, cfg: &FitConfig, seed: &Seed) -> Result<Codebook> {
    cfg.validate()?;
    let training = posterior_training_set(model, cfg.train_size(k), &seed.child(TRAIN));
    kmeans_fit(&training, model.dim(), k, cfg, &seed.child(FIT))
}

/// Centralized k-list distortion via sampled k-means and the Gaussian translation structure.
pub fn estimate_d1(
    model: &GaussianModel,
    k: usize,
    trials: usize,
    cfg: &FitConfig,
    seed: &Seed,
) -> Result<DistortionEstimate> {
    check_trials(trials, MIN_TRIALS)?;
    let codebook = fit_posterior_codebook(model, k, cfg, seed)?;
    evaluate_d1(model, &codebook, trials, &seed.child(EVAL))
}

/// [`estimate_d1`] along a k-grid. One training set (sized for the largest
/// `k`) is shared, each fit warm-starts from the previous codebook, so
/// training distortion is nonincreasing along the grid, and all grid points
/// are evaluated on the same draws.
pub fn estimate_d1_sweep(
    model: &GaussianModel,
    ks: &[usize],
    trials: usize,
    cfg: &FitConfig,
    seed: &Seed,
) -> Result<Vec<(Codebook, DistortionEstimate)>> {
    cfg.validate()?;
    check_trials(trials, MIN_TRIALS)?;
    check(
        !ks.is_empty() && ks[0] >= 1 && ks.windows(2).all(|w| w[0] < w[1]),
        "k_grid",
        "must be nonempty, positive and strictly increasing",
    )?;
    let n = ks.iter().map(|&k| cfg.train_size(k)).max().unwrap_or(0);
    let training = posterior_training_set(model, n, &seed.child(TRAIN));
    let mut out: Vec<(Codebook, DistortionEstimate)> = Vec::with_capacity(ks.len());
    for &k in ks {
        let fit_seed = seed.descend(&[FIT, k as u64]);
        let codebook = match out.last() {
            Some((prev, _)) => kmeans_fit_warm(&training, model.dim(), k, cfg, &fit_seed, prev)?,
            None => kmeans_fit(&training, model.dim(), k, cfg, &fit_seed)?,
        };
        let est = evaluate_d1(model, &codebook, trials, &seed.child(EVAL))?;
        out.push((codebook, est));
    }
    Ok(out)
}

/// Best of `k` squared errors drawn i.i.d. given a shared context per trial.
pub fn estimate_d2_generic<S: ErrorSampler>(
    sampler: &S,
    k: usize,
    trials: usize,
    seed: &Seed,
) -> Result<DistortionEstimate>
where
    S::Context: Send,
{
    check(k >= 1, "k", "list size must be at least 1")?;
    check_trials(trials, MIN_TRIALS)?;
    let values = per_trial(trials, seed, |rng| {
        let ctx = sampler.draw_context(rng);
        (0..k)
            .map(|_| sampler.sample_sq_error(&ctx, rng))
            .fold(f64::INFINITY, f64::min)
    });
    Ok(DistortionEstimate::from_samples(&values, k, Estimator::DecentralizedD2, seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallBallEstimate {
    pub a_grid: Vec<f64>,
    /// Empirical `P(W <= a)` per grid point.
    pub prob: Vec<f64>,
    pub hits: Vec<usize>,
    pub trials: usize,
    pub fitted_alpha: f64,
    pub fit_range: (f64, f64),
}

impl SmallBallEstimate {
    /// Binomial standard error of `prob[i]`.
    pub fn binomial_stderr(&self, i: usize) -> f64 {
        let p = self.prob[i];
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l, h) = (lo.ln(), hi.ln());
    let mut out: Vec<f64> = (0..n)
        .map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp())
        .collect();
    out[0] = lo;
    out[n - 1] = hi;
    out
}

/// 16 log-spaced points over `[1e-4, 1] * d * sigma_g2`.
pub fn default_gaussian_grid(model: &GaussianModel) -> Vec<f64> {
    let scale = model.dim() as f64 * model.sigma_g2();
    log_spaced(1e-4 * scale, scale, 16)
}

/// Empirical CDF of `W = ||Z||^2` on `a_grid` and the fitted small-ball exponent.
///
/// The fit drops the two largest grid points and any point with fewer than
/// [`MIN_FIT_HITS`] hits, then regresses `ln P` on `ln a`.
pub fn estimate_smallball<S: ErrorSampler>(
    sampler: &S,
    trials: usize,
    a_grid: &[f64],
    seed: &Seed,
) -> Result<SmallBallEstimate>
where
    S::Context: Send,
{
    check_trials(trials, MIN_SMALLBALL_TRIALS)?;
    check(
        a_grid.len() >= MIN_FIT_POINTS + 2
            && a_grid[0] > 0.0
            && a_grid.windows(2).all(|w| w[0] < w[1]),
        "a_grid",
        format!("need at least {} positive increasing points", MIN_FIT_POINTS + 2),
    )?;
    let mut w = per_trial(trials, seed, |rng| {
        let ctx = sampler.draw_context(rng);
        sampler.sample_sq_error(&ctx, rng)
    });
    w.sort_by(f64::total_cmp);
    let hits: Vec<usize> = a_grid.iter().map(|&a| w.partition_point(|&v| v <= a)).collect();
    let prob: Vec<f64> = hits.iter().map(|&h| h as f64 / trials as f64).collect();

    let nonzero = hits.iter().filter(|&&h| h > 0).count();
    if nonzero < MIN_FIT_POINTS {
        return Err(Error::GridTooDeep {
            usable: nonzero,
            required: MIN_FIT_POINTS,
        });
    }
    let fit: Vec<(f64, f64)> = a_grid[..a_grid.len() - 2]
        .iter()
        .zip(&hits)
        .filter(|(_, &h)| h >= MIN_FIT_HITS)
        .map(|(&a, &h)| (a, h as f64 / trials as f64))
        .collect();
    if fit.len() < MIN_FIT_POINTS {
        return Err(Error::GridTooDeep {
            usable: fit.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let fit_range = (fit[0].0, fit[fit.len() - 1].0);
    let slope = fit_loglog_slope(&fit, fit_range)?;
    Ok(SmallBallEstimate {
        a_grid: a_grid.to_vec(),
        prob,
        hits,
        trials,
        fitted_alpha: slope.slope,
        fit_range,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub k_range: (f64, f64),
}

/// Ordinary least squares of `ln value` on `ln k` over points with `k` in `k_range` (inclusive).
pub fn fit_loglog_slope(points: &[(f64, f64)], k_range: (f64, f64)) -> Result<SlopeFit> {
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(k, _)| k >= k_range.0 && k <= k_range.1)
        .collect();
    if inside.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            got: inside.len(),
            required: MIN_FIT_POINTS,
        });
    }
    if let Some(&(k, value)) = inside.iter().find(|p| p.0.is_nan() || p.1.is_nan() || p.0 <= 0.0 || p.1 <= 0.0) {
        return Err(Error::NonPositiveValue { k, value });
    }
    let xy: Vec<(f64, f64)> = inside.iter().map(|&(k, v)| (k.ln(), v.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    check(sxx > 0.0, "k_range", "needs at least two distinct k values")?;
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xy
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        k_range,
    })
}
