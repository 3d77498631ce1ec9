//! Fixed-rate k-point codebooks: k-means++ seeding, Lloyd iterations with
//! restarts (polished by single-point transfers once Lloyd stalls), and
//! min-of-k squared-error evaluation.
//!
//! Samples are passed as a flat row-major slice plus the dimension, one
//! sample per `d` consecutive values.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{check, Error, Result};
use crate::rng::Seed;

/// A list of `k` candidate points in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centroids: Vec<f64>,
    k: usize,
    d: usize,
    train_distortion: f64,
    // (value, index) sorted by value; only kept for d = 1
    sorted: Option<Vec<(f64, usize)>>,
}

impl Codebook {
    pub fn new(d: usize, centroids: Vec<f64>, train_distortion: f64) -> Result<Self> {
        check(d >= 1, "d", "dimension must be at least 1")?;
        check(
            !centroids.is_empty() && centroids.len().is_multiple_of(d),
            "centroids",
            format!("need a positive multiple of d = {d} coordinates, got {}", centroids.len()),
        )?;
        if let Some(i) = centroids.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i / d });
        }
        check(
            train_distortion >= 0.0,
            "train_distortion",
            "must be nonnegative",
        )?;
        let k = centroids.len() / d;
        let sorted = (d == 1).then(|| {
            let mut s: Vec<(f64, usize)> = centroids.iter().copied().zip(0..).collect();
            s.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            s
        });
        Ok(Self {
            centroids,
            k,
            d,
            train_distortion,
            sorted,
        })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        Self::new(d, points.concat(), 0.0)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn train_distortion(&self) -> f64 {
        self.train_distortion
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn centroid(&self, i: usize) -> &[f64] {
        &self.centroids[i * self.d..(i + 1) * self.d]
    }

    /// `min_i ||x - c_i||^2`.
    pub fn min_sqerr(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        Ok(self.nearest(x).1)
    }

    /// Index and squared distance of the nearest centroid; ties go to the lower index.
    pub(crate) fn nearest(&self, x: &[f64]) -> (usize, f64) {
        match &self.sorted {
            Some(sorted) => nearest_sorted(sorted, x[0]),
            None => nearest_brute(&self.centroids, self.d, x),
        }
    }

    pub fn translate(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: shift.len(),
            });
        }
        let moved = self
            .centroids
            .chunks_exact(self.d)
            .flat_map(|c| c.iter().zip(shift).map(|(a, b)| a + b))
            .collect();
        Self::new(self.d, moved, self.train_distortion)
    }

    /// One centroid per row, header `c0,...,c{d-1}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = (0..self.d).map(|j| format!("c{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for c in self.centroids.chunks_exact(self.d) {
            let row: Vec<String> = c.iter().map(f64::to_string).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `min_i ||x - c_i||^2` over the codebook.
pub fn min_of_k_sqerr(x: &[f64], codebook: &Codebook) -> Result<f64> {
    codebook.min_sqerr(x)
}

/// Shifts every centroid by `shift`; the recorded training distortion is kept.
pub fn translate_codebook(codebook: &Codebook, shift: &[f64]) -> Result<Codebook> {
    codebook.translate(shift)
}

#[inline]
fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_brute(centroids: &[f64], d: usize, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.chunks_exact(d).enumerate() {
        let dist = sqdist(x, c);
        if dist < best.1 {
            best = (i, dist);
        }
    }
    best
}

fn nearest_sorted(sorted: &[(f64, usize)], x: f64) -> (usize, f64) {
    let pos = sorted.partition_point(|c| c.0 < x);
    let mut best = (usize::MAX, f64::INFINITY);
    // Walk outwards over equal values so ties resolve to the lowest index.
    let mut consider = |j: usize| {
        let (v, i) = sorted[j];
        let dist = (x - v) * (x - v);
        if dist < best.1 || (dist == best.1 && i < best.0) {
            best = (i, dist);
        }
    };
    let mut j = pos;
    while j < sorted.len() {
        consider(j);
        if j + 1 < sorted.len() && sorted[j + 1].0 == sorted[j].0 {
            j += 1;
        } else {
            break;
        }
    }
    if pos > 0 {
        let mut j = pos - 1;
        loop {
            consider(j);
            if j > 0 && sorted[j - 1].0 == sorted[j].0 {
                j -= 1;
            } else {
                break;
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyCellPolicy {
    /// Move an empty centroid onto the training point currently farthest from its centroid.
    RespawnAtFarthestPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Training sample count; `None` means `max(200 k, 100_000)`.
    pub n_train: Option<usize>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub restarts: usize,
    pub empty_cell_policy: EmptyCellPolicy,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_train: None,
            max_iters: 200,
            rel_tol: 1e-6,
            restarts: 8,
            empty_cell_policy: EmptyCellPolicy::RespawnAtFarthestPoint,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.n_train != Some(0), "n_train", "must be positive")?;
        check(self.max_iters >= 1, "max_iters", "must be positive")?;
        check(
            self.rel_tol > 0.0 && self.rel_tol.is_finite(),
            "rel_tol",
            "must be positive",
        )?;
        check(self.restarts >= 1, "restarts", "must be at least 1")
    }

    pub fn train_size(&self, k: usize) -> usize {
        self.n_train.unwrap_or_else(|| (200 * k).max(100_000))
    }
}

fn validate_samples(samples: &[f64], d: usize, k: usize) -> Result<usize> {
    check(d >= 1, "d", "dimension must be at least 1")?;
    check(k >= 1, "k", "list size must be at least 1")?;
    check(
        samples.len().is_multiple_of(d),
        "samples",
        format!("length {} is not a multiple of d = {d}", samples.len()),
    )?;
    let n = samples.len() / d;
    if k > n {
        return Err(Error::TooFewSamples { k, samples: n });
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i / d });
    }
    Ok(n)
}

/// Best of `cfg.restarts` k-means++/Lloyd runs, by training distortion.
pub fn kmeans_fit(samples: &[f64], d: usize, k: usize, cfg: &FitConfig, seed: &Seed) -> Result<Codebook> {
    fit(samples, d, k, cfg, seed, None)
}

/// Like [`kmeans_fit`], but restart 0 starts from `warm` (which may have fewer
/// than `k` centroids) with the missing centroids added by k-means++ D^2
/// sampling. The result then never has higher training distortion than
/// `warm` evaluated on the same samples.
pub fn kmeans_fit_warm(
    samples: &[f64],
    d: usize,
    k: usize,
    cfg: &FitConfig,
    seed: &Seed,
    warm: &Codebook,
) -> Result<Codebook> {
    if warm.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: warm.dim(),
        });
    }
    check(warm.k() <= k, "warm", format!("warm start has {} > k = {k} centroids", warm.k()))?;
    fit(samples, d, k, cfg, seed, Some(warm))
}

fn fit(
    samples: &[f64],
    d: usize,
    k: usize,
    cfg: &FitConfig,
    seed: &Seed,
    warm: Option<&Codebook>,
) -> Result<Codebook> {
    cfg.validate()?;
    validate_samples(samples, d, k)?;
    let runs: Vec<Run> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut state = match (r, warm) {
                (0, Some(w)) => State::from_warm(samples, d, k, w, &mut seed.child(0).rng()),
                _ => State::kmeanspp(samples, d, k, &mut seed.child(r as u64).rng()),
            };
            state.lloyd(cfg)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.distortion < a.distortion { b } else { a })
        .expect("at least one restart");
    Codebook::new(d, best.centroids, best.distortion)
}

struct Run {
    centroids: Vec<f64>,
    distortion: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    history: Vec<f64>,
}

struct State<'a> {
    samples: &'a [f64],
    d: usize,
    k: usize,
    centroids: Vec<f64>,
    labels: Vec<usize>,
    dists: Vec<f64>,
    bounds: Option<Bounds>,
}

/// Hamerly bounds: `upper[i]` bounds the distance from point `i` to its
/// assigned centroid, `lower[i]` the distance to every other centroid, both
/// relative to the centroids saved in `at`.
struct Bounds {
    at: Vec<f64>,
    upper: Vec<f64>,
    lower: Vec<f64>,
}

/// Point transfers scan every centroid for every point on each pass; above
/// this many point-centroid pairs only Lloyd iterations are run.
const TRANSFER_MAX_PAIRS: usize = 1 << 22;

impl<'a> State<'a> {
    fn n(&self) -> usize {
        self.labels.len()
    }

    fn point(&self, i: usize) -> &'a [f64] {
        &self.samples[i * self.d..(i + 1) * self.d]
    }

    fn kmeanspp<R: Rng + ?Sized>(samples: &'a [f64], d: usize, k: usize, rng: &mut R) -> Self {
        let n = samples.len() / d;
        let first = rng.random_range(0..n);
        let centroids = samples[first * d..(first + 1) * d].to_vec();
        let labels = vec![0usize; n];
        let dists: Vec<f64> = samples.chunks_exact(d).map(|p| sqdist(p, &centroids)).collect();
        let mut state = Self {
            samples,
            d,
            k,
            centroids,
            labels,
            dists,
            bounds: None,
        };
        state.seed_remaining(rng);
        state
    }

    /// Adds centroids by D^2 sampling until there are `k`. `labels` and
    /// `dists` must describe the current centroids.
    fn seed_remaining<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (d, n) = (self.d, self.n());
        for c in self.centroids.len() / d..self.k {
            let total: f64 = self.dists.iter().sum();
            let pick = if total > 0.0 {
                let target = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = n - 1;
                for (i, &w) in self.dists.iter().enumerate() {
                    acc += w;
                    if acc > target && w > 0.0 {
                        pick = i;
                        break;
                    }
                }
                pick
            } else {
                rng.random_range(0..n)
            };
            self.centroids.extend_from_slice(self.point(pick));
            let new = &self.centroids[c * d..(c + 1) * d];
            for (i, p) in self.samples.chunks_exact(d).enumerate() {
                let dist = sqdist(p, new);
                if dist < self.dists[i] {
                    self.dists[i] = dist;
                    self.labels[i] = c;
                }
            }
        }
    }

    /// `warm` plus D^2-sampled centroids; starts no worse than `warm` itself.
    fn from_warm<R: Rng + ?Sized>(samples: &'a [f64], d: usize, k: usize, warm: &Codebook, rng: &mut R) -> Self {
        let n = samples.len() / d;
        let mut state = Self {
            samples,
            d,
            k,
            centroids: warm.centroids().to_vec(),
            labels: vec![0; n],
            dists: vec![0.0; n],
            bounds: None,
        };
        for i in 0..n {
            let (j, dist) = warm.nearest(state.point(i));
            state.labels[i] = j;
            state.dists[i] = dist;
        }
        state.seed_remaining(rng);
        state.assign();
        // Coincident warm centroids leave empty cells.
        let counts = state.counts();
        state.respawn_empty(&counts);
        state
    }

    fn assign(&mut self) -> f64 {
        if self.d == 1 {
            let cb = Codebook::new(1, self.centroids.clone(), 0.0).expect("finite centroids");
            for (i, p) in self.samples.iter().enumerate() {
                let (j, dist) = cb.nearest(std::slice::from_ref(p));
                self.labels[i] = j;
                self.dists[i] = dist;
            }
        } else {
            match self.bounds.take() {
                Some(b) => self.assign_bounded(b),
                None => self.assign_full(),
            }
        }
        self.dists.iter().sum::<f64>() / self.n() as f64
    }

    fn nearest_two(&self, p: &[f64]) -> (usize, f64, f64) {
        let (mut best, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
        for (j, c) in self.centroids.chunks_exact(self.d).enumerate() {
            let v = sqdist(p, c);
            if v < d1 {
                d2 = d1;
                d1 = v;
                best = j;
            } else if v < d2 {
                d2 = v;
            }
        }
        (best, d1, d2)
    }

    fn assign_full(&mut self) {
        let n = self.n();
        let mut upper = vec![0.0; n];
        let mut lower = vec![0.0; n];
        for i in 0..n {
            let (j, d1, d2) = self.nearest_two(self.point(i));
            self.labels[i] = j;
            self.dists[i] = d1;
            upper[i] = d1.sqrt();
            lower[i] = d2.sqrt();
        }
        self.bounds = Some(Bounds {
            at: self.centroids.clone(),
            upper,
            lower,
        });
    }

    fn assign_bounded(&mut self, mut b: Bounds) {
        let (d, k) = (self.d, self.k);
        let moved: Vec<f64> = b
            .at
            .chunks_exact(d)
            .zip(self.centroids.chunks_exact(d))
            .map(|(o, c)| sqdist(o, c).sqrt())
            .collect();
        let (mut top, mut top_j, mut second) = (0.0, 0, 0.0);
        for (j, &m) in moved.iter().enumerate() {
            if m > top {
                second = top;
                top = m;
                top_j = j;
            } else if m > second {
                second = m;
            }
        }
        // Half the distance from each centroid to its nearest neighbour.
        let mut half_gap = vec![f64::INFINITY; k];
        for a in 0..k {
            for c in a + 1..k {
                let g = 0.5 * sqdist(&self.centroids[a * d..(a + 1) * d], &self.centroids[c * d..(c + 1) * d]).sqrt();
                half_gap[a] = half_gap[a].min(g);
                half_gap[c] = half_gap[c].min(g);
            }
        }
        for i in 0..self.n() {
            let a = self.labels[i];
            let p = self.point(i);
            b.upper[i] += moved[a];
            b.lower[i] -= if a == top_j { second } else { top };
            let bar = half_gap[a].max(b.lower[i]);
            if b.upper[i] > bar {
                let exact = sqdist(p, &self.centroids[a * d..(a + 1) * d]);
                b.upper[i] = exact.sqrt();
                if b.upper[i] > bar {
                    let (j, d1, d2) = self.nearest_two(p);
                    self.labels[i] = j;
                    b.upper[i] = d1.sqrt();
                    b.lower[i] = d2.sqrt();
                }
            }
            let l = self.labels[i];
            self.dists[i] = sqdist(p, &self.centroids[l * d..(l + 1) * d]);
        }
        b.at.copy_from_slice(&self.centroids);
        self.bounds = Some(b);
    }

    fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    fn update_means(&mut self) -> Vec<usize> {
        let d = self.d;
        let counts = self.counts();
        let mut acc = vec![0.0; self.k * d];
        for (i, p) in self.samples.chunks_exact(d).enumerate() {
            let l = self.labels[i];
            for (a, v) in acc[l * d..(l + 1) * d].iter_mut().zip(p) {
                *a += v;
            }
        }
        for (j, &cnt) in counts.iter().enumerate() {
            if cnt > 0 {
                for (c, a) in self.centroids[j * d..(j + 1) * d].iter_mut().zip(&acc[j * d..(j + 1) * d]) {
                    *c = a / cnt as f64;
                }
            }
        }
        for i in 0..self.n() {
            let l = self.labels[i];
            self.dists[i] = sqdist(self.point(i), &self.centroids[l * d..(l + 1) * d]);
        }
        counts
    }

    /// Moves each empty centroid onto the currently worst-served training point.
    fn respawn_empty(&mut self, counts: &[usize]) {
        let d = self.d;
        for (j, &cnt) in counts.iter().enumerate() {
            if cnt > 0 {
                continue;
            }
            let far = self
                .dists
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                .0;
            let p = self.point(far);
            self.centroids[j * d..(j + 1) * d].copy_from_slice(p);
            self.labels[far] = j;
            self.dists[far] = 0.0;
            self.bounds = None;
        }
    }

    /// Lloyd iterations appended to `history`; returns the final distortion.
    fn lloyd_phase(&mut self, cfg: &FitConfig, mut distortion: f64, history: &mut Vec<f64>) -> f64 {
        for _ in 0..cfg.max_iters {
            if distortion == 0.0 {
                break;
            }
            let counts = self.update_means();
            self.respawn_empty(&counts);
            let next = self.assign();
            assert!(
                next <= distortion * (1.0 + 1e-9),
                "Lloyd iteration increased distortion: {distortion} -> {next}"
            );
            history.push(next);
            let improvement = (distortion - next) / distortion;
            distortion = next;
            if improvement < cfg.rel_tol {
                break;
            }
        }
        distortion
    }

    /// Single-point transfers (Hartigan): moves a point from cell `a` to `b`
    /// whenever that lowers the within-cell sum of squares with both means
    /// updated. Returns whether anything moved.
    fn transfer_passes(&mut self, max_passes: usize) -> bool {
        let d = self.d;
        let mut counts = self.update_means();
        self.respawn_empty(&counts);
        counts = self.counts();
        // Means of the current partition (respawned centroids sit on their point).
        let mut acc = vec![0.0; self.k * d];
        for (i, p) in self.samples.chunks_exact(d).enumerate() {
            let l = self.labels[i];
            for (a, v) in acc[l * d..(l + 1) * d].iter_mut().zip(p) {
                *a += v;
            }
        }
        for (j, &cnt) in counts.iter().enumerate() {
            for (c, a) in self.centroids[j * d..(j + 1) * d].iter_mut().zip(&acc[j * d..(j + 1) * d]) {
                *c = a / cnt as f64;
            }
        }
        self.bounds = None;
        let mut any = false;
        for _ in 0..max_passes {
            let mut moved = false;
            for i in 0..self.n() {
                let a = self.labels[i];
                let na = counts[a];
                if na <= 1 {
                    continue;
                }
                let x = self.point(i);
                let leave = na as f64 / (na - 1) as f64 * sqdist(x, &self.centroids[a * d..(a + 1) * d]);
                let mut best = (a, leave);
                for (b, c) in self.centroids.chunks_exact(d).enumerate() {
                    if b == a {
                        continue;
                    }
                    let nb = counts[b] as f64;
                    let join = nb / (nb + 1.0) * sqdist(x, c);
                    if join < best.1 {
                        best = (b, join);
                    }
                }
                let b = best.0;
                if b == a || best.1 >= leave * (1.0 - 1e-12) {
                    continue;
                }
                let (fa, fb) = (na as f64, counts[b] as f64);
                for j in 0..d {
                    let ca = &mut self.centroids[a * d + j];
                    *ca = (fa * *ca - x[j]) / (fa - 1.0);
                    let cb = &mut self.centroids[b * d + j];
                    *cb = (fb * *cb + x[j]) / (fb + 1.0);
                }
                counts[a] -= 1;
                counts[b] += 1;
                self.labels[i] = b;
                moved = true;
            }
            if !moved {
                break;
            }
            any = true;
        }
        any
    }

    fn lloyd(&mut self, cfg: &FitConfig) -> Run {
        const ROUNDS: usize = 4;
        const PASSES: usize = 8;
        let mut distortion = self.assign();
        let mut history = vec![distortion];
        distortion = self.lloyd_phase(cfg, distortion, &mut history);
        let rounds = if self.n() * self.k <= TRANSFER_MAX_PAIRS { ROUNDS } else { 0 };
        for _ in 0..rounds {
            if distortion == 0.0 || !self.transfer_passes(PASSES) {
                break;
            }
            let next = self.assign();
            assert!(
                next <= distortion * (1.0 + 1e-9),
                "point transfers increased distortion: {distortion} -> {next}"
            );
            history.push(next);
            distortion = self.lloyd_phase(cfg, next, &mut history);
        }
        Run {
            centroids: self.centroids.clone(),
            distortion,
            history,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianModel;
    use proptest::prelude::*;

    fn gaussian_samples(n: usize, d: usize, seed: u64) -> Vec<f64> {
        let m = GaussianModel::new(d, 1.0, 1.0).unwrap();
        let mut rng = Seed::new(seed).rng();
        let mut out = vec![0.0; n * d];
        for p in out.chunks_exact_mut(d) {
            m.fill_prior(&mut rng, p);
        }
        out
    }

    fn mean_sqerr(samples: &[f64], cb: &Codebook) -> f64 {
        let d = cb.dim();
        samples.chunks_exact(d).map(|p| cb.min_sqerr(p).unwrap()).sum::<f64>() / (samples.len() / d) as f64
    }

    #[test]
    fn min_of_k_examples() {
        let cb = Codebook::new(1, vec![-1.0, 2.0], 0.0).unwrap();
        assert_eq!(min_of_k_sqerr(&[0.0], &cb).unwrap(), 1.0);
        assert_eq!(min_of_k_sqerr(&[2.0], &cb).unwrap(), 0.0);
        let cb = Codebook::new(2, vec![0.0, 0.0, 3.0, 4.0], 0.0).unwrap();
        assert_eq!(min_of_k_sqerr(&[3.0, 3.0], &cb).unwrap(), 1.0);
        assert_eq!(min_of_k_sqerr(&[3.0, 4.0], &cb).unwrap(), 0.0);
        assert!(matches!(
            min_of_k_sqerr(&[1.0], &cb),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn sorted_lookup_matches_brute_force() {
        let cents = vec![0.5, -2.0, 0.5, 3.0, 1.25, -2.0, 7.5];
        let cb = Codebook::new(1, cents.clone(), 0.0).unwrap();
        for i in -40..=40 {
            let x = i as f64 * 0.25;
            assert_eq!(cb.nearest(&[x]), nearest_brute(&cents, 1, &[x]), "x = {x}");
        }
    }

    #[test]
    fn translation_examples() {
        let cb = Codebook::new(1, vec![-0.5, 0.5], 0.1).unwrap();
        assert_eq!(translate_codebook(&cb, &[0.0]).unwrap(), cb);
        let moved = translate_codebook(&cb, &[2.0]).unwrap();
        assert_eq!(moved.centroids(), &[1.5, 2.5]);
        assert_eq!(moved.train_distortion(), 0.1);
        assert!(translate_codebook(&cb, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn k_one_is_the_sample_mean() {
        let s = gaussian_samples(2000, 3, 1);
        let cb = kmeans_fit(&s, 3, 1, &FitConfig::default(), &Seed::new(2)).unwrap();
        let n = 2000.0;
        let mean: Vec<f64> = (0..3).map(|j| s.iter().skip(j).step_by(3).sum::<f64>() / n).collect();
        for j in 0..3 {
            assert!((cb.centroid(0)[j] - mean[j]).abs() < 1e-12);
        }
        let trace_var: f64 = s.chunks_exact(3).map(|p| sqdist(p, &mean)).sum::<f64>() / n;
        assert!((cb.train_distortion() - trace_var).abs() < 1e-12 * trace_var);
    }

    #[test]
    fn k_equal_to_n_is_lossless() {
        let s = gaussian_samples(12, 2, 3);
        let cb = kmeans_fit(&s, 2, 12, &FitConfig::default(), &Seed::new(4)).unwrap();
        assert_eq!(cb.train_distortion(), 0.0);
        assert_eq!(cb.k(), 12);
    }

    #[test]
    fn two_symmetric_points() {
        let s = vec![-1.0, 1.0, -1.0, 1.0, 1.0, -1.0];
        let cb = kmeans_fit(&s, 1, 2, &FitConfig::default(), &Seed::new(5)).unwrap();
        let mut c = cb.centroids().to_vec();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![-1.0, 1.0]);
        assert_eq!(cb.train_distortion(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = FitConfig::default();
        assert!(matches!(
            kmeans_fit(&[1.0, 2.0], 1, 3, &cfg, &Seed::new(0)),
            Err(Error::TooFewSamples { k: 3, samples: 2 })
        ));
        assert!(matches!(
            kmeans_fit(&[1.0, f64::NAN, 0.0], 1, 1, &cfg, &Seed::new(0)),
            Err(Error::NonFinite { index: 1 })
        ));
        let bad = FitConfig { restarts: 0, ..cfg };
        assert!(kmeans_fit(&[1.0, 2.0], 1, 1, &bad, &Seed::new(0)).is_err());
        assert!(kmeans_fit(&[1.0, 2.0, 3.0], 2, 1, &cfg, &Seed::new(0)).is_err());
    }

    #[test]
    fn lloyd_history_is_nonincreasing() {
        let s = gaussian_samples(5000, 2, 6);
        let mut state = State::kmeanspp(&s, 2, 16, &mut Seed::new(7).rng());
        let cfg = FitConfig { rel_tol: 1e-12, max_iters: 100, ..Default::default() };
        let run = state.lloyd(&cfg);
        assert!(run.history.len() > 2);
        assert!(run.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{:?}", run.history);
        assert!((run.distortion - mean_sqerr(&s, &Codebook::new(2, run.centroids, 0.0).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn empty_cells_are_respawned() {
        // Three coincident centroids: two of them start empty.
        let s = vec![0.0, 0.1, 5.0, 5.1, 10.0, 10.2];
        let warm = Codebook::new(1, vec![0.05; 3], 0.0).unwrap();
        let cfg = FitConfig { restarts: 1, ..Default::default() };
        let cb = kmeans_fit_warm(&s, 1, 3, &cfg, &Seed::new(8), &warm).unwrap();
        assert_eq!(cb.k(), 3);
        let mut c = cb.centroids().to_vec();
        c.sort_by(f64::total_cmp);
        assert!((c[0] - 0.05).abs() < 1e-12 && (c[1] - 5.05).abs() < 1e-12 && (c[2] - 10.1).abs() < 1e-12);
    }

    #[test]
    fn doubling_k_with_embedded_restart_never_hurts() {
        for d in [1, 2, 5] {
            let s = gaussian_samples(4000, d, 9 + d as u64);
            let cfg = FitConfig { restarts: 2, max_iters: 30, ..Default::default() };
            let mut prev = kmeans_fit(&s, d, 1, &cfg, &Seed::new(10)).unwrap();
            for k in [2, 4, 8, 16, 32] {
                let next = kmeans_fit_warm(&s, d, k, &cfg, &Seed::new(10 + k as u64), &prev).unwrap();
                assert!(next.train_distortion() <= prev.train_distortion(), "d={d} k={k}");
                prev = next;
            }
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let s = gaussian_samples(3000, 3, 11);
        let cfg = FitConfig { restarts: 3, ..Default::default() };
        let a = kmeans_fit(&s, 3, 10, &cfg, &Seed::new(12)).unwrap();
        let b = kmeans_fit(&s, 3, 10, &cfg, &Seed::new(12)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn codebook_csv_layout() {
        let cb = Codebook::new(2, vec![1.0, -0.5, 2.25, 3.0], 0.0).unwrap();
        let mut buf = Vec::new();
        cb.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "c0,c1\n1,-0.5\n2.25,3\n");
    }

    /// Exhaustive optimum over contiguous 2-partitions of the sorted points.
    fn best_two_split(points: &[f64]) -> f64 {
        let mut p = points.to_vec();
        p.sort_by(f64::total_cmp);
        let sse = |s: &[f64]| {
            let m = s.iter().sum::<f64>() / s.len() as f64;
            s.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
        };
        (1..p.len())
            .map(|cut| (sse(&p[..cut]) + sse(&p[cut..])) / p.len() as f64)
            .fold(f64::INFINITY, f64::min)
    }

    proptest! {
        #[test]
        fn translation_invariance(
            x in proptest::collection::vec(-10.0f64..10.0, 3),
            s in proptest::collection::vec(-10.0f64..10.0, 3),
            c in proptest::collection::vec(-10.0f64..10.0, 3..30),
        ) {
            let k = c.len() / 3;
            let cb = Codebook::new(3, c[..k * 3].to_vec(), 0.0).unwrap();
            let moved = cb.translate(&s).unwrap();
            let xs: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + b).collect();
            let a = cb.min_sqerr(&x).unwrap();
            let b = moved.min_sqerr(&xs).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn two_point_scalar_quantizer_is_optimal(
            raw in proptest::collection::btree_set(-1000i32..1000, 2..=8),
            seed in any::<u64>(),
        ) {
            let pts: Vec<f64> = raw.iter().map(|&v| v as f64 / 100.0).collect();
            let cb = kmeans_fit(&pts, 1, 2, &FitConfig::default(), &Seed::new(seed)).unwrap();
            let opt = best_two_split(&pts);
            prop_assert!((cb.train_distortion() - opt).abs() <= 1e-10, "{} vs {}", cb.train_distortion(), opt);
        }
    }
}
