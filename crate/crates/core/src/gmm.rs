//! Full-covariance Gaussian mixtures: EM fitting, AIC model selection and
//! learning-progress-proportional sampling.
//!
//! Mixtures live in the normalized `(params ⧺ alp)` space of dimension
//! `d + 1`. The last mean coordinate of each component is its
//! learning-progress utility.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{TaskParams, TaskSpace};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGaussian {
    pub mean: Vec<f64>,
    /// Row-major `dim × dim`.
    pub covariance: Vec<f64>,
    pub mixture_weight: f64,
    /// Learning-progress utility, the last coordinate of `mean`.
    pub lp: f64,
}

impl WeightedGaussian {
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>, mixture_weight: f64) -> Self {
        let lp = mean.last().copied().unwrap_or(0.0);
        Self {
            mean,
            covariance,
            mixture_weight,
            lp,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn cov(&self, row: usize, col: usize) -> f64 {
        self.covariance[row * self.dim() + col]
    }

    fn cov_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim(), self.dim(), &self.covariance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmSnapshot {
    pub components: Vec<WeightedGaussian>,
    pub fit_episode: u64,
}

impl GmmSnapshot {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once the log-likelihood gain per point falls below this.
    pub tol_per_point: f64,
    /// Lower bound on covariance eigenvalues after each M-step.
    pub reg_covar: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol_per_point: 1e-4,
            reg_covar: 1e-6,
        }
    }
}

/// Result of one EM run.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub components: Vec<WeightedGaussian>,
    /// Data log-likelihood at the start of every iteration, then at the final parameters.
    pub log_likelihood_trace: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    /// All points were identical; the mixture is a single floor-covariance component.
    pub degenerate: bool,
}

impl GmmFit {
    pub fn into_snapshot(self, fit_episode: u64) -> GmmSnapshot {
        GmmSnapshot {
            components: self.components,
            fit_episode,
        }
    }
}

/// Cached Cholesky factor of one component, for density evaluation.
struct Density {
    mean: Vec<f64>,
    /// Lower-triangular factor, row-major.
    chol: Vec<f64>,
    log_norm: f64,
    log_weight: f64,
}

impl Density {
    fn new(mean: &[f64], cov: &DMatrix<f64>, weight: f64, reg: f64) -> Self {
        let dim = mean.len();
        let mut jitter = 0.0;
        let factor = loop {
            let mut m = cov.clone();
            for i in 0..dim {
                m[(i, i)] += jitter;
            }
            if let Some(c) = m.cholesky() {
                break c.l();
            }
            jitter = if jitter == 0.0 { reg.max(1e-12) } else { jitter * 10.0 };
        };
        let mut chol = vec![0.0; dim * dim];
        let mut log_det = 0.0;
        for i in 0..dim {
            for j in 0..=i {
                chol[i * dim + j] = factor[(i, j)];
            }
            log_det += 2.0 * factor[(i, i)].ln();
        }
        Self {
            mean: mean.to_vec(),
            chol,
            log_norm: -0.5 * (dim as f64 * LN_2PI + log_det),
            log_weight: weight.ln(),
        }
    }

    fn log_pdf(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let dim = self.mean.len();
        let mut maha = 0.0;
        for i in 0..dim {
            let mut v = x[i] - self.mean[i];
            for j in 0..i {
                v -= self.chol[i * dim + j] * scratch[j];
            }
            v /= self.chol[i * dim + i];
            scratch[i] = v;
            maha += v * v;
        }
        self.log_norm - 0.5 * maha
    }
}

fn densities(components: &[WeightedGaussian], reg: f64) -> Vec<Density> {
    components
        .iter()
        .map(|c| Density::new(&c.mean, &c.cov_matrix(), c.mixture_weight, reg))
        .collect()
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Total data log-likelihood under a mixture.
pub fn log_likelihood(components: &[WeightedGaussian], points: &[Vec<f64>]) -> f64 {
    let dens = densities(components, EmConfig::default().reg_covar);
    e_step(&dens, points, None)
}

/// Computes the log-likelihood; fills `resp` (row-major `n × k`) when given.
fn e_step(dens: &[Density], points: &[Vec<f64>], mut resp: Option<&mut [f64]>) -> f64 {
    let k = dens.len();
    let dim = dens.first().map_or(0, |d| d.mean.len());
    let mut scratch = vec![0.0; dim];
    let mut logs = vec![0.0; k];
    let mut total = 0.0;
    for (i, x) in points.iter().enumerate() {
        for (j, d) in dens.iter().enumerate() {
            logs[j] = d.log_weight + d.log_pdf(x, &mut scratch);
        }
        let lse = log_sum_exp(&logs);
        total += lse;
        if let Some(r) = resp.as_deref_mut() {
            for j in 0..k {
                r[i * k + j] = (logs[j] - lse).exp();
            }
        }
    }
    total
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_pp_seeds<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in nearest.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[idx].clone();
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn data_covariance(points: &[Vec<f64>], reg: f64) -> DMatrix<f64> {
    let dim = points[0].len();
    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / n;
        }
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for p in points {
        for a in 0..dim {
            for b in 0..=a {
                cov[(a, b)] += (p[a] - mean[a]) * (p[b] - mean[b]) / n;
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            cov[(b, a)] = cov[(a, b)];
        }
        cov[(a, a)] += reg;
    }
    cov
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::TooFewPoints {
            points: points.len(),
            k: 1,
        });
    }
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    Ok(dim)
}

fn floor_covariance(dim: usize, reg: f64) -> Vec<f64> {
    let mut cov = vec![0.0; dim * dim];
    for i in 0..dim {
        cov[i * dim + i] = reg;
    }
    cov
}

/// Fits a `k`-component full-covariance mixture by EM.
///
/// Means are seeded k-means++-style from the data, covariances start at
/// the data covariance and weights start uniform.
pub fn fit_em<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k: usize,
    config: &EmConfig,
    rng: &mut R,
) -> Result<GmmFit> {
    if k == 0 || points.len() < k {
        return Err(Error::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let dim = check_points(points)?;
    let n = points.len();
    let reg = config.reg_covar;

    if points.iter().all(|p| p == &points[0]) {
        let comp = WeightedGaussian::new(points[0].clone(), floor_covariance(dim, reg), 1.0);
        let ll = log_likelihood(std::slice::from_ref(&comp), points);
        return Ok(GmmFit {
            components: vec![comp],
            log_likelihood_trace: vec![ll],
            log_likelihood: ll,
            converged: true,
            degenerate: true,
        });
    }

    let data_cov = data_covariance(points, reg);
    let mut dens: Vec<Density> = kmeans_pp_seeds(points, k, rng)
        .iter()
        .map(|m| Density::new(m, &data_cov, 1.0 / k as f64, reg))
        .collect();
    let mut components: Vec<WeightedGaussian> = Vec::with_capacity(k);

    let mut resp = vec![0.0; n * k];
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iter {
        let ll = e_step(&dens, points, Some(&mut resp));
        if let Some(prev) = trace.last() {
            if ll - prev < config.tol_per_point * n as f64 {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        components = m_step(points, &resp, k, dim, reg);
        dens = components
            .iter()
            .map(|c| Density::new(&c.mean, &c.cov_matrix(), c.mixture_weight, reg))
            .collect();
    }
    if !converged {
        trace.push(e_step(&dens, points, None));
    }
    if components.is_empty() {
        // max_iter == 0: keep the seeded parameters
        components = dens
            .iter()
            .map(|d| {
                WeightedGaussian::new(d.mean.clone(), data_cov.as_slice().to_vec(), 1.0 / k as f64)
            })
            .collect();
    }
    let log_likelihood = *trace.last().expect("at least one likelihood evaluation");
    Ok(GmmFit {
        components,
        log_likelihood_trace: trace,
        log_likelihood,
        converged,
        degenerate: false,
    })
}

fn m_step(points: &[Vec<f64>], resp: &[f64], k: usize, dim: usize, reg: f64) -> Vec<WeightedGaussian> {
    let mut nk = vec![10.0 * f64::EPSILON; k];
    let mut means = vec![vec![0.0; dim]; k];
    for (i, x) in points.iter().enumerate() {
        for j in 0..k {
            let r = resp[i * k + j];
            nk[j] += r;
            for (m, v) in means[j].iter_mut().zip(x) {
                *m += r * v;
            }
        }
    }
    for j in 0..k {
        for m in means[j].iter_mut() {
            *m /= nk[j];
        }
    }
    let mut covs = vec![vec![0.0; dim * dim]; k];
    let mut diff = vec![0.0; dim];
    for (i, x) in points.iter().enumerate() {
        for j in 0..k {
            let r = resp[i * k + j];
            if r == 0.0 {
                continue;
            }
            for a in 0..dim {
                diff[a] = x[a] - means[j][a];
            }
            let cov = &mut covs[j];
            for a in 0..dim {
                for b in 0..=a {
                    cov[a * dim + b] += r * diff[a] * diff[b];
                }
            }
        }
    }
    let total: f64 = nk.iter().sum();
    (0..k)
        .map(|j| {
            let cov = &mut covs[j];
            for a in 0..dim {
                for b in 0..=a {
                    let v = cov[a * dim + b] / nk[j];
                    cov[a * dim + b] = v;
                    cov[b * dim + a] = v;
                }
            }
            apply_floor(cov, dim, reg);
            WeightedGaussian::new(std::mem::take(&mut means[j]), std::mem::take(cov), nk[j] / total)
        })
        .collect()
}

/// Clips the eigenvalues of a symmetric `cov` from below at `reg`, the
/// likelihood-optimal covariance under that floor. Covariances already
/// above the floor are left untouched.
fn apply_floor(cov: &mut [f64], dim: usize, reg: f64) {
    let mut shifted = DMatrix::from_row_slice(dim, dim, cov);
    for i in 0..dim {
        shifted[(i, i)] -= reg;
    }
    if shifted.cholesky().is_some() {
        return;
    }
    let m = DMatrix::from_row_slice(dim, dim, cov);
    if m.iter().any(|v| !v.is_finite()) {
        cov.copy_from_slice(&floor_covariance(dim, reg));
        return;
    }
    let eig = m.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| l.max(reg));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    for a in 0..dim {
        for b in 0..=a {
            let x = 0.5 * (out[(a, b)] + out[(b, a)]);
            cov[a * dim + b] = x;
            cov[b * dim + a] = x;
        }
    }
}

/// Free parameters of a `k`-component full-covariance mixture in `dim` dimensions.
pub fn parameter_count(k: usize, dim: usize) -> usize {
    k * (dim + dim * (dim + 1) / 2) + (k - 1)
}

/// Akaike information criterion `2·n_params − 2·log L`.
pub fn aic(components: &[WeightedGaussian], points: &[Vec<f64>]) -> f64 {
    let dim = components.first().map_or(0, WeightedGaussian::dim);
    aic_from(components.len(), dim, log_likelihood(components, points))
}

fn aic_from(k: usize, dim: usize, log_likelihood: f64) -> f64 {
    2.0 * parameter_count(k, dim) as f64 - 2.0 * log_likelihood
}

/// Candidate fits and their AIC scores, best first by construction of `best`.
#[derive(Debug, Clone)]
pub struct ModelSelection {
    pub best: GmmFit,
    pub scores: Vec<(usize, f64)>,
    pub fits: Vec<GmmFit>,
}

/// Fits `k = 2..=k_max` (skipping `k > |points|`) and keeps the minimal-AIC mixture.
pub fn select_best_k<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k_max: usize,
    config: &EmConfig,
    rng: &mut R,
) -> Result<ModelSelection> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            points: points.len(),
            k: 2,
        });
    }
    let dim = check_points(points)?;
    let mut scores = Vec::new();
    let mut fits = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for k in 2..=k_max.max(2) {
        if k > points.len() {
            break;
        }
        let fit = fit_em(points, k, config, rng)?;
        let score = aic_from(fit.components.len(), dim, fit.log_likelihood);
        scores.push((k, score));
        let degenerate = fit.degenerate;
        fits.push(fit);
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, fits.len() - 1));
        }
        if degenerate {
            // every larger k collapses to the same single component
            break;
        }
    }
    let (_, idx) = best.expect("k = 2 is always fitted");
    Ok(ModelSelection {
        best: fits[idx].clone(),
        scores,
        fits,
    })
}

/// Picks a component index with probability proportional to its `lp`.
///
/// Negative utilities count as zero; an all-zero mixture is sampled uniformly.
pub fn sample_component_by_lp<R: Rng + ?Sized>(mix: &[WeightedGaussian], rng: &mut R) -> Result<usize> {
    if mix.is_empty() {
        return Err(Error::EmptyMixture);
    }
    let total: f64 = mix.iter().map(|c| c.lp.max(0.0)).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Ok(rng.random_range(0..mix.len()));
    }
    let mut target = rng.random::<f64>() * total;
    let mut last_positive = 0;
    for (i, c) in mix.iter().enumerate() {
        let w = c.lp.max(0.0);
        if w > 0.0 {
            if target < w {
                return Ok(i);
            }
            last_positive = i;
        }
        target -= w;
    }
    Ok(last_positive)
}

/// Draws task parameters from the parameter block of `g`, mapped back to
/// raw coordinates and clipped into the space.
pub fn sample_task_from<R: Rng + ?Sized>(
    g: &WeightedGaussian,
    space: &TaskSpace,
    rng: &mut R,
) -> Result<TaskParams> {
    let d = space.dim();
    if g.dim() < d {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            got: g.dim(),
        });
    }
    let block = DMatrix::from_fn(d, d, |i, j| g.cov(i, j));
    let chol = match block.clone().cholesky() {
        Some(c) => c.l(),
        None => {
            let mut m = block;
            for i in 0..d {
                m[(i, i)] += 1e-9;
            }
            m.cholesky()
                .map(|c| c.l())
                .unwrap_or_else(|| DMatrix::zeros(d, d))
        }
    };
    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let x: Vec<f64> = (0..d)
        .map(|i| g.mean[i] + (0..=i).map(|j| chol[(i, j)] * z[j]).sum::<f64>())
        .collect();
    let raw = space.denormalize(&TaskParams(x))?;
    space.clip(&raw)
}
