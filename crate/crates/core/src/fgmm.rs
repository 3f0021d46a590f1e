//! Finite Gaussian mixtures over joint space.
//!
//! Densities are evaluated through Cholesky factors; EM works on
//! log-responsibilities. Every covariance produced by fitting has its
//! eigenvalues floored at [`COVARIANCE_FLOOR`].

use std::f64::consts::TAU;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::JointConfig;
use crate::error::{Error, Result};

/// Smallest covariance eigenvalue allowed after fitting, in rad².
pub const COVARIANCE_FLOOR: f64 = 1e-6;
pub const DEFAULT_EM_TOL: f64 = 1e-6;
pub const DEFAULT_EM_MAX_ITER: usize = 200;
const KMEANS_MAX_ITER: usize = 100;
const SYMMETRY_TOL: f64 = 1e-9;
const WEIGHT_SUM_TOL: f64 = 1e-9;

fn factor(sigma: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let n = sigma.nrows();
    if sigma.ncols() != n || sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    let scale = sigma.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (sigma[(i, j)] - sigma[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    Cholesky::new(sigma.clone()).ok_or(Error::NotPositiveDefinite)
}

/// `-½ (n ln 2π + ln|Σ|)` from a Cholesky factor.
fn log_normaliser(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    let log_det: f64 = (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
    -0.5 * (l.nrows() as f64 * TAU.ln() + log_det)
}

fn mahalanobis_sq(chol: &Cholesky<f64, Dyn>, q: &[f64], mu: &DVector<f64>) -> f64 {
    let d = DVector::from_iterator(q.len(), q.iter().zip(mu.iter()).map(|(a, b)| a - b));
    let z = chol
        .l_dirty()
        .solve_lower_triangular(&d)
        .expect("Cholesky diagonal is positive");
    z.norm_squared()
}

/// Log of the multivariate normal density.
pub fn gaussian_log_pdf(q: &[f64], mu: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    Error::check_dim(mu.len(), q.len())?;
    Error::check_dim(mu.len(), sigma.nrows())?;
    let chol = factor(sigma)?;
    let mu = DVector::from_column_slice(mu);
    Ok(log_normaliser(&chol) - 0.5 * mahalanobis_sq(&chol, q, &mu))
}

/// Multivariate normal density `N(q; mu, sigma)`.
pub fn gaussian_pdf(q: &[f64], mu: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    gaussian_log_pdf(q, mu, sigma).map(f64::exp)
}

/// Symmetrises `s` and raises every eigenvalue to at least `floor`.
pub fn floor_eigenvalues(s: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lambda = eig.eigenvalues.map(|v| v.max(floor));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&lambda) * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Fixed collection of equal-dimension configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr", into = "DatasetRepr")]
pub struct Dataset {
    points: Vec<JointConfig>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetRepr {
    points: Vec<JointConfig>,
}

impl TryFrom<DatasetRepr> for Dataset {
    type Error = Error;

    fn try_from(r: DatasetRepr) -> Result<Self> {
        Dataset::new(r.points)
    }
}

impl From<Dataset> for DatasetRepr {
    fn from(d: Dataset) -> Self {
        DatasetRepr { points: d.points }
    }
}

impl Dataset {
    pub fn new(points: Vec<JointConfig>) -> Result<Self> {
        if let Some(first) = points.first() {
            for p in &points {
                Error::check_dim(first.dim(), p.dim())?;
            }
        }
        Ok(Dataset { points })
    }

    pub fn points(&self) -> &[JointConfig] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dimension of the points; 0 for an empty set.
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.dim())
    }

    fn check_fit(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::param("component count must be >= 1"));
        }
        if self.points.len() < k {
            return Err(Error::InsufficientData {
                points: self.points.len(),
                components: k,
            });
        }
        Ok(())
    }
}

/// Gaussian mixture `Σ π_k N(μ_k, Σ_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FgmmRepr", into = "FgmmRepr")]
pub struct Fgmm {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covariances: Vec<DMatrix<f64>>,
    factors: Vec<DMatrix<f64>>,
    log_norms: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FgmmRepr {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    /// Row-major n x n matrices.
    covariances: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<FgmmRepr> for Fgmm {
    type Error = Error;

    fn try_from(r: FgmmRepr) -> Result<Self> {
        let n = r.means.first().map_or(0, Vec::len);
        let mut covs = Vec::with_capacity(r.covariances.len());
        for rows in &r.covariances {
            Error::check_dim(n, rows.len())?;
            for row in rows {
                Error::check_dim(n, row.len())?;
            }
            covs.push(DMatrix::from_fn(n, n, |i, j| rows[i][j]));
        }
        let means = r.means.into_iter().map(DVector::from_vec).collect();
        Fgmm::new(r.weights, means, covs)
    }
}

impl From<Fgmm> for FgmmRepr {
    fn from(m: Fgmm) -> Self {
        FgmmRepr {
            covariances: m
                .covariances
                .iter()
                .map(|c| c.row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect(),
            means: m.means.iter().map(|v| v.iter().copied().collect()).collect(),
            weights: m.weights,
        }
    }
}

impl Fgmm {
    /// Validates shapes, weights (non-negative, summing to 1) and
    /// positive-definiteness of every covariance.
    pub fn new(weights: Vec<f64>, means: Vec<DVector<f64>>, covariances: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::param("mixture needs at least one component"));
        }
        Error::check_dim(k, means.len())?;
        Error::check_dim(k, covariances.len())?;
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("mixture weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::param(format!("mixture weights sum to {total}, expected 1")));
        }
        let n = means[0].len();
        if n == 0 {
            return Err(Error::param("mixture dimension must be >= 1"));
        }
        let mut factors = Vec::with_capacity(k);
        let mut log_norms = Vec::with_capacity(k);
        for (mu, sigma) in means.iter().zip(&covariances) {
            Error::check_dim(n, mu.len())?;
            Error::check_dim(n, sigma.nrows())?;
            if let Some(index) = mu.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
            let chol = factor(sigma)?;
            log_norms.push(log_normaliser(&chol));
            factors.push(chol.l());
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Fgmm {
            weights,
            means,
            covariances,
            factors,
            log_norms,
        })
    }

    /// Single component.
    pub fn gaussian(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        Fgmm::new(vec![1.0], vec![mean], vec![covariance])
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    /// `ln π_k + ln N(q; μ_k, Σ_k)`; `-inf` for zero-weight components.
    fn component_log_terms(&self, q: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for k in 0..self.k() {
            let w = self.weights[k];
            if w == 0.0 {
                out.push(f64::NEG_INFINITY);
                continue;
            }
            let d = DVector::from_iterator(q.len(), q.iter().zip(self.means[k].iter()).map(|(a, b)| a - b));
            let z = self.factors[k]
                .solve_lower_triangular(&d)
                .expect("Cholesky diagonal is positive");
            out.push(w.ln() + self.log_norms[k] - 0.5 * z.norm_squared());
        }
    }

    pub fn log_density(&self, q: &[f64]) -> Result<f64> {
        Error::check_dim(self.dim(), q.len())?;
        let mut terms = Vec::with_capacity(self.k());
        self.component_log_terms(q, &mut terms);
        Ok(log_sum_exp(&terms))
    }

    pub fn density(&self, q: &[f64]) -> Result<f64> {
        self.log_density(q).map(f64::exp)
    }

    /// Draws a component by weight, then a point from it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> JointConfig {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if *w > 0.0 && u < acc {
                k = i;
                break;
            }
        }
        let n = self.dim();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = &self.means[k] + &self.factors[k] * z;
        JointConfig::from_vec(x.iter().copied().collect())
    }
}

/// `Σ π_k N(q; μ_k, Σ_k)`.
pub fn mixture_density(q: &JointConfig, model: &Fgmm) -> Result<f64> {
    model.density(q)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone)]
pub struct KMeans {
    /// Cluster index per data point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<DVector<f64>>,
    /// Mixture built from the clusters: fractions, centroids and floored
    /// sample covariances.
    pub model: Fgmm,
}

/// Index of the nearest centroid; ties go to the lowest index.
fn nearest(p: &[f64], centroids: &[DVector<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c.as_slice());
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

/// K-means++ seeding followed by Lloyd iterations.
///
/// A cluster that loses all its points is moved onto the point farthest from
/// its own centroid. When every point sits on its centroid the cluster stays
/// empty and gets zero weight.
pub fn kmeans_init<R: Rng + ?Sized>(data: &Dataset, k: usize, rng: &mut R) -> Result<KMeans> {
    data.check_fit(k)?;
    let pts: Vec<&[f64]> = data.points.iter().map(|p| p.as_slice()).collect();
    let m = pts.len();

    let mut centroids = vec![DVector::from_column_slice(pts[rng.random_range(0..m)])];
    let mut d2: Vec<f64> = pts.iter().map(|p| sq_dist(p, centroids[0].as_slice())).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|d| {
                    acc += d;
                    *d > 0.0 && target < acc
                })
                .unwrap_or_else(|| d2.iter().rposition(|d| *d > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..m)
        };
        let c = DVector::from_column_slice(pts[pick]);
        for (d, p) in d2.iter_mut().zip(&pts) {
            *d = d.min(sq_dist(p, c.as_slice()));
        }
        centroids.push(c);
    }

    let mut assignments = vec![usize::MAX; m];
    for _ in 0..KMEANS_MAX_ITER {
        let next: Vec<usize> = pts.iter().map(|p| nearest(p, &centroids)).collect();
        let changed = next != assignments;
        assignments = next;
        let mut counts = vec![0usize; k];
        let mut sums = vec![DVector::zeros(data.dim()); k];
        for (p, a) in pts.iter().zip(&assignments) {
            counts[*a] += 1;
            sums[*a] += DVector::from_column_slice(p);
        }
        let mut reseeded = false;
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = &sums[c] / counts[c] as f64;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let (far, dist) = pts
                    .iter()
                    .zip(&assignments)
                    .map(|(p, a)| sq_dist(p, centroids[*a].as_slice()))
                    .enumerate()
                    .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });
                if dist > 0.0 {
                    centroids[c] = DVector::from_column_slice(pts[far]);
                    assignments[far] = c;
                    reseeded = true;
                }
            }
        }
        if !changed && !reseeded {
            break;
        }
    }

    let n = data.dim();
    let mut counts = vec![0usize; k];
    let mut scatter = vec![DMatrix::zeros(n, n); k];
    for (p, a) in pts.iter().zip(&assignments) {
        counts[*a] += 1;
        let d = DVector::from_column_slice(p) - &centroids[*a];
        scatter[*a] += &d * d.transpose();
    }
    let weights = counts.iter().map(|c| *c as f64 / m as f64).collect();
    let covs = scatter
        .iter()
        .zip(&counts)
        .map(|(s, c)| floor_eigenvalues(&(s / (*c).max(1) as f64), COVARIANCE_FLOOR))
        .collect();
    let model = Fgmm::new(weights, centroids.clone(), covs)?;
    Ok(KMeans {
        assignments,
        centroids,
        model,
    })
}

/// Responsibilities `P(k | q_j)` (one row per point) and the total
/// log-likelihood `Σ_j ln p(q_j)`.
pub fn e_step(data: &Dataset, model: &Fgmm) -> Result<(Vec<Vec<f64>>, f64)> {
    Error::check_dim(model.dim(), data.dim())?;
    let mut terms = Vec::with_capacity(model.k());
    let mut resp = Vec::with_capacity(data.len());
    let mut h = 0.0;
    for p in &data.points {
        model.component_log_terms(p, &mut terms);
        let lse = log_sum_exp(&terms);
        if lse == f64::NEG_INFINITY {
            // underflow everywhere: hand the point to the closest mean
            let k = nearest(p, &model.means);
            let mut row = vec![0.0; model.k()];
            row[k] = 1.0;
            resp.push(row);
        } else {
            resp.push(terms.iter().map(|t| (t - lse).exp()).collect());
        }
        h += lse;
    }
    Ok((resp, h))
}

/// Weighted maximum-likelihood update with eigenvalue flooring. Components
/// with no responsibility mass keep their previous parameters at weight 0.
pub fn m_step(data: &Dataset, resp: &[Vec<f64>], previous: &Fgmm) -> Result<Fgmm> {
    Error::check_dim(data.len(), resp.len())?;
    let (k, n) = (previous.k(), previous.dim());
    Error::check_dim(n, data.dim())?;
    let mut mass = vec![0.0; k];
    let mut sums = vec![DVector::zeros(n); k];
    for (p, r) in data.points.iter().zip(resp) {
        Error::check_dim(k, r.len())?;
        let x = DVector::from_column_slice(p);
        for c in 0..k {
            mass[c] += r[c];
            sums[c] += &x * r[c];
        }
    }
    let total: f64 = mass.iter().sum();
    let mut means = previous.means.clone();
    let mut covs = previous.covariances.clone();
    let mut weights = vec![0.0; k];
    for c in 0..k {
        if mass[c].is_nan() || mass[c] <= 0.0 {
            continue;
        }
        let mu = &sums[c] / mass[c];
        let mut s = DMatrix::zeros(n, n);
        for (p, r) in data.points.iter().zip(resp) {
            if r[c] > 0.0 {
                let d = DVector::from_column_slice(p) - &mu;
                s += (&d * d.transpose()) * r[c];
            }
        }
        if !(mu.iter().all(|v| v.is_finite()) && s.iter().all(|v| v.is_finite())) {
            continue;
        }
        covs[c] = floor_eigenvalues(&(s / mass[c]), COVARIANCE_FLOOR);
        means[c] = mu;
        weights[c] = mass[c] / total;
    }
    let wsum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= wsum);
    Fgmm::new(weights, means, covs)
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: Fgmm,
    /// Log-likelihood of the data under each successive model, starting with
    /// the K-means initialisation.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// K-means initialised EM; stops once consecutive log-likelihoods differ by
/// less than `tol` or after `max_iter` updates.
pub fn em_fit<R: Rng + ?Sized>(data: &Dataset, k: usize, tol: f64, max_iter: usize, rng: &mut R) -> Result<EmFit> {
    data.check_fit(k)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::param(format!("EM tolerance must be > 0, got {tol}")));
    }
    let mut model = kmeans_init(data, k, rng)?.model;
    let (mut resp, mut h) = e_step(data, &model)?;
    let mut trace = vec![h];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        model = m_step(data, &resp, &model)?;
        let (next_resp, next_h) = e_step(data, &model)?;
        iterations += 1;
        trace.push(next_h);
        resp = next_resp;
        if (next_h - h).abs() < tol {
            converged = true;
            break;
        }
        h = next_h;
    }
    Ok(EmFit {
        model,
        log_likelihood: trace,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn q(v: &[f64]) -> JointConfig {
        JointConfig::new(v.to_vec()).unwrap()
    }

    /// Scalar normal density written out directly.
    fn normal_1d(x: f64, mu: f64, var: f64) -> f64 {
        (-(x - mu) * (x - mu) / (2.0 * var)).exp() / (TAU * var).sqrt()
    }

    fn two_clusters(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        for c in [-5.0, 5.0] {
            for _ in 0..50 {
                pts.push(q(&[c + rng.random_range(-0.1..0.1)]));
            }
        }
        Dataset::new(pts).unwrap()
    }

    fn one_d(weights: &[f64], means: &[f64], vars: &[f64]) -> Fgmm {
        Fgmm::new(
            weights.to_vec(),
            means.iter().map(|m| DVector::from_element(1, *m)).collect(),
            vars.iter().map(|v| DMatrix::from_element(1, 1, *v)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn pdf_reference_values() {
        let i1 = DMatrix::identity(1, 1);
        assert_abs_diff_eq!(gaussian_pdf(&[0.0], &[0.0], &i1).unwrap(), 0.39894228, epsilon = 1e-8);
        let i2 = DMatrix::identity(2, 2);
        assert_abs_diff_eq!(
            gaussian_pdf(&[0.0, 0.0], &[0.0, 0.0], &i2).unwrap(),
            0.15915494,
            epsilon = 1e-8
        );
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let got = gaussian_pdf(&[1.0, 0.0], &[0.0, 0.0], &s).unwrap();
        // product of independent scalar densities
        let oracle = normal_1d(1.0, 0.0, 1.0) * normal_1d(0.0, 0.0, 4.0);
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(got, 0.048266, epsilon = 1e-6);
    }

    #[test]
    fn pdf_rejects_bad_covariance() {
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            gaussian_pdf(&[0.0, 0.0], &[0.0, 0.0], &indefinite),
            Err(Error::NotPositiveDefinite)
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(gaussian_pdf(&[0.0, 0.0], &[0.0, 0.0], &asym).is_err());
        assert!(gaussian_pdf(&[0.0], &[0.0, 0.0], &DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn mixture_reference_values() {
        let single = one_d(&[1.0], &[0.3], &[2.0]);
        let x = q(&[1.1]);
        assert_abs_diff_eq!(
            mixture_density(&x, &single).unwrap(),
            normal_1d(1.1, 0.3, 2.0),
            epsilon = 1e-15
        );
        let twins = one_d(&[0.3, 0.7], &[0.3, 0.3], &[2.0, 2.0]);
        assert_abs_diff_eq!(
            mixture_density(&x, &twins).unwrap(),
            normal_1d(1.1, 0.3, 2.0),
            epsilon = 1e-15
        );
        let pair = one_d(&[0.5, 0.5], &[-2.0, 2.0], &[1.0, 1.0]);
        let oracle = 0.5 * normal_1d(0.0, -2.0, 1.0) + 0.5 * normal_1d(0.0, 2.0, 1.0);
        let got = mixture_density(&q(&[0.0]), &pair).unwrap();
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(got, 0.05399097, epsilon = 1e-8);
        assert!(mixture_density(&q(&[0.0, 0.0]), &pair).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(Fgmm::new(
            vec![0.5, 0.6],
            vec![DVector::zeros(1); 2],
            vec![DMatrix::identity(1, 1); 2]
        )
        .is_err());
        assert!(Fgmm::new(
            vec![-0.5, 1.5],
            vec![DVector::zeros(1); 2],
            vec![DMatrix::identity(1, 1); 2]
        )
        .is_err());
        assert!(Fgmm::new(vec![1.0], vec![DVector::zeros(2)], vec![DMatrix::identity(1, 1)]).is_err());
        assert!(Fgmm::new(vec![1.0], vec![DVector::zeros(1)], vec![DMatrix::zeros(1, 1)]).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let m = one_d(&[0.4, 0.6], &[-1.0, 1.5], &[0.25, 1.0]);
        let (lo, hi) = (-1.0 - 10.0 * 0.5, 1.5 + 10.0);
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let f = |x: f64| m.density(&[x]).unwrap();
        let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
        let integral = h * (0.5 * (f(lo) + f(hi)) + inner);
        assert_abs_diff_eq!(integral, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn kmeans_single_cluster_is_mean() {
        let d = Dataset::new(vec![q(&[0.0, 1.0]), q(&[2.0, 3.0]), q(&[4.0, -1.0])]).unwrap();
        let km = kmeans_init(&d, 1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(km.model.weights(), &[1.0]);
        assert_abs_diff_eq!(km.model.means()[0][0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(km.model.means()[0][1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kmeans_two_clusters() {
        let d = two_clusters(7);
        let km = kmeans_init(&d, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut means: Vec<f64> = km.model.means().iter().map(|m| m[0]).collect();
        means.sort_by(f64::total_cmp);
        assert!((means[0] + 5.0).abs() < 0.2 && (means[1] - 5.0).abs() < 0.2);
        for w in km.model.weights() {
            assert!((w - 0.5).abs() <= 0.05);
        }
    }

    #[test]
    fn kmeans_saturated() {
        let d = Dataset::new((0..6).map(|i| q(&[i as f64, -(i as f64)])).collect()).unwrap();
        let km = kmeans_init(&d, 6, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut seen = km.assignments.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3, 4, 5]);
        for c in km.model.covariances() {
            assert_abs_diff_eq!(c, &(DMatrix::identity(2, 2) * COVARIANCE_FLOOR), epsilon = 1e-15);
        }
        assert!(kmeans_init(&d, 7, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(kmeans_init(&d, 0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn em_point_mass() {
        let d = Dataset::new(vec![q(&[0.7, -0.2]); 20]).unwrap();
        let fit = em_fit(&d, 1, 1e-6, 50, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_abs_diff_eq!(fit.model.means()[0][0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.model.means()[0][1], -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fit.model.covariances()[0],
            DMatrix::identity(2, 2) * COVARIANCE_FLOOR,
            epsilon = 1e-18
        );
        let first = fit.log_likelihood[0];
        assert!(fit.log_likelihood.iter().all(|h| (h - first).abs() < 1e-9));
        assert!(fit.converged);
    }

    #[test]
    fn em_identical_points_many_components() {
        let d = Dataset::new(vec![q(&[1.0]); 10]).unwrap();
        let fit = em_fit(&d, 3, 1e-6, 50, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_abs_diff_eq!(fit.model.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        for c in fit.model.covariances() {
            assert_abs_diff_eq!(c[(0, 0)], COVARIANCE_FLOOR, epsilon = 1e-15);
        }
    }

    #[test]
    fn em_two_cluster_recovery() {
        let d = two_clusters(11);
        let fit = em_fit(&d, 2, 1e-8, 200, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mut comps: Vec<(f64, f64)> = fit
            .model
            .means()
            .iter()
            .map(|m| m[0])
            .zip(fit.model.weights().iter().copied())
            .collect();
        comps.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((comps[0].0 + 5.0).abs() < 0.1 && (comps[1].0 - 5.0).abs() < 0.1);
        assert!((comps[0].1 - 0.5).abs() < 0.05 && (comps[1].1 - 0.5).abs() < 0.05);
        assert!(fit.converged);
    }

    #[test]
    fn em_is_seed_deterministic() {
        let d = two_clusters(3);
        let a = em_fit(&d, 2, 1e-6, 100, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = em_fit(&d, 2, 1e-6, 100, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.log_likelihood, b.log_likelihood);
    }

    #[test]
    fn sample_vanishing_variance() {
        let m = Fgmm::gaussian(DVector::from_vec(vec![0.4, -1.2, 2.0]), DMatrix::identity(3, 3) * 1e-18).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let s = m.sample(&mut rng);
            assert!(s.approx_eq(&q(&[0.4, -1.2, 2.0]), 1e-6));
        }
    }

    #[test]
    fn sample_mean_matches_mixture_mean() {
        let m = one_d(&[0.3, 0.7], &[-1.0, 2.0], &[0.5, 0.2]);
        let mean: f64 = -0.3 + 0.7 * 2.0;
        let second = 0.3 * (0.5 + 1.0) + 0.7 * (0.2 + 4.0);
        let sd = (second - mean * mean).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 10_000;
        let avg = (0..n).map(|_| m.sample(&mut rng)[0]).sum::<f64>() / n as f64;
        assert!((avg - mean).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn sample_respects_degenerate_weights() {
        let m = one_d(&[1.0, 0.0], &[-10.0, 10.0], &[1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..2000).all(|_| m.sample(&mut rng)[0] < 0.0));
    }

    #[test]
    fn serde_round_trip() {
        let m = Fgmm::new(
            vec![0.25, 0.75],
            vec![DVector::from_vec(vec![0.0, 1.0]), DVector::from_vec(vec![-1.0, 0.5])],
            vec![
                DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]),
                DMatrix::identity(2, 2) * 0.1,
            ],
        )
        .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: Fgmm = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let d = two_clusters(0);
        let back: Dataset = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn floor_raises_small_eigenvalues() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = floor_eigenvalues(&s, 0.5);
        let eig = f.symmetric_eigen().eigenvalues;
        let mut e: Vec<f64> = eig.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(e[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 2.0, epsilon = 1e-12);
    }

    fn random_dataset(seed: u64, n: usize, m: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centres: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let pts = (0..m)
            .map(|i| {
                let c = &centres[i % 3];
                q(&c.iter()
                    .map(|v| v + rng.sample::<f64, _>(StandardNormal) * 0.3)
                    .collect::<Vec<_>>())
            })
            .collect();
        Dataset::new(pts).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn em_invariants(seed in 0u64..10_000, n in 1usize..4, k in 1usize..4) {
            let d = random_dataset(seed, n, 60);
            let fit = em_fit(&d, k, 1e-10, 60, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for w in fit.log_likelihood.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9, "log-likelihood fell from {} to {}", w[0], w[1]);
            }
            prop_assert!((fit.model.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let (resp, _) = e_step(&d, &fit.model).unwrap();
            for r in &resp {
                prop_assert!((r.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
            for c in fit.model.covariances() {
                let min = c.clone().symmetric_eigen().eigenvalues.min();
                prop_assert!(min >= COVARIANCE_FLOOR * (1.0 - 1e-6));
            }
        }
    }
}
