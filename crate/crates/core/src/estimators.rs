//! Location and dispersion estimators.
//!
//! The robust scatter is a Huber-type simultaneous M-estimator of location
//! and scatter: with `d_i^2 = (x_i - mu)' S^{-1} (x_i - mu)`,
//!
//! ```text
//! mu = sum w1(d_i) x_i / sum w1(d_i)
//! S  = (1/n) sum w2(d_i^2) (x_i - mu)(x_i - mu)'
//! w1(d) = min(1, c/d),   w2(s) = min(1, c^2/s) / beta
//! ```
//!
//! `c^2` is a chi-square(p) quantile and `beta` makes `S` consistent for the
//! covariance at the Gaussian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::Dataset;
use crate::error::{DepthError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationKind {
    Mean,
    CoordinateMedian,
    /// Location returned by the robust M-estimator itself.
    RobustM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterKind {
    SampleCovariance,
    RobustM,
}

/// Location vector and dispersion matrix plugged into the Mahalanobis depth.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalFit {
    pub mu: Vec<f64>,
    pub sigma: DMatrix<f64>,
    pub location_kind: LocationKind,
    pub scatter_kind: ScatterKind,
    /// `sigma` is singular (rank < p) or not positive definite.
    pub degenerate: bool,
}

impl EllipticalFit {
    pub fn new(
        mu: Vec<f64>,
        sigma: DMatrix<f64>,
        location_kind: LocationKind,
        scatter_kind: ScatterKind,
    ) -> Result<Self> {
        let p = mu.len();
        if sigma.nrows() != p || sigma.ncols() != p {
            return Err(DepthError::DimensionMismatch {
                expected: p,
                found: sigma.nrows(),
            });
        }
        let degenerate = is_degenerate(&sigma);
        Ok(EllipticalFit {
            mu,
            sigma,
            location_kind,
            scatter_kind,
            degenerate,
        })
    }

    /// Estimates location and scatter from `data` with the requested pair.
    ///
    /// A singular scatter is reported through `degenerate`, not as an error.
    pub fn estimate(
        data: &Dataset,
        location: LocationKind,
        scatter: ScatterKind,
    ) -> Result<Self> {
        let p = data.dim();
        let (robust_mu, sigma, forced_degenerate) = match scatter {
            ScatterKind::SampleCovariance => {
                if data.n() < 2 {
                    (None, DMatrix::zeros(p, p), true)
                } else {
                    (None, sample_covariance(data)?, data.n() <= p)
                }
            }
            ScatterKind::RobustM => {
                let fit = robust_scatter(data)?;
                let degenerate = fit.degenerate;
                (Some(fit.mu), fit.sigma, degenerate)
            }
        };
        let mu = match location {
            LocationKind::Mean => sample_mean(data),
            LocationKind::CoordinateMedian => coordinate_median(data),
            LocationKind::RobustM => match robust_mu {
                Some(m) => m,
                None => robust_scatter(data)?.mu,
            },
        };
        let mut fit = EllipticalFit::new(mu, sigma, location, scatter)?;
        fit.degenerate |= forced_degenerate;
        Ok(fit)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Rank deficiency test on a symmetric matrix via its eigenvalues.
pub fn is_degenerate(sigma: &DMatrix<f64>) -> bool {
    let p = sigma.nrows();
    if p == 0 || sigma.iter().any(|v| !v.is_finite()) {
        return true;
    }
    let eig = nalgebra::SymmetricEigen::new(sigma.clone()).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    max <= 0.0 || min <= 16.0 * p as f64 * f64::EPSILON * max
}

pub fn sample_mean(data: &Dataset) -> Vec<f64> {
    let mut m = vec![0.0; data.dim()];
    for row in data.rows() {
        for (a, v) in m.iter_mut().zip(row) {
            *a += v;
        }
    }
    let n = data.n() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// Median of a slice; even lengths use the midpoint of the central pair.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn coordinate_median(data: &Dataset) -> Vec<f64> {
    (0..data.dim()).map(|j| median(&data.column(j))).collect()
}

/// Unbiased covariance (divisor `n - 1`) centred at the sample mean.
pub fn sample_covariance(data: &Dataset) -> Result<DMatrix<f64>> {
    let n = data.n();
    if n < 2 {
        return Err(DepthError::InvalidParameter(
            "sample covariance needs at least two observations".into(),
        ));
    }
    let p = data.dim();
    let mean = sample_mean(data);
    let mut cov = DMatrix::zeros(p, p);
    let mut centered = vec![0.0; p];
    for row in data.rows() {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - m;
        }
        for a in 0..p {
            for b in a..p {
                cov[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(cov)
}

pub fn determinant(matrix: &DMatrix<f64>) -> f64 {
    matrix.clone().lu().determinant()
}

/// Tuning of the Huber-type M-estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustScatterConfig {
    /// Chi-square quantile level defining the cut-off `c^2`.
    pub quantile: f64,
    pub max_iterations: usize,
    /// Relative change of both location and scatter that ends the iteration.
    pub tolerance: f64,
}

impl Default for RobustScatterConfig {
    fn default() -> Self {
        RobustScatterConfig {
            quantile: 0.9,
            max_iterations: 1000,
            tolerance: 1e-9,
        }
    }
}

/// Cut-off `c^2` and consistency constant `beta` for dimension `p`.
pub fn huber_constants(p: usize, quantile: f64) -> (f64, f64) {
    let chi_p = ChiSquared::new(p as f64).expect("p >= 1");
    let chi_p2 = ChiSquared::new(p as f64 + 2.0).expect("p >= 1");
    let c2 = chi_p.inverse_cdf(quantile);
    // beta = E[min(|Z|^2, c^2)] / p for Z ~ N(0, I_p)
    let beta = chi_p2.cdf(c2) + c2 / p as f64 * (1.0 - chi_p.cdf(c2));
    (c2, beta)
}

pub fn robust_scatter(data: &Dataset) -> Result<EllipticalFit> {
    robust_scatter_with(data, &RobustScatterConfig::default())
}

pub fn robust_scatter_with(data: &Dataset, config: &RobustScatterConfig) -> Result<EllipticalFit> {
    let n = data.n();
    let p = data.dim();
    let degenerate_fit = |mu: Vec<f64>, sigma: DMatrix<f64>| EllipticalFit {
        mu,
        sigma,
        location_kind: LocationKind::RobustM,
        scatter_kind: ScatterKind::RobustM,
        degenerate: true,
    };

    let mut mu = coordinate_median(data);
    if n <= p {
        return Ok(degenerate_fit(mu, DMatrix::zeros(p, p)));
    }
    let mut sigma = DMatrix::zeros(p, p);
    for j in 0..p {
        let col = data.column(j);
        let dev: Vec<f64> = col.iter().map(|v| (v - mu[j]).abs()).collect();
        let mad = 1.482_602_218_505_602 * median(&dev);
        sigma[(j, j)] = mad * mad;
    }
    if is_degenerate(&sigma) {
        return Ok(degenerate_fit(mu, sigma));
    }

    let (c2, beta) = huber_constants(p, config.quantile);
    let c = c2.sqrt();
    let x = DMatrix::from_row_slice(n, p, data.as_slice());

    for _ in 0..config.max_iterations {
        let (mu_next, sigma_next) = match huber_step(&x, &mu, &sigma, c, c2, beta) {
            Some(step) => step,
            None => return Ok(degenerate_fit(mu, sigma)),
        };
        let scale = sigma.trace().max(f64::MIN_POSITIVE).sqrt();
        let mu_change = mu
            .iter()
            .zip(&mu_next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / scale;
        let sigma_change = (&sigma_next - &sigma).norm() / sigma.norm();
        mu = mu_next;
        sigma = sigma_next;
        if mu_change < config.tolerance && sigma_change < config.tolerance {
            let degenerate = is_degenerate(&sigma);
            return Ok(EllipticalFit {
                mu,
                sigma,
                location_kind: LocationKind::RobustM,
                scatter_kind: ScatterKind::RobustM,
                degenerate,
            });
        }
    }
    Err(DepthError::NoConvergence {
        iterations: config.max_iterations,
        last_mu: mu,
        last_sigma: sigma.transpose().as_slice().to_vec(),
    })
}

/// One application of the fixed-point map. `None` when `sigma` is not
/// positive definite.
pub(crate) fn huber_step(
    x: &DMatrix<f64>,
    mu: &[f64],
    sigma: &DMatrix<f64>,
    c: f64,
    c2: f64,
    beta: f64,
) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let (n, p) = x.shape();
    let chol = sigma.clone().cholesky()?;
    let mu_v = DVector::from_column_slice(mu);
    let mut d2 = Vec::with_capacity(n);
    for i in 0..n {
        let diff = x.row(i).transpose() - &mu_v;
        let z = chol.l().solve_lower_triangular(&diff)?;
        d2.push(z.norm_squared());
    }

    let mut mu_next = DVector::zeros(p);
    let mut w1_sum = 0.0;
    for (i, &s) in d2.iter().enumerate() {
        let d = s.sqrt();
        let w = if d <= c { 1.0 } else { c / d };
        mu_next += x.row(i).transpose() * w;
        w1_sum += w;
    }
    mu_next /= w1_sum;

    let mut sigma_next = DMatrix::zeros(p, p);
    for (i, &s) in d2.iter().enumerate() {
        let w = if s <= c2 { 1.0 } else { c2 / s } / beta;
        let diff = x.row(i).transpose() - &mu_next;
        sigma_next.ger(w, &diff, &diff, 1.0);
    }
    sigma_next /= n as f64;
    let sigma_next = (&sigma_next + sigma_next.transpose()) * 0.5;
    Some((mu_next.as_slice().to_vec(), sigma_next))
}
