//! Random Tukey depth for discretized curves and depth-based classifiers.
//!
//! Curves live on a shared grid rescaled to `[0, 1]`. The inner product is
//! the trapezoid rule on that grid, so `<f, g> = sum_j w_j f_j g_j` with the
//! trapezoid weights `w`. A functional direction is white noise at the grid
//! points normalized to unit L2 norm.

use std::sync::Arc;

use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::depth::{d1_count_sorted, dot};
use crate::error::{DepthError, Result};
use crate::parallel::replicate;
use crate::rng::Seed;

/// Strictly increasing time points rescaled to `[0, 1]`, with trapezoid
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    times: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Rescales `raw` affinely from `[min, max]` onto `[0, 1]`.
    pub fn new(raw: &[f64]) -> Result<Arc<Grid>> {
        if raw.len() < 2 {
            return Err(DepthError::InvalidParameter("a grid needs at least two points".into()));
        }
        if let Some(col) = raw.iter().position(|t| !t.is_finite()) {
            return Err(DepthError::NonFinite { row: 0, col });
        }
        if raw.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DepthError::InvalidParameter("grid must be strictly increasing".into()));
        }
        let (lo, hi) = (raw[0], raw[raw.len() - 1]);
        let times: Vec<f64> = raw.iter().map(|t| (t - lo) / (hi - lo)).collect();
        let m = times.len();
        let mut weights = vec![0.0; m];
        for j in 0..m - 1 {
            let h = (times[j + 1] - times[j]) / 2.0;
            weights[j] += h;
            weights[j + 1] += h;
        }
        Ok(Arc::new(Grid { times, weights }))
    }

    /// `m` equally spaced points on `[0, 1]`.
    pub fn uniform(m: usize) -> Result<Arc<Grid>> {
        let raw: Vec<f64> = (0..m).map(|j| j as f64).collect();
        Grid::new(&raw)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((w, a), b) in self.weights.iter().zip(f).zip(g) {
            // the product first keeps the sum symmetric in f and g
            s += w * (a * b);
        }
        s
    }

    fn distance(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((w, a), b) in self.weights.iter().zip(f).zip(g) {
            let d = a - b;
            s += w * d * d;
        }
        s.max(0.0).sqrt()
    }
}

fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a.times == b.times {
        Ok(())
    } else {
        Err(DepthError::GridMismatch)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(DepthError::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(col) = values.iter().position(|v| !v.is_finite()) {
            return Err(DepthError::NonFinite { row: 0, col });
        }
        Ok(Curve { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Curve {
        Curve {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Curves sharing one grid, stored as an `n x m` dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    grid: Arc<Grid>,
    data: Dataset,
    pub label: Option<String>,
}

impl CurveSample {
    pub fn new<R: AsRef<[f64]>>(grid: Arc<Grid>, rows: &[R], label: Option<String>) -> Result<Self> {
        let data = Dataset::from_rows(rows)?;
        if data.dim() != grid.len() {
            return Err(DepthError::DimensionMismatch {
                expected: grid.len(),
                found: data.dim(),
            });
        }
        Ok(CurveSample { grid, data, label })
    }

    pub fn from_curves(curves: &[Curve], label: Option<String>) -> Result<Self> {
        let first = curves.first().ok_or(DepthError::EmptySample)?;
        for c in curves {
            same_grid(&first.grid, &c.grid)?;
        }
        let rows: Vec<&[f64]> = curves.iter().map(|c| c.values.as_slice()).collect();
        CurveSample::new(first.grid.clone(), &rows, label)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn values(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    pub fn curve(&self, i: usize) -> Curve {
        Curve {
            grid: self.grid.clone(),
            values: self.values(i).to_vec(),
        }
    }

    pub fn as_dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn without(&self, i: usize) -> Result<CurveSample> {
        Ok(CurveSample {
            grid: self.grid.clone(),
            data: self.data.without_row(i)?,
            label: self.label.clone(),
        })
    }

    pub fn scaled(&self, factor: f64) -> CurveSample {
        CurveSample {
            grid: self.grid.clone(),
            data: self.data.scaled(factor),
            label: self.label.clone(),
        }
    }

    /// Pointwise mean of the curves with the given indices.
    fn mean_of(&self, indices: &[usize]) -> Vec<f64> {
        let mut mean = vec![0.0; self.grid.len()];
        for &i in indices {
            for (m, v) in mean.iter_mut().zip(self.values(i)) {
                *m += v;
            }
        }
        let c = indices.len() as f64;
        mean.iter_mut().for_each(|m| *m /= c);
        mean
    }
}

/// Trapezoid-rule L2 inner product.
pub fn l2_inner(f: &Curve, g: &Curve) -> Result<f64> {
    same_grid(&f.grid, &g.grid)?;
    Ok(f.grid.inner(&f.values, &g.values))
}

pub fn l2_distance(f: &Curve, g: &Curve) -> Result<f64> {
    same_grid(&f.grid, &g.grid)?;
    Ok(f.grid.distance(&f.values, &g.values))
}

/// Standard Gaussian values at the grid points, scaled to unit L2 norm.
pub fn functional_direction(grid: &Arc<Grid>, seed: Seed) -> Curve {
    let mut rng = seed.rng();
    loop {
        let values: Vec<f64> = (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = grid.inner(&values, &values).sqrt();
        if norm > 0.0 {
            return Curve {
                grid: grid.clone(),
                values: values.into_iter().map(|v| v / norm).collect(),
            };
        }
    }
}

/// `k` directions; direction `i` depends only on `(seed, i)`, so smaller
/// `k` gives a prefix.
pub fn functional_directions(grid: &Arc<Grid>, k: usize, seed: Seed) -> Vec<Curve> {
    (0..k as u64)
        .map(|i| functional_direction(grid, seed.derive(4, i)))
        .collect()
}

/// A curve sample projected on functional directions, projections sorted.
struct ProjectedCurves {
    n: usize,
    /// Direction `i` times the quadrature weights, so `<x, d_i> = x . a_i`.
    weighted: Vec<Vec<f64>>,
    sorted: Vec<Vec<f64>>,
}

impl ProjectedCurves {
    fn new(sample: &CurveSample, directions: &[Curve]) -> Result<Self> {
        let mut weighted = Vec::with_capacity(directions.len());
        let mut sorted = Vec::with_capacity(directions.len());
        for d in directions {
            same_grid(&sample.grid, &d.grid)?;
            let a: Vec<f64> = d.values.iter().zip(sample.grid.weights()).map(|(v, w)| v * w).collect();
            let mut proj: Vec<f64> = sample.data.rows().map(|x| dot(x, &a)).collect();
            proj.sort_unstable_by(f64::total_cmp);
            weighted.push(a);
            sorted.push(proj);
        }
        Ok(ProjectedCurves {
            n: sample.n(),
            weighted,
            sorted,
        })
    }

    fn depth(&self, z: &[f64]) -> f64 {
        let mut best = self.n;
        for (a, s) in self.weighted.iter().zip(&self.sorted) {
            best = best.min(d1_count_sorted(dot(z, a), s));
        }
        best as f64 / self.n as f64
    }

    fn depth_of_sample(&self, sample: &CurveSample) -> Vec<f64> {
        sample.data.rows().map(|x| self.depth(x)).collect()
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(DepthError::InvalidParameter("k must be >= 1".into()));
    }
    Ok(())
}

/// Minimum over `k` functional directions of the univariate depth of
/// `<z, d>` among `<x_i, d>`.
pub fn functional_random_tukey(z: &Curve, sample: &CurveSample, k: usize, seed: Seed) -> Result<f64> {
    check_k(k)?;
    same_grid(&z.grid, &sample.grid)?;
    let dirs = functional_directions(&sample.grid, k, seed);
    Ok(ProjectedCurves::new(sample, &dirs)?.depth(&z.values))
}

/// Depth of every curve of `sample` with respect to `sample`.
pub fn functional_depths(sample: &CurveSample, k: usize, seed: Seed) -> Result<Vec<f64>> {
    check_k(k)?;
    let dirs = functional_directions(&sample.grid, k, seed);
    Ok(ProjectedCurves::new(sample, &dirs)?.depth_of_sample(sample))
}

/// Indices sorted by decreasing depth; equal depths keep index order.
fn deepest_first(depths: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..depths.len()).collect();
    order.sort_by(|&a, &b| depths[b].total_cmp(&depths[a]));
    order
}

/// `ceil(n (1 - trim))`, at least 1.
pub fn retained_count(n: usize, trim: f64) -> usize {
    ((n as f64 * (1.0 - trim) - 1e-9).ceil() as usize).clamp(1, n)
}

fn check_trim(trim: f64) -> Result<()> {
    if !(0.0..1.0).contains(&trim) {
        return Err(DepthError::InvalidParameter(format!("trim {trim} outside [0, 1)")));
    }
    Ok(())
}

fn trimmed_mean_with(sample: &CurveSample, depths: &[f64], trim: f64) -> Vec<f64> {
    let mut keep = deepest_first(depths);
    keep.truncate(retained_count(sample.n(), trim));
    // summing in index order makes trim = 0 the plain mean bit for bit
    keep.sort_unstable();
    sample.mean_of(&keep)
}

/// Pointwise mean of the `ceil(n (1 - trim))` deepest curves.
pub fn trimmed_mean(sample: &CurveSample, trim: f64, k: usize, seed: Seed) -> Result<Curve> {
    check_trim(trim)?;
    let depths = functional_depths(sample, k, seed)?;
    Ok(Curve {
        grid: sample.grid.clone(),
        values: trimmed_mean_with(sample, &depths, trim),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Distance to the trimmed mean.
    M,
    /// Depth-weighted average distance.
    AM,
    /// Depth-weighted average distance over the `l` deepest curves.
    TAM,
}

impl std::str::FromStr for Method {
    type Err = DepthError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M" => Ok(Method::M),
            "AM" => Ok(Method::AM),
            "TAM" => Ok(Method::TAM),
            _ => Err(DepthError::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::M => "M",
            Method::AM => "AM",
            Method::TAM => "TAM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub method: Method,
    /// Trim of the first group (method M).
    pub alpha: f64,
    /// Trim of the second group (method M).
    pub beta: f64,
    /// Curves per group for TAM; `None` means `min(n, m)` of the samples at
    /// hand, and a larger value is capped there.
    pub l: Option<usize>,
    pub k: usize,
    pub seed: Seed,
}

impl ClassifierSpec {
    pub fn new(method: Method, k: usize, seed: Seed) -> Self {
        ClassifierSpec {
            method,
            alpha: 0.2,
            beta: 0.2,
            l: None,
            k,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        check_k(self.k)?;
        check_trim(self.alpha)?;
        check_trim(self.beta)?;
        if self.l == Some(0) {
            return Err(DepthError::InvalidParameter("l must be >= 1".into()));
        }
        Ok(())
    }
}

fn weighted_distance(z: &[f64], sample: &CurveSample, depths: &[f64], keep: &[usize]) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for &i in keep {
        num += sample.grid.distance(z, sample.values(i)) * depths[i];
        den += depths[i];
    }
    if den <= 0.0 {
        return Err(DepthError::DegenerateWeights);
    }
    Ok(num / den)
}

/// Assigns `z` to `X` when its score for `X` is strictly smaller, else `Y`.
///
/// Both samples are projected on the same `k` directions drawn from
/// `spec.seed`; each sample's depths are taken with respect to itself.
pub fn classify(z: &Curve, x: &CurveSample, y: &CurveSample, spec: &ClassifierSpec) -> Result<Group> {
    spec.validate()?;
    same_grid(&z.grid, &x.grid)?;
    same_grid(&x.grid, &y.grid)?;
    let dirs = functional_directions(&x.grid, spec.k, spec.seed);
    let dx = ProjectedCurves::new(x, &dirs)?.depth_of_sample(x);
    let dy = ProjectedCurves::new(y, &dirs)?.depth_of_sample(y);
    let grid = &x.grid;
    let (sx, sy) = match spec.method {
        Method::M => (
            grid.distance(&z.values, &trimmed_mean_with(x, &dx, spec.alpha)),
            grid.distance(&z.values, &trimmed_mean_with(y, &dy, spec.beta)),
        ),
        Method::AM => {
            let all_x: Vec<usize> = (0..x.n()).collect();
            let all_y: Vec<usize> = (0..y.n()).collect();
            (
                weighted_distance(&z.values, x, &dx, &all_x)?,
                weighted_distance(&z.values, y, &dy, &all_y)?,
            )
        }
        Method::TAM => {
            let cap = x.n().min(y.n());
            let l = spec.l.map_or(cap, |l| l.min(cap));
            (
                weighted_distance(&z.values, x, &dx, &deepest_first(&dx)[..l])?,
                weighted_distance(&z.values, y, &dy, &deepest_first(&dy)[..l])?,
            )
        }
    };
    Ok(if sx < sy { Group::X } else { Group::Y })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoocvSummary {
    /// Mean misclassification rate over the sweeps.
    pub error_rate: f64,
    /// Standard error of that mean across sweeps.
    pub std_error: f64,
    pub replications: usize,
    pub folds: usize,
}

/// Leave-one-out misclassification rate over all `n + m` curves, averaged
/// over `replications` sweeps with fresh directions.
pub fn loocv_error(x: &CurveSample, y: &CurveSample, spec: &ClassifierSpec, replications: usize, seed: Seed) -> Result<f64> {
    Ok(loocv_summary(x, y, spec, replications, seed)?.error_rate)
}

pub fn loocv_summary(
    x: &CurveSample,
    y: &CurveSample,
    spec: &ClassifierSpec,
    replications: usize,
    seed: Seed,
) -> Result<LoocvSummary> {
    spec.validate()?;
    same_grid(&x.grid, &y.grid)?;
    if x.n() < 2 || y.n() < 2 {
        return Err(DepthError::InvalidParameter(
            "each group needs at least two curves".into(),
        ));
    }
    if replications == 0 {
        return Err(DepthError::InvalidParameter("replications must be >= 1".into()));
    }
    let folds = x.n() + y.n();
    let rates = replicate(replications, |rep| -> Result<f64> {
        let sweep = seed.derive(5, rep);
        let mut mistakes = 0usize;
        for fold in 0..folds {
            let fold_spec = ClassifierSpec {
                seed: sweep.derive(6, fold as u64),
                ..*spec
            };
            let (truth, decision) = if fold < x.n() {
                let held = x.curve(fold);
                (Group::X, classify(&held, &x.without(fold)?, y, &fold_spec)?)
            } else {
                let i = fold - x.n();
                let held = y.curve(i);
                (Group::Y, classify(&held, x, &y.without(i)?, &fold_spec)?)
            };
            mistakes += (truth != decision) as usize;
        }
        Ok(mistakes as f64 / folds as f64)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let m = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / m;
    let var = if rates.len() > 1 {
        rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(LoocvSummary {
        error_rate: mean,
        std_error: (var / m).sqrt(),
        replications,
        folds,
    })
}
