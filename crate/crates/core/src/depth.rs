//! Depth kernels: univariate halfspace depth, random Tukey depth,
//! Mahalanobis depth and an exact bivariate Tukey depth.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{DepthError, Result};
use crate::estimators::EllipticalFit;
use crate::rng::DirectionSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthKind {
    RandomTukey,
    Mahalanobis,
    ExactTukey,
    D1,
}

/// Depth values aligned with the rows of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthVector {
    pub kind: DepthKind,
    pub values: Vec<f64>,
}

impl DepthVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// `min(P(-inf, x], P[x, inf))` under the empirical law of `sample`.
pub fn d1(x: f64, sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(DepthError::EmptySample);
    }
    let below = sample.iter().filter(|&&s| s <= x).count();
    let above = sample.iter().filter(|&&s| s >= x).count();
    Ok(below.min(above) as f64 / sample.len() as f64)
}

/// Closed-halfline counts of `x` against an already sorted sample.
#[inline]
pub(crate) fn d1_count_sorted(x: f64, sorted: &[f64]) -> usize {
    let below = sorted.partition_point(|&s| s <= x);
    let strictly_below = sorted.partition_point(|&s| s < x);
    below.min(sorted.len() - strictly_below)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(DepthError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Dot product of every row with `direction`.
pub fn project(data: &Dataset, direction: &[f64]) -> Result<Vec<f64>> {
    check_dim(data.dim(), direction.len())?;
    Ok(data.rows().map(|r| dot(r, direction)).collect())
}

/// All projections at once, `n x k` row-major.
///
/// Each entry is summed over coordinates in the same order as [`project`],
/// so both paths give bit-identical values.
pub fn project_all(data: &Dataset, dirs: &DirectionSet) -> Result<Vec<f64>> {
    let n = data.n();
    let k = dirs.len();
    let columns = project_columns(data, dirs)?;
    let mut out = vec![0.0; n * k];
    for (j, col) in columns.chunks_exact(n).enumerate() {
        for (i, &v) in col.iter().enumerate() {
            out[i * k + j] = v;
        }
    }
    Ok(out)
}

/// All projections, `k x n`: one contiguous column per direction.
fn project_columns(data: &Dataset, dirs: &DirectionSet) -> Result<Vec<f64>> {
    let p = data.dim();
    check_dim(p, dirs.dim())?;
    let n = data.n();
    let k = dirs.len();
    // panels[(j / PANEL) * p + c][j % PANEL] = coordinate c of direction j
    let mut panels = vec![[0.0; PANEL]; k.div_ceil(PANEL) * p];
    for j in 0..k {
        for (c, &v) in dirs.direction(j).iter().enumerate() {
            panels[(j / PANEL) * p + c][j % PANEL] = v;
        }
    }
    let mut out = vec![0.0; n * k];
    project_panels(data.as_slice(), n, p, k, &panels, &mut out);
    Ok(out)
}

const PANEL: usize = 4;
const BLOCK_ROWS: usize = 8;

fn project_panels(rows: &[f64], n: usize, p: usize, k: usize, panels: &[[f64; PANEL]], out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports the enabled feature.
            return project_blocks(rows, n, p, k, panels, out, |block, panel| unsafe {
                block_panel_avx2(block, panel)
            });
        }
    }
    project_blocks(rows, n, p, k, panels, out, block_panel);
}

type BlockPanel = [[f64; BLOCK_ROWS]; PANEL];

/// `acc[t][r] = sum_c block[c][r] * panel[c][t]`, summed over `c = 0, 1, ...`
/// from zero, as [`dot`] does.
fn block_panel(block: &[[f64; BLOCK_ROWS]], panel: &[[f64; PANEL]]) -> BlockPanel {
    let mut acc = [[0.0; BLOCK_ROWS]; PANEL];
    for (xs, d) in block.iter().zip(panel) {
        for t in 0..PANEL {
            for r in 0..BLOCK_ROWS {
                acc[t][r] += xs[r] * d[t];
            }
        }
    }
    acc
}

// Explicit vectors so the kernel does not depend on the optimizer. Multiply
// and add stay separate instructions, so results match `block_panel` bit
// for bit.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn block_panel_avx2(block: &[[f64; BLOCK_ROWS]], panel: &[[f64; PANEL]]) -> BlockPanel {
    use std::arch::x86_64::*;
    let len = block.len().min(panel.len());
    let (xs, ds) = (block.as_ptr(), panel.as_ptr());
    let mut lo = [_mm256_setzero_pd(); PANEL];
    let mut hi = [_mm256_setzero_pd(); PANEL];
    for c in 0..len {
        // SAFETY: c < len bounds both slices; rows of 8 and 4 doubles.
        let x = &*xs.add(c);
        let d = &*ds.add(c);
        let x_lo = _mm256_loadu_pd(x.as_ptr());
        let x_hi = _mm256_loadu_pd(x.as_ptr().add(4));
        for t in 0..PANEL {
            let dt = _mm256_set1_pd(d[t]);
            lo[t] = _mm256_add_pd(lo[t], _mm256_mul_pd(x_lo, dt));
            hi[t] = _mm256_add_pd(hi[t], _mm256_mul_pd(x_hi, dt));
        }
    }
    let mut acc = [[0.0; BLOCK_ROWS]; PANEL];
    for t in 0..PANEL {
        _mm256_storeu_pd(acc[t].as_mut_ptr(), lo[t]);
        _mm256_storeu_pd(acc[t].as_mut_ptr().add(4), hi[t]);
    }
    acc
}

/// Projections of every row of the row-major `rows` on every direction;
/// `out` holds `k` columns of length `n`. Each block of rows is transposed
/// into a small buffer that stays in cache while all panels pass over it.
#[inline(always)]
fn project_blocks<K>(rows: &[f64], n: usize, p: usize, k: usize, panels: &[[f64; PANEL]], out: &mut [f64], kernel: K)
where
    K: Fn(&[[f64; BLOCK_ROWS]], &[[f64; PANEL]]) -> BlockPanel,
{
    let blocked = n / BLOCK_ROWS * BLOCK_ROWS;
    // block[c][r] = coordinate c of row i + r
    let mut block = vec![[0.0; BLOCK_ROWS]; p];
    for i in (0..blocked).step_by(BLOCK_ROWS) {
        for (r, row) in rows[i * p..(i + BLOCK_ROWS) * p].chunks_exact(p).enumerate() {
            for (b, &v) in block.iter_mut().zip(row) {
                b[r] = v;
            }
        }
        for (q, panel) in panels.chunks_exact(p).enumerate() {
            let acc = kernel(&block, panel);
            for (t, col) in acc.iter().enumerate().take(k - q * PANEL) {
                let j = q * PANEL + t;
                out[j * n + i..j * n + i + BLOCK_ROWS].copy_from_slice(col);
            }
        }
    }
    for i in blocked..n {
        let row = &rows[i * p..(i + 1) * p];
        for j in 0..k {
            let panel = &panels[(j / PANEL) * p..(j / PANEL + 1) * p];
            let mut s = 0.0;
            for (&x, d) in row.iter().zip(panel) {
                s += x * d[j % PANEL];
            }
            out[j * n + i] = s;
        }
    }
}

/// `min_i d1(<x, v_i>, <data, v_i>)` over the directions of `dirs`.
pub fn random_tukey_depth(x: &[f64], data: &Dataset, dirs: &DirectionSet) -> Result<f64> {
    check_dim(data.dim(), x.len())?;
    check_dim(data.dim(), dirs.dim())?;
    let n = data.n();
    let mut best = n;
    let mut proj = vec![0.0; n];
    for v in dirs.iter() {
        let t = dot(x, v);
        for (out, row) in proj.iter_mut().zip(data.rows()) {
            *out = dot(row, v);
        }
        let below = proj.iter().filter(|&&s| s <= t).count();
        let above = proj.iter().filter(|&&s| s >= t).count();
        best = best.min(below.min(above));
        if best == 0 {
            break;
        }
    }
    Ok(best as f64 / n as f64)
}

/// Reference sample projected on a direction set, each projection sorted.
///
/// Answers random Tukey depth queries for arbitrary points with two binary
/// searches per direction.
#[derive(Debug, Clone)]
pub struct ProjectedSample {
    n: usize,
    dirs: DirectionSet,
    sorted: Vec<f64>,
}

impl ProjectedSample {
    pub fn new(reference: &Dataset, dirs: &DirectionSet) -> Result<Self> {
        let n = reference.n();
        let mut sorted = project_columns(reference, dirs)?;
        for column in sorted.chunks_exact_mut(n) {
            column.sort_unstable_by(f64::total_cmp);
        }
        Ok(ProjectedSample {
            n,
            dirs: dirs.clone(),
            sorted,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Random Tukey depth of `x` with respect to the reference sample.
    pub fn depth(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dirs.dim(), x.len())?;
        let mut best = self.n;
        for (j, v) in self.dirs.iter().enumerate() {
            let t = dot(x, v);
            best = best.min(d1_count_sorted(t, &self.sorted[j * self.n..(j + 1) * self.n]));
            if best == 0 {
                break;
            }
        }
        Ok(best as f64 / self.n as f64)
    }

    /// Depths of every row of `queries`.
    pub fn depth_all(&self, queries: &Dataset) -> Result<DepthVector> {
        check_dim(self.dirs.dim(), queries.dim())?;
        let k = self.dirs.len();
        let proj = project_all(queries, &self.dirs)?;
        let values = proj
            .chunks_exact(k)
            .map(|row| {
                let mut best = self.n;
                for (j, &t) in row.iter().enumerate() {
                    best = best.min(d1_count_sorted(t, &self.sorted[j * self.n..(j + 1) * self.n]));
                }
                best as f64 / self.n as f64
            })
            .collect();
        Ok(DepthVector {
            kind: DepthKind::RandomTukey,
            values,
        })
    }
}

/// Random Tukey depth of every row of `data` with respect to `data` itself.
///
/// Sorts each projection once and reads every point's counts off its tie
/// block, so no per-point search is needed.
pub fn random_tukey_depth_all(data: &Dataset, dirs: &DirectionSet) -> Result<DepthVector> {
    let n = data.n();
    let columns = project_columns(data, dirs)?;
    let mut best = vec![n; n];
    let mut keyed: Vec<(u64, u32)> = Vec::with_capacity(n);
    for column in columns.chunks_exact(n) {
        keyed.clear();
        keyed.extend(column.iter().enumerate().map(|(i, &v)| (order_key(v), i as u32)));
        keyed.sort_unstable();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && keyed[end].0 == keyed[start].0 {
                end += 1;
            }
            // #{s <= v} = end, #{s >= v} = n - start
            let count = end.min(n - start);
            for &(_, i) in &keyed[start..end] {
                let b = &mut best[i as usize];
                *b = (*b).min(count);
            }
            start = end;
        }
    }
    Ok(DepthVector {
        kind: DepthKind::RandomTukey,
        values: best.into_iter().map(|c| c as f64 / n as f64).collect(),
    })
}

/// Monotone map of finite floats to integers; `-0.0` and `0.0` share a key.
#[inline]
fn order_key(v: f64) -> u64 {
    let bits = (v + 0.0).to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Random Tukey depth of each row of `queries` with respect to `reference`.
pub fn random_tukey_depth_against(
    queries: &Dataset,
    reference: &Dataset,
    dirs: &DirectionSet,
) -> Result<DepthVector> {
    check_dim(reference.dim(), queries.dim())?;
    ProjectedSample::new(reference, dirs)?.depth_all(queries)
}

/// Within-sample univariate depth counts of one projected sample:
/// `out[i] = min(#{s <= v_i}, #{s >= v_i})`.
pub fn univariate_depth_counts(values: &[f64], scratch: &mut Vec<f64>, out: &mut [usize]) {
    scratch.clear();
    scratch.extend_from_slice(values);
    scratch.sort_unstable_by(f64::total_cmp);
    for (o, &v) in out.iter_mut().zip(values) {
        *o = d1_count_sorted(v, scratch);
    }
}

/// Mahalanobis squared distances of all rows, sharing one Cholesky factor.
fn mahalanobis_forms(points: &[&[f64]], fit: &EllipticalFit) -> Result<Vec<f64>> {
    if fit.degenerate {
        return Err(DepthError::DegenerateDispersion);
    }
    let chol = fit
        .sigma
        .clone()
        .cholesky()
        .ok_or(DepthError::DegenerateDispersion)?;
    let mu = DVector::from_column_slice(&fit.mu);
    points
        .iter()
        .map(|x| {
            check_dim(fit.dim(), x.len())?;
            let diff = DVector::from_column_slice(x) - &mu;
            let z = chol
                .l()
                .solve_lower_triangular(&diff)
                .ok_or(DepthError::DegenerateDispersion)?;
            Ok(z.norm_squared())
        })
        .collect()
}

/// `1 / (1 + (x - mu)' sigma^{-1} (x - mu))`.
pub fn mahalanobis_depth(x: &[f64], fit: &EllipticalFit) -> Result<f64> {
    let q = mahalanobis_forms(&[x], fit)?[0];
    Ok(1.0 / (1.0 + q))
}

pub fn mahalanobis_depth_all(data: &Dataset, fit: &EllipticalFit) -> Result<DepthVector> {
    check_dim(fit.dim(), data.dim())?;
    let rows: Vec<&[f64]> = data.rows().collect();
    let values = mahalanobis_forms(&rows, fit)?
        .into_iter()
        .map(|q| 1.0 / (1.0 + q))
        .collect();
    Ok(DepthVector {
        kind: DepthKind::Mahalanobis,
        values,
    })
}

/// Critical angles closer than this are merged.
const ANGLE_MERGE: f64 = 1e-10;

/// Exact halfspace depth of `x` in the plane by an angular sweep.
///
/// With `u(t) = (cos t, sin t)`, the closed halfplane `{y : <y - x, u> >= 0}`
/// holds the points whose angle seen from `x` lies within `pi/2` of `t`.
/// That count only changes at the angles `phi_i +- pi/2`; the minimum is
/// attained on the open arcs between consecutive critical angles, so each
/// arc is evaluated once at its midpoint. Points equal to `x` lie in every
/// halfplane.
pub fn exact_tukey_depth_2d(x: &[f64], data: &Dataset) -> Result<f64> {
    if data.dim() != 2 {
        return Err(DepthError::InvalidParameter(format!(
            "exact Tukey depth needs p = 2, got p = {}",
            data.dim()
        )));
    }
    check_dim(2, x.len())?;
    let n = data.n();

    let mut coincident = 0usize;
    let mut angles = Vec::with_capacity(n);
    for row in data.rows() {
        let (dx, dy) = (row[0] - x[0], row[1] - x[1]);
        if dx == 0.0 && dy == 0.0 {
            coincident += 1;
        } else {
            angles.push(dy.atan2(dx));
        }
    }
    if angles.is_empty() {
        return Ok(1.0);
    }

    let mut critical: Vec<f64> = angles
        .iter()
        .flat_map(|&a| [wrap_2pi(a + FRAC_PI_2), wrap_2pi(a - FRAC_PI_2)])
        .collect();
    critical.sort_unstable_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(critical.len());
    for c in critical {
        match merged.last() {
            Some(&last) if c - last <= ANGLE_MERGE => {}
            _ => merged.push(c),
        }
    }
    if merged.len() > 1 && merged[0] + TAU - merged[merged.len() - 1] <= ANGLE_MERGE {
        merged.pop();
    }

    let m = merged.len();
    let mut best = n;
    for i in 0..m {
        let a = merged[i];
        let b = if i + 1 < m { merged[i + 1] } else { merged[0] + TAU };
        let t = 0.5 * (a + b);
        let inside = angles
            .iter()
            .filter(|&&phi| angular_distance(t, phi) <= FRAC_PI_2)
            .count();
        best = best.min(coincident + inside);
    }
    Ok(best as f64 / n as f64)
}

fn wrap_2pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Distribution;
    use crate::estimators::{LocationKind, ScatterKind};
    use crate::rng::{sample_sphere, Seed};
    use nalgebra::DMatrix;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn cross() -> Dataset {
        Dataset::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap()
    }

    fn fit(mu: Vec<f64>, sigma: DMatrix<f64>) -> EllipticalFit {
        EllipticalFit::new(mu, sigma, LocationKind::Mean, ScatterKind::SampleCovariance).unwrap()
    }

    /// Test-only oracle: minimum over an equally spaced grid of angles.
    fn grid_depth(x: &[f64], data: &Dataset, m: usize) -> f64 {
        (0..m)
            .map(|i| {
                let t = i as f64 * PI / m as f64;
                let proj = project(data, &[t.cos(), t.sin()]).unwrap();
                d1(x[0] * t.cos() + x[1] * t.sin(), &proj).unwrap()
            })
            .fold(1.0, f64::min)
    }

    #[test]
    fn d1_examples() {
        assert_eq!(d1(2.0, &[1.0, 2.0, 3.0]).unwrap(), 2.0 / 3.0);
        assert_eq!(d1(0.0, &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(d1(1.0, &[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(d1(1.0, &[]), Err(DepthError::EmptySample));
    }

    #[test]
    fn d1_invariant_under_increasing_maps() {
        let s = [0.3, -1.2, 4.0, 0.3, 2.2, -0.7];
        let mapped: Vec<f64> = s.iter().map(|v: &f64| v.powi(3) + 2.0 * v).collect();
        for &x in &[0.3, -5.0, 1.0, 2.2] {
            let fx: f64 = x * x * x + 2.0 * x;
            assert_eq!(d1(x, &s).unwrap(), d1(fx, &mapped).unwrap());
        }
    }

    #[test]
    fn project_examples() {
        let d = Dataset::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(project(&d, &[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let d = Dataset::from_rows(&[[1.0, 1.0]]).unwrap();
        let v = project(&d, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!((v[0] - 2f64.sqrt()).abs() < 1e-15);
        let d = Dataset::from_rows(&[[2.0, 3.0]]).unwrap();
        assert!(project(&d, &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn project_all_matches_project_bitwise() {
        let d = Distribution::Gaussian.sample(&mut Seed(1).rng(), 37, 9).unwrap();
        let dirs = sample_sphere(9, 13, Seed(2)).unwrap();
        let all = project_all(&d, &dirs).unwrap();
        for (j, v) in dirs.iter().enumerate() {
            let col = project(&d, v).unwrap();
            for i in 0..d.n() {
                assert_eq!(all[i * 13 + j].to_bits(), col[i].to_bits());
            }
        }
    }

    #[test]
    fn random_tukey_examples() {
        let d = Dataset::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let dirs = sample_sphere(1, 4, Seed(0)).unwrap();
        assert_eq!(random_tukey_depth(&[2.0], &d, &dirs).unwrap(), 2.0 / 3.0);

        let dirs =
            DirectionSet::from_directions(2, &[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(random_tukey_depth(&[0.0, 0.0], &cross(), &dirs).unwrap(), 0.5);
        assert_eq!(random_tukey_depth(&[10.0, 0.0], &cross(), &dirs).unwrap(), 0.0);
        assert!(random_tukey_depth(&[0.0], &cross(), &dirs).is_err());
    }

    #[test]
    fn batch_examples() {
        let single = Dataset::from_rows(&[[4.0, 2.0]]).unwrap();
        let dirs = sample_sphere(2, 5, Seed(3)).unwrap();
        assert_eq!(random_tukey_depth_all(&single, &dirs).unwrap().values, vec![1.0]);

        let d = Dataset::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let dirs = sample_sphere(1, 5, Seed(3)).unwrap();
        assert_eq!(
            random_tukey_depth_all(&d, &dirs).unwrap().values,
            vec![1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0]
        );

        let d = Distribution::Gaussian.sample(&mut Seed(4).rng(), 5, 2).unwrap();
        let dirs = sample_sphere(2, 7, Seed(5)).unwrap();
        let batch = random_tukey_depth_all(&d, &dirs).unwrap();
        for (i, row) in d.rows().enumerate() {
            assert_eq!(batch.values[i], random_tukey_depth(row, &d, &dirs).unwrap());
        }
    }

    #[test]
    fn depth_against_other_sample() {
        let reference = cross();
        let queries = Dataset::from_rows(&[[0.0, 0.0], [5.0, 5.0]]).unwrap();
        let dirs = DirectionSet::from_directions(2, &[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let d = random_tukey_depth_against(&queries, &reference, &dirs).unwrap();
        assert_eq!(d.values, vec![0.5, 0.0]);
        let ps = ProjectedSample::new(&reference, &dirs).unwrap();
        assert_eq!(ps.depth(&[0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn univariate_counts_match_d1() {
        let v = [3.0, 1.0, 2.0, 2.0, 5.0];
        let mut out = [0usize; 5];
        univariate_depth_counts(&v, &mut Vec::new(), &mut out);
        for (o, &x) in out.iter().zip(&v) {
            assert_eq!(*o as f64 / 5.0, d1(x, &v).unwrap());
        }
    }

    #[test]
    fn mahalanobis_examples() {
        let f = fit(vec![0.0, 0.0], DMatrix::identity(2, 2));
        assert_eq!(mahalanobis_depth(&[0.0, 0.0], &f).unwrap(), 1.0);
        assert!((mahalanobis_depth(&[3.0, 4.0], &f).unwrap() - 1.0 / 26.0).abs() < 1e-15);
        let f = fit(
            vec![0.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]),
        );
        assert!((mahalanobis_depth(&[2.0, 0.0], &f).unwrap() - 0.5).abs() < 1e-15);
        let singular = fit(vec![0.0, 0.0], DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        assert_eq!(
            mahalanobis_depth(&[1.0, 0.0], &singular),
            Err(DepthError::DegenerateDispersion)
        );
    }

    #[test]
    fn exact_examples() {
        assert_eq!(exact_tukey_depth_2d(&[0.0, 0.0], &cross()).unwrap(), 0.5);
        assert_eq!(grid_depth(&[0.0, 0.0], &cross(), 10_000), 0.5);
        assert_eq!(exact_tukey_depth_2d(&[3.0, 0.2], &cross()).unwrap(), 0.0);
        let d3 = Dataset::from_rows(&[[1.0, 0.0, 0.0]]).unwrap();
        assert!(exact_tukey_depth_2d(&[0.0, 0.0], &d3).is_err());
        let point = Dataset::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(exact_tukey_depth_2d(&[1.0, 1.0], &point).unwrap(), 1.0);
    }

    #[test]
    fn exact_matches_dense_grid_on_data_points() {
        let d = Distribution::Gaussian.sample(&mut Seed(12).rng(), 7, 2).unwrap();
        for row in d.rows() {
            let exact = exact_tukey_depth_2d(row, &d).unwrap();
            let grid = grid_depth(row, &d, 100_000);
            assert!(grid >= exact && grid - exact <= 1.0 / 7.0 + 1e-12);
        }
    }

    #[test]
    fn exact_handles_collinear_points() {
        // x between two opposite points on a line: every halfplane boundary
        // through x keeps one of them plus x itself.
        let d = Dataset::from_rows(&[[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(exact_tukey_depth_2d(&[0.0, 0.0], &d).unwrap(), 2.0 / 3.0);
        assert_eq!(exact_tukey_depth_2d(&[1.0, 0.0], &d).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn rotating_data_and_directions_together_preserves_depth() {
        let d = Distribution::Gaussian.sample(&mut Seed(6).rng(), 30, 2).unwrap();
        let raw = sample_sphere(2, 9, Seed(7)).unwrap();
        let dirs =
            DirectionSet::from_directions(2, &raw.iter().map(|v| v.to_vec()).collect::<Vec<_>>())
                .unwrap();
        // rotation by 90 degrees is exact in floating point
        let rot = |v: &[f64]| vec![-v[1], v[0]];
        let rd = Dataset::from_rows(&d.rows().map(rot).collect::<Vec<_>>()).unwrap();
        let rdirs =
            DirectionSet::from_directions(2, &dirs.iter().map(rot).collect::<Vec<_>>()).unwrap();
        let a = random_tukey_depth_all(&d, &dirs).unwrap();
        let b = random_tukey_depth_all(&rd, &rdirs).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn in_sample_depths_match_query_path() {
        // rounded values force ties, including -0 against 0
        let raw = Distribution::Cauchy.sample(&mut Seed(13).rng(), 80, 3).unwrap();
        let rounded: Vec<f64> = raw.as_slice().iter().map(|v| (v * 2.0).round() / 2.0).collect();
        let d = Dataset::new(80, 3, rounded).unwrap();
        let dirs = DirectionSet::from_directions(
            3,
            &[vec![1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![1.0, 1.0, 1.0]],
        )
        .unwrap();
        let fast = random_tukey_depth_all(&d, &dirs).unwrap();
        let slow = ProjectedSample::new(&d, &dirs).unwrap().depth_all(&d).unwrap();
        assert_eq!(fast, slow);
        let dirs = sample_sphere(3, 25, Seed(1)).unwrap();
        assert_eq!(
            random_tukey_depth_all(&d, &dirs).unwrap(),
            ProjectedSample::new(&d, &dirs).unwrap().depth_all(&d).unwrap()
        );
    }

    #[test]
    fn projections_match_dot_bit_for_bit() {
        // odd n and k exercise the row tail and a partial panel
        for (n, p, k) in [(37, 5, 7), (8, 50, 4), (3, 2, 1), (101, 13, 9)] {
            let d = Distribution::Cauchy.sample(&mut Seed(n as u64).rng(), n, p).unwrap();
            let dirs = sample_sphere(p, k, Seed(3)).unwrap();
            let columns = project_columns(&d, &dirs).unwrap();
            for (j, v) in dirs.iter().enumerate() {
                for (i, row) in d.rows().enumerate() {
                    assert_eq!(columns[j * n + i].to_bits(), dot(row, v).to_bits());
                }
            }
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[test]
    fn vector_kernel_matches_portable_kernel() {
        if !std::arch::is_x86_feature_detected!("avx2") {
            return;
        }
        let mut rng = Seed(4).rng();
        let block: Vec<[f64; BLOCK_ROWS]> = (0..23)
            .map(|_| std::array::from_fn(|_| Distribution::Cauchy.draw(&mut rng)))
            .collect();
        let panel: Vec<[f64; PANEL]> = (0..23)
            .map(|_| std::array::from_fn(|_| Distribution::Gaussian.draw(&mut rng)))
            .collect();
        // SAFETY: avx2 checked above.
        let fast = unsafe { block_panel_avx2(&block, &panel) };
        assert_eq!(fast.map(|r| r.map(f64::to_bits)), block_panel(&block, &panel).map(|r| r.map(f64::to_bits)));
    }
}
