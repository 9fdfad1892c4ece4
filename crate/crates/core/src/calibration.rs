//! Choosing the number of random projections.
//!
//! For a sample from an elliptical law every sensible depth is a monotone
//! function of the Mahalanobis depth. The resemblance `r_k` is the Spearman
//! correlation between the random Tukey depth on the first `k` directions
//! and the Mahalanobis depth of the sample points; `k0` is the first `k`
//! where `r_k > r_{k+1}`.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Distribution};
use crate::depth::{mahalanobis_depth_all, project, univariate_depth_counts};
use crate::error::{DepthError, Result};
use crate::estimators::{determinant, sample_covariance, EllipticalFit, LocationKind, ScatterKind};
use crate::homogeneity::{rank_with_ties_rng, TiePolicy};
use crate::parallel::replicate;
use crate::rng::{sample_sphere, Seed, StreamRng};

/// Default largest `k` examined per replication.
pub const DEFAULT_KMAX: usize = 100;

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Mid-ranks of small non-negative integers by counting.
fn mid_ranks_of_counts(counts: &[usize], max: usize, hist: &mut Vec<usize>, out: &mut [f64]) {
    hist.clear();
    hist.resize(max + 1, 0);
    for &c in counts {
        hist[c] += 1;
    }
    // hist[v] becomes the average rank of value v
    let mut below = 0usize;
    let mut avg = vec![0.0; max + 1];
    for (v, &h) in hist.iter().enumerate() {
        avg[v] = below as f64 + (h as f64 + 1.0) / 2.0;
        below += h;
    }
    for (o, &c) in out.iter_mut().zip(counts) {
        *o = avg[c];
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(DepthError::UndefinedCorrelation);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of mid-ranks.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(DepthError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(DepthError::UndefinedCorrelation);
    }
    pearson(&mid_ranks(a), &mid_ranks(b))
}

/// `r_k` for `k = 1..=kmax` (index `k - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResemblanceCurve {
    pub r: Vec<f64>,
    pub seed: Seed,
}

/// Streams `r_1, r_2, ...` over nested prefixes of one direction set.
struct ResemblanceStream<'a> {
    data: &'a Dataset,
    dirs: crate::rng::DirectionSet,
    next: usize,
    maha_ranks: Vec<f64>,
    running: Vec<usize>,
    counts: Vec<usize>,
    proj_scratch: Vec<f64>,
    hist: Vec<usize>,
    ranks: Vec<f64>,
    ties: TiePolicy,
    tie_rng: StreamRng,
}

impl<'a> ResemblanceStream<'a> {
    fn new(data: &'a Dataset, fit: &EllipticalFit, kmax: usize, seed: Seed, ties: TiePolicy) -> Result<Self> {
        if kmax == 0 {
            return Err(DepthError::InvalidParameter("kmax must be >= 1".into()));
        }
        let maha = mahalanobis_depth_all(data, fit)?;
        let n = data.n();
        Ok(ResemblanceStream {
            data,
            dirs: sample_sphere(data.dim(), kmax, seed)?,
            next: 0,
            maha_ranks: mid_ranks(&maha.values),
            running: vec![n; n],
            counts: vec![0; n],
            proj_scratch: Vec::with_capacity(n),
            hist: Vec::with_capacity(n + 1),
            ranks: vec![0.0; n],
            ties,
            tie_rng: seed.derive(3, 0).rng(),
        })
    }

    fn next_value(&mut self) -> Option<Result<f64>> {
        if self.next >= self.dirs.len() {
            return None;
        }
        let proj = match project(self.data, self.dirs.direction(self.next)) {
            Ok(p) => p,
            Err(e) => return Some(Err(e)),
        };
        self.next += 1;
        univariate_depth_counts(&proj, &mut self.proj_scratch, &mut self.counts);
        for (r, &c) in self.running.iter_mut().zip(&self.counts) {
            *r = (*r).min(c);
        }
        // every point at the same depth: the depth carries no ordering
        if self.running.iter().all(|&c| c == self.running[0]) {
            return Some(Ok(0.0));
        }
        let n = self.data.n();
        if self.ties == TiePolicy::Average {
            mid_ranks_of_counts(&self.running, n, &mut self.hist, &mut self.ranks);
        } else {
            let depth: Vec<f64> = self.running.iter().map(|&c| c as f64).collect();
            self.ranks = rank_with_ties_rng(&depth, self.ties, &mut self.tie_rng);
        }
        Some(pearson(&self.ranks, &self.maha_ranks))
    }
}

/// Resemblance curve of `data` with nested directions drawn from `seed`.
///
/// A constant depth vector (all points equally deep) gives `r_k = 0`.
pub fn resemblance_curve(
    data: &Dataset,
    fit: &EllipticalFit,
    kmax: usize,
    seed: Seed,
) -> Result<ResemblanceCurve> {
    resemblance_curve_with_ties(data, fit, kmax, seed, TiePolicy::Average)
}

/// As [`resemblance_curve`], ranking the random Tukey depths under `ties`.
pub fn resemblance_curve_with_ties(
    data: &Dataset,
    fit: &EllipticalFit,
    kmax: usize,
    seed: Seed,
    ties: TiePolicy,
) -> Result<ResemblanceCurve> {
    let mut stream = ResemblanceStream::new(data, fit, kmax, seed, ties)?;
    let mut r = Vec::with_capacity(kmax);
    while let Some(v) = stream.next_value() {
        r.push(v?);
    }
    Ok(ResemblanceCurve { r, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct K0Estimate {
    pub k0: usize,
    /// No decrease was found up to the end of the curve.
    pub truncated: bool,
}

/// Smallest `k` with `r_k > r_{k+1}`; the curve length if there is none.
pub fn estimate_k0(r: &[f64]) -> K0Estimate {
    match r.windows(2).position(|w| w[0] > w[1]) {
        Some(i) => K0Estimate {
            k0: i + 1,
            truncated: false,
        },
        None => K0Estimate {
            k0: r.len().max(1),
            truncated: true,
        },
    }
}

/// Same value as `estimate_k0(&resemblance_curve(..).r)` but stops drawing
/// directions at the first decrease.
pub fn estimate_k0_streaming(
    data: &Dataset,
    fit: &EllipticalFit,
    kmax: usize,
    seed: Seed,
    ties: TiePolicy,
) -> Result<K0Estimate> {
    let mut stream = ResemblanceStream::new(data, fit, kmax, seed, ties)?;
    let mut prev: Option<f64> = None;
    let mut k = 0;
    while let Some(v) = stream.next_value() {
        let v = v?;
        if let Some(p) = prev {
            if p > v {
                return Ok(K0Estimate {
                    k0: k,
                    truncated: false,
                });
            }
        }
        prev = Some(v);
        k += 1;
    }
    Ok(K0Estimate {
        k0: k.max(1),
        truncated: true,
    })
}

/// Location/scatter pair plugged into the Mahalanobis depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorPairing {
    pub location: LocationKind,
    pub scatter: ScatterKind,
}

impl EstimatorPairing {
    /// Mean and covariance for the Gaussian, coordinate median and covariance
    /// for the double exponential, coordinate median and robust scatter for
    /// the Cauchy.
    pub fn default_for(distribution: Distribution) -> Self {
        match distribution {
            Distribution::Gaussian => EstimatorPairing {
                location: LocationKind::Mean,
                scatter: ScatterKind::SampleCovariance,
            },
            Distribution::DoubleExponential => EstimatorPairing {
                location: LocationKind::CoordinateMedian,
                scatter: ScatterKind::SampleCovariance,
            },
            Distribution::Cauchy => EstimatorPairing {
                location: LocationKind::CoordinateMedian,
                scatter: ScatterKind::RobustM,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub distribution: Distribution,
    pub p: usize,
    pub n: usize,
    pub replications: usize,
    pub kmax: usize,
    pub seed: Seed,
    pub pairing: EstimatorPairing,
    /// Ranking of tied random Tukey depths; mid-ranks by default.
    pub ties: TiePolicy,
}

impl CalibrationConfig {
    pub fn new(distribution: Distribution, p: usize, n: usize, replications: usize, seed: Seed) -> Self {
        CalibrationConfig {
            distribution,
            p,
            n,
            replications,
            kmax: DEFAULT_KMAX,
            seed,
            pairing: EstimatorPairing::default_for(distribution),
            ties: TiePolicy::Average,
        }
    }
}

/// Mean and 95% percentile of `k0` over the replications of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub distribution: Distribution,
    pub p: usize,
    pub n: usize,
    pub replications: usize,
    pub kmax: usize,
    /// The dispersion estimate is singular; no `k0` values exist.
    pub degenerate: bool,
    pub mean_k0: Option<f64>,
    pub pct95_k0: Option<usize>,
    /// Replications whose curve never decreased up to `kmax`.
    pub truncated: usize,
    /// Replications skipped because their dispersion estimate was singular.
    pub degenerate_replications: usize,
}

/// Smallest value whose empirical CDF reaches `level`.
pub fn lower_percentile(sorted: &[usize], level: f64) -> usize {
    let m = sorted.len();
    let idx = ((level * m as f64) - 1e-9).ceil().max(1.0) as usize - 1;
    sorted[idx.min(m - 1)]
}

pub fn run_calibration(config: &CalibrationConfig) -> Result<CalibrationSummary> {
    let CalibrationConfig {
        distribution,
        p,
        n,
        replications,
        kmax,
        seed,
        pairing,
        ties,
    } = *config;
    if p == 0 || n == 0 || kmax == 0 {
        return Err(DepthError::InvalidParameter("p, n and kmax must be >= 1".into()));
    }
    let mut summary = CalibrationSummary {
        distribution,
        p,
        n,
        replications,
        kmax,
        degenerate: n <= p,
        mean_k0: None,
        pct95_k0: None,
        truncated: 0,
        degenerate_replications: 0,
    };
    if summary.degenerate || replications == 0 {
        return Ok(summary);
    }

    let outcomes: Vec<Result<Option<K0Estimate>>> = replicate(replications, |rep| {
        let data = distribution.sample(&mut seed.stream(rep), n, p)?;
        let fit = EllipticalFit::estimate(&data, pairing.location, pairing.scatter)?;
        if fit.degenerate {
            return Ok(None);
        }
        estimate_k0_streaming(&data, &fit, kmax, seed.derive(1, rep), ties).map(Some)
    });

    let mut k0s = Vec::with_capacity(replications);
    for outcome in outcomes {
        match outcome? {
            Some(est) => {
                summary.truncated += est.truncated as usize;
                k0s.push(est.k0);
            }
            None => summary.degenerate_replications += 1,
        }
    }
    if k0s.is_empty() {
        summary.degenerate = true;
        return Ok(summary);
    }
    k0s.sort_unstable();
    summary.mean_k0 = Some(k0s.iter().sum::<usize>() as f64 / k0s.len() as f64);
    summary.pct95_k0 = Some(lower_percentile(&k0s, 0.95));
    Ok(summary)
}

/// `E[det S] = prod_{i=1..p} (n - i) / (n - 1)` for the unbiased sample
/// covariance of `n` standard Gaussian vectors; 0 when `n <= p`.
pub fn expected_covariance_determinant(p: usize, n: usize) -> f64 {
    if n <= p {
        return 0.0;
    }
    (1..=p).map(|i| (n - i) as f64 / (n - 1) as f64).product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovDetSummary {
    pub p: usize,
    pub n: usize,
    pub replications: usize,
    pub degenerate: bool,
    pub mean_det: f64,
    pub std_error: f64,
}

/// Mean determinant of the sample covariance of standard Gaussian samples.
pub fn run_covariance_determinant_study(
    p: usize,
    n: usize,
    replications: usize,
    seed: Seed,
) -> Result<CovDetSummary> {
    if p == 0 || n == 0 {
        return Err(DepthError::InvalidParameter("p and n must be >= 1".into()));
    }
    let degenerate = n <= p;
    if degenerate || replications == 0 {
        return Ok(CovDetSummary {
            p,
            n,
            replications,
            degenerate,
            mean_det: 0.0,
            std_error: 0.0,
        });
    }
    let dets = replicate(replications, |rep| -> Result<f64> {
        let data = Distribution::Gaussian.sample(&mut seed.stream(rep), n, p)?;
        Ok(determinant(&sample_covariance(&data)?))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let m = dets.len() as f64;
    let mean = dets.iter().sum::<f64>() / m;
    let var = if dets.len() > 1 {
        dets.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(CovDetSummary {
        p,
        n,
        replications,
        degenerate,
        mean_det: mean,
        std_error: (var / m).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::random_tukey_depth_all;
    use nalgebra::DMatrix;

    #[test]
    fn spearman_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman_rho(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let rev = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman_rho(&a, &rev).unwrap() + 1.0).abs() < 1e-15);
        let r = spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap();
        assert!((r + 0.5).abs() < 1e-15);
        assert_eq!(
            spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(DepthError::UndefinedCorrelation)
        );
        assert!(spearman_rho(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn mid_ranks_average_ties() {
        assert_eq!(mid_ranks(&[5.0, 5.0]), vec![1.5, 1.5]);
        assert_eq!(mid_ranks(&[2.0, 1.0, 2.0, 0.0]), vec![3.5, 2.0, 3.5, 1.0]);
        let counts = [3usize, 1, 3, 0];
        let mut out = [0.0; 4];
        mid_ranks_of_counts(&counts, 3, &mut Vec::new(), &mut out);
        assert_eq!(out.to_vec(), mid_ranks(&[3.0, 1.0, 3.0, 0.0]));
    }

    #[test]
    fn k0_examples() {
        assert_eq!(estimate_k0(&[0.5, 0.6, 0.55, 0.7]).k0, 2);
        assert_eq!(estimate_k0(&[0.9, 0.7, 0.8]).k0, 1);
        let inc = estimate_k0(&[0.1, 0.2, 0.3]);
        assert_eq!(inc, K0Estimate { k0: 3, truncated: true });
        // equal consecutive values are not a decrease
        assert_eq!(estimate_k0(&[0.1, 0.1, 0.05]).k0, 2);
    }

    #[test]
    fn curve_matches_direct_spearman() {
        let data = Distribution::Gaussian.sample(&mut Seed(1).rng(), 60, 3).unwrap();
        let fit = EllipticalFit::estimate(&data, LocationKind::Mean, ScatterKind::SampleCovariance)
            .unwrap();
        let curve = resemblance_curve(&data, &fit, 12, Seed(2)).unwrap();
        let dirs = sample_sphere(3, 12, Seed(2)).unwrap();
        let maha = mahalanobis_depth_all(&data, &fit).unwrap();
        for k in 1..=12 {
            let rt = random_tukey_depth_all(&data, &dirs.prefix(k)).unwrap();
            let direct = spearman_rho(&rt.values, &maha.values).unwrap();
            assert!((curve.r[k - 1] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_prefix_is_nested() {
        let data = Distribution::Cauchy.sample(&mut Seed(3).rng(), 40, 2).unwrap();
        let fit = EllipticalFit::estimate(&data, LocationKind::CoordinateMedian, ScatterKind::RobustM)
            .unwrap();
        let short = resemblance_curve(&data, &fit, 5, Seed(4)).unwrap();
        let long = resemblance_curve(&data, &fit, 20, Seed(4)).unwrap();
        assert_eq!(short.r[..], long.r[..5]);
        let streamed = estimate_k0_streaming(&data, &fit, 20, Seed(4), TiePolicy::Average).unwrap();
        assert_eq!(streamed, estimate_k0(&long.r));
    }

    #[test]
    fn one_dimensional_curve_is_constant() {
        let data = Distribution::Gaussian.sample(&mut Seed(5).rng(), 30, 1).unwrap();
        let fit = EllipticalFit::estimate(&data, LocationKind::Mean, ScatterKind::SampleCovariance)
            .unwrap();
        let curve = resemblance_curve(&data, &fit, 6, Seed(6)).unwrap();
        assert!(curve.r.iter().all(|&r| r == curve.r[0]));
        let single = resemblance_curve(&data, &fit, 1, Seed(6)).unwrap();
        assert_eq!(single.r.len(), 1);
        assert!((-1.0..=1.0).contains(&single.r[0]));
    }

    #[test]
    fn constant_depth_gives_zero_resemblance() {
        // points in convex position: enough directions leave each at depth 1/n
        let radii = [1.0, 1.05, 1.0, 1.1, 1.0, 1.15];
        let rows: Vec<[f64; 2]> = radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let a = i as f64 * std::f64::consts::PI / 3.0;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let fit = EllipticalFit::estimate(&data, LocationKind::Mean, ScatterKind::SampleCovariance)
            .unwrap();
        let curve = resemblance_curve(&data, &fit, 400, Seed(9)).unwrap();
        assert_eq!(*curve.r.last().unwrap(), 0.0);
        // high dimension, few points: the calibration must not fail
        let s = run_calibration(&CalibrationConfig::new(Distribution::Gaussian, 8, 25, 20, Seed(1)))
            .unwrap();
        assert!(s.mean_k0.is_some());
    }

    #[test]
    fn random_ties_are_reproducible() {
        let data = Distribution::Gaussian.sample(&mut Seed(2).rng(), 30, 2).unwrap();
        let fit = EllipticalFit::estimate(&data, LocationKind::Mean, ScatterKind::SampleCovariance)
            .unwrap();
        let a = resemblance_curve_with_ties(&data, &fit, 15, Seed(3), TiePolicy::Random).unwrap();
        let b = resemblance_curve_with_ties(&data, &fit, 15, Seed(3), TiePolicy::Random).unwrap();
        assert_eq!(a, b);
        let mut cfg = CalibrationConfig::new(Distribution::Gaussian, 2, 25, 30, Seed(4));
        cfg.ties = TiePolicy::Random;
        assert_eq!(run_calibration(&cfg).unwrap(), run_calibration(&cfg).unwrap());
    }

    #[test]
    fn degenerate_fit_is_rejected() {
        let data = Distribution::Gaussian.sample(&mut Seed(5).rng(), 3, 3).unwrap();
        let fit = EllipticalFit::new(
            vec![0.0; 3],
            DMatrix::zeros(3, 3),
            LocationKind::Mean,
            ScatterKind::SampleCovariance,
        )
        .unwrap();
        assert_eq!(
            resemblance_curve(&data, &fit, 3, Seed(0)),
            Err(DepthError::DegenerateDispersion)
        );
    }

    #[test]
    fn percentile_is_lower_order_statistic() {
        let v: Vec<usize> = (1..=100).collect();
        assert_eq!(lower_percentile(&v, 0.95), 95);
        assert_eq!(lower_percentile(&[3, 3, 4, 9], 0.95), 9);
        assert_eq!(lower_percentile(&[1], 0.95), 1);
    }

    #[test]
    fn degenerate_cells() {
        let s = run_calibration(&CalibrationConfig::new(Distribution::Gaussian, 25, 25, 10, Seed(1)))
            .unwrap();
        assert!(s.degenerate && s.mean_k0.is_none());
        let d = run_covariance_determinant_study(4, 3, 10, Seed(1)).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.mean_det, 0.0);
    }

    #[test]
    fn small_calibration_run() {
        let s = run_calibration(&CalibrationConfig::new(Distribution::Cauchy, 2, 25, 40, Seed(9)))
            .unwrap();
        assert!(!s.degenerate);
        let mean = s.mean_k0.unwrap();
        assert!((1.0..=100.0).contains(&mean));
        assert!(s.pct95_k0.unwrap() >= 1);
    }

    #[test]
    fn expected_determinant_values() {
        assert!((expected_covariance_determinant(2, 100) - 98.0 / 99.0).abs() < 1e-15);
        assert_eq!(expected_covariance_determinant(3, 3), 0.0);
    }
}
