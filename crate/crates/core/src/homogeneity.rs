//! Depth-rank scale tests.
//!
//! The samples are centred, pooled, and every pooled point gets its random
//! Tukey depth with respect to the pooled sample. Under a scale alternative
//! the points of the wider sample sit on the outside of the cloud and have
//! small depth ranks. Two samples are compared with a one-sided Wilcoxon
//! rank-sum test, `K` samples with the Kruskal-Wallis test.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::data::{Dataset, Distribution};
use crate::depth::random_tukey_depth_all;
use crate::error::{DepthError, Result};
use crate::estimators::{coordinate_median, sample_mean};
use crate::parallel::replicate;
use crate::rng::{sample_half_sphere, sample_sphere, DirectionSet, Seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Tied values get a random permutation of their rank block.
    Random,
    Average,
    Min,
    Max,
}

/// Ranks `1..=N` (ascending) with ties resolved by `policy`.
pub fn rank_with_ties(values: &[f64], policy: TiePolicy, seed: Seed) -> Vec<f64> {
    rank_with_ties_rng(values, policy, &mut seed.rng())
}

pub fn rank_with_ties_rng<R: Rng + ?Sized>(values: &[f64], policy: TiePolicy, rng: &mut R) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    if policy == TiePolicy::Random {
        order.shuffle(rng);
    }
    // stable: after a shuffle, ties stay in uniformly random order
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        for (pos, &i) in order[start..end].iter().enumerate() {
            ranks[i] = match policy {
                TiePolicy::Random => (start + pos + 1) as f64,
                TiePolicy::Average => (start + 1 + end) as f64 / 2.0,
                TiePolicy::Min => (start + 1) as f64,
                TiePolicy::Max => end as f64,
            };
        }
        start = end;
    }
    ranks
}

/// `sum (t^3 - t)` over tie blocks.
fn tie_sum(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut s = 0.0;
    let mut start = 0;
    while start < v.len() {
        let mut end = start + 1;
        while end < v.len() && v[end] == v[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        s += t * t * t - t;
        start = end;
    }
    s
}

/// How pooled-sample depths are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthBackend {
    /// `k` random directions on the whole sphere.
    RandomTukey { k: usize },
    /// Many random directions on the upper half-sphere, a stand-in for the
    /// exact Tukey depth.
    DenseReference { directions: usize },
}

impl DepthBackend {
    pub const DENSE_1000: DepthBackend = DepthBackend::DenseReference { directions: 1000 };

    pub fn label(&self) -> String {
        match self {
            DepthBackend::RandomTukey { k } => format!("random(k={k})"),
            DepthBackend::DenseReference { directions } => format!("dense{directions}"),
        }
    }

    fn directions(&self, p: usize, seed: Seed) -> Result<DirectionSet> {
        match *self {
            DepthBackend::RandomTukey { k } => sample_sphere(p, k, seed),
            DepthBackend::DenseReference { directions } => sample_half_sphere(p, directions, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    /// Exact null distribution for `N <= 20` with integer ranks, else normal.
    Auto,
    /// Normal approximation with continuity correction.
    Normal,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleTestOptions {
    pub alpha: f64,
    pub tie_policy: TiePolicy,
    pub p_value: PValueMethod,
}

impl Default for ScaleTestOptions {
    fn default() -> Self {
        ScaleTestOptions {
            alpha: 0.05,
            tie_policy: TiePolicy::Random,
            p_value: PValueMethod::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleTestKind {
    Wilcoxon,
    KruskalWallis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: ScaleTestKind,
    /// Rank sum of the second sample (Wilcoxon) or `H` (Kruskal-Wallis).
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub tie_policy: TiePolicy,
    pub backend: DepthBackend,
    pub seed: Seed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMethod {
    Mean,
    CoordinateMedian,
}

impl CenterMethod {
    /// Mean for the Gaussian, coordinate-wise median otherwise.
    pub fn default_for(distribution: Distribution) -> Self {
        match distribution {
            Distribution::Gaussian => CenterMethod::Mean,
            _ => CenterMethod::CoordinateMedian,
        }
    }
}

/// Subtracts the chosen location estimate from every row.
pub fn center_sample(data: &Dataset, method: CenterMethod) -> Dataset {
    let location = match method {
        CenterMethod::Mean => sample_mean(data),
        CenterMethod::CoordinateMedian => coordinate_median(data),
    };
    data.shifted(&location).expect("location has the data dimension")
}

/// Depth ranks of the pooled samples, split back per sample.
fn pooled_depth_ranks(
    samples: &[&Dataset],
    backend: DepthBackend,
    tie_policy: TiePolicy,
    seed: Seed,
) -> Result<Vec<Vec<f64>>> {
    let pooled = Dataset::concat(samples)?;
    let dirs = backend.directions(pooled.dim(), seed.derive(10, 0))?;
    let depths = random_tukey_depth_all(&pooled, &dirs)?;
    let ranks = rank_with_ties_rng(&depths.values, tie_policy, &mut seed.stream(11));
    let mut out = Vec::with_capacity(samples.len());
    let mut offset = 0;
    for s in samples {
        out.push(ranks[offset..offset + s.n()].to_vec());
        offset += s.n();
    }
    Ok(out)
}

fn validate(alpha: f64, backend: DepthBackend) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(DepthError::InvalidParameter(format!("alpha {alpha} outside [0, 1]")));
    }
    match backend {
        DepthBackend::RandomTukey { k: 0 } | DepthBackend::DenseReference { directions: 0 } => Err(
            DepthError::InvalidParameter("direction count must be >= 1".into()),
        ),
        _ => Ok(()),
    }
}

/// Number of `m`-subsets of `{1..=total}` by rank sum.
fn rank_sum_counts(total: usize, m: usize) -> Vec<f64> {
    let max_sum = total * (total + 1) / 2;
    // counts[j][s]: subsets of size j with sum s
    let mut counts = vec![vec![0.0f64; max_sum + 1]; m + 1];
    counts[0][0] = 1.0;
    for r in 1..=total {
        for j in (1..=m.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                counts[j][s] += counts[j - 1][s - r];
            }
        }
    }
    counts.swap_remove(m)
}

/// `P(W <= w)` for the rank sum of `m` of `total` ranks under the null.
pub fn rank_sum_lower_tail_exact(w: f64, total: usize, m: usize) -> f64 {
    let counts = rank_sum_counts(total, m);
    let all: f64 = counts.iter().sum();
    let limit = w.floor().max(0.0) as usize;
    let below: f64 = counts.iter().take(limit + 1).sum();
    (below / all).min(1.0)
}

/// Lower-tail Wilcoxon rank-sum p-value for the ranks of the second sample.
fn wilcoxon_lower_p(
    y_ranks: &[f64],
    all_ranks: &[f64],
    n_x: usize,
    policy: TiePolicy,
    method: PValueMethod,
) -> f64 {
    let n_y = y_ranks.len();
    let total = n_x + n_y;
    let w: f64 = y_ranks.iter().sum();
    let integer_ranks = policy != TiePolicy::Average;
    let exact = match method {
        PValueMethod::Exact => integer_ranks,
        PValueMethod::Auto => integer_ranks && total <= 20,
        PValueMethod::Normal => false,
    };
    if exact {
        return rank_sum_lower_tail_exact(w, total, n_y);
    }
    let (nx, ny, nn) = (n_x as f64, n_y as f64, total as f64);
    let mean = ny * (nn + 1.0) / 2.0;
    let mut var = nx * ny * (nn + 1.0) / 12.0;
    if policy == TiePolicy::Average {
        var -= nx * ny * tie_sum(all_ranks) / (12.0 * nn * (nn - 1.0));
    }
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w - mean + 0.5) / var.sqrt();
    Normal::standard().cdf(z)
}

/// One-sided test that `y` has a larger scale than `x`, with default options.
pub fn wilcoxon_scale_test(x: &Dataset, y: &Dataset, k: usize, alpha: f64, seed: Seed) -> Result<TestReport> {
    let options = ScaleTestOptions {
        alpha,
        ..Default::default()
    };
    wilcoxon_scale_test_with(x, y, DepthBackend::RandomTukey { k }, &options, seed)
}

pub fn wilcoxon_scale_test_with(
    x: &Dataset,
    y: &Dataset,
    backend: DepthBackend,
    options: &ScaleTestOptions,
    seed: Seed,
) -> Result<TestReport> {
    validate(options.alpha, backend)?;
    if x.dim() != y.dim() {
        return Err(DepthError::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let ranks = pooled_depth_ranks(&[x, y], backend, options.tie_policy, seed)?;
    let all: Vec<f64> = ranks.concat();
    let p_value = wilcoxon_lower_p(&ranks[1], &all, x.n(), options.tie_policy, options.p_value);
    Ok(TestReport {
        test: ScaleTestKind::Wilcoxon,
        statistic: ranks[1].iter().sum(),
        p_value,
        reject: p_value <= options.alpha,
        alpha: options.alpha,
        tie_policy: options.tie_policy,
        backend,
        seed,
    })
}

/// Kruskal-Wallis `H` of rank groups; tie-corrected under average ranks.
pub fn kruskal_wallis_h(groups: &[Vec<f64>], policy: TiePolicy) -> f64 {
    let nn: usize = groups.iter().map(Vec::len).sum();
    let nf = nn as f64;
    let sum: f64 = groups
        .iter()
        .map(|g| {
            let r: f64 = g.iter().sum();
            r * r / g.len() as f64
        })
        .sum();
    let h = 12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0);
    if policy == TiePolicy::Average {
        let all: Vec<f64> = groups.concat();
        let c = 1.0 - tie_sum(&all) / (nf * nf * nf - nf);
        if c > 0.0 {
            return h / c;
        }
    }
    h
}

pub fn kruskal_wallis_scale_test(samples: &[Dataset], k: usize, alpha: f64, seed: Seed) -> Result<TestReport> {
    let options = ScaleTestOptions {
        alpha,
        ..Default::default()
    };
    kruskal_wallis_scale_test_with(samples, DepthBackend::RandomTukey { k }, &options, seed)
}

pub fn kruskal_wallis_scale_test_with(
    samples: &[Dataset],
    backend: DepthBackend,
    options: &ScaleTestOptions,
    seed: Seed,
) -> Result<TestReport> {
    validate(options.alpha, backend)?;
    if samples.len() < 2 {
        return Err(DepthError::InvalidParameter(
            "Kruskal-Wallis needs at least two samples".into(),
        ));
    }
    let refs: Vec<&Dataset> = samples.iter().collect();
    let ranks = pooled_depth_ranks(&refs, backend, options.tie_policy, seed)?;
    let h = kruskal_wallis_h(&ranks, options.tie_policy);
    let chi = ChiSquared::new((samples.len() - 1) as f64).expect("df >= 1");
    let p_value = (1.0 - chi.cdf(h.max(0.0))).clamp(0.0, 1.0);
    Ok(TestReport {
        test: ScaleTestKind::KruskalWallis,
        statistic: h,
        p_value,
        reject: p_value <= options.alpha,
        alpha: options.alpha,
        tie_policy: options.tie_policy,
        backend,
        seed,
    })
}

/// Simulation design for the power studies.
///
/// Group `i < K - 1` is drawn as `r_i * Z` and the last group as `Z`, each
/// with `n_per_group[i]` rows of i.i.d. marginals. With two groups the
/// scaled group is the second sample of the Wilcoxon test (the one tested
/// for larger scale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleScenario {
    pub distribution: Distribution,
    pub p: usize,
    pub n_per_group: Vec<usize>,
    pub scale_factors: Vec<f64>,
    pub centering: CenterMethod,
}

impl ScaleScenario {
    /// `groups` equal groups of size `n`, centred as in the reference design.
    pub fn new(distribution: Distribution, n: usize, scale_factors: Vec<f64>) -> Self {
        ScaleScenario {
            distribution,
            p: 2,
            n_per_group: vec![n; scale_factors.len() + 1],
            scale_factors,
            centering: CenterMethod::default_for(distribution),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_per_group.len() < 2 || self.scale_factors.len() + 1 != self.n_per_group.len() {
            return Err(DepthError::InvalidParameter(
                "need K >= 2 groups and K - 1 scale factors".into(),
            ));
        }
        if self.scale_factors.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(DepthError::InvalidParameter("scale factors must be > 0".into()));
        }
        if self.p == 0 || self.n_per_group.contains(&0) {
            return Err(DepthError::InvalidParameter("p and group sizes must be >= 1".into()));
        }
        Ok(())
    }

    /// Draws, scales and centres one replicate of every group.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<Dataset>> {
        self.validate()?;
        self.n_per_group
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let z = self.distribution.sample(rng, n, self.p)?;
                let r = self.scale_factors.get(i).copied().unwrap_or(1.0);
                Ok(center_sample(&z.scaled(r), self.centering))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    pub rejections: usize,
    pub replications: usize,
    pub rate: f64,
}

/// Monte Carlo rejection rate of the depth-rank scale test on `scenario`.
pub fn run_scale_power_study(
    scenario: &ScaleScenario,
    backend: DepthBackend,
    options: &ScaleTestOptions,
    replications: usize,
    seed: Seed,
) -> Result<PowerSummary> {
    scenario.validate()?;
    validate(options.alpha, backend)?;
    let decisions = replicate(replications, |rep| -> Result<bool> {
        let groups = scenario.draw(&mut seed.stream(rep))?;
        let test_seed = seed.derive(2, rep);
        let report = if groups.len() == 2 {
            wilcoxon_scale_test_with(&groups[1], &groups[0], backend, options, test_seed)?
        } else {
            kruskal_wallis_scale_test_with(&groups, backend, options, test_seed)?
        };
        Ok(report.reject)
    });
    let mut rejections = 0;
    for d in decisions {
        rejections += d? as usize;
    }
    Ok(PowerSummary {
        rejections,
        replications,
        rate: if replications == 0 {
            0.0
        } else {
            rejections as f64 / replications as f64
        },
    })
}
