//! Wall-clock comparison of the random Tukey and Mahalanobis depths.
//!
//! Each repetition draws a fresh standard Gaussian sample and times the
//! depth of every sample point under both depths. The depth that runs
//! first alternates between repetitions so neither profits from a warmer
//! cache. The Mahalanobis time includes estimating the mean and covariance.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Distribution;
use crate::depth::{mahalanobis_depth_all, random_tukey_depth_all};
use crate::error::{DepthError, Result};
use crate::estimators::{EllipticalFit, LocationKind, ScatterKind};
use crate::rng::{sample_sphere, Seed};

/// Direction counts used for the timing table, indexed by dimension and
/// sample size. `None` outside the tabulated cells.
pub fn table_k(p: usize, n: usize) -> Option<usize> {
    let ks: [usize; 3] = match p {
        2 => [8, 9, 11],
        4 => [12, 18, 20],
        8 => [13, 27, 35],
        25 => [12, 25, 36],
        50 => [12, 26, 34],
        _ => return None,
    };
    match n {
        100 => Some(ks[0]),
        500 => Some(ks[1]),
        1000 => Some(ks[2]),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub p: usize,
    pub n: usize,
    pub k: usize,
    pub repetitions: usize,
    pub seed: Seed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub p: usize,
    pub n: usize,
    pub k: usize,
    pub repetitions: usize,
    /// Mean seconds per full-sample random Tukey evaluation.
    pub random_tukey_mean: f64,
    pub random_tukey_min: f64,
    /// `None` when the covariance is singular (`n <= p`).
    pub mahalanobis_mean: Option<f64>,
    pub mahalanobis_min: Option<f64>,
}

fn seconds<F: FnOnce() -> R, R>(f: F) -> f64 {
    let start = Instant::now();
    black_box(f());
    start.elapsed().as_secs_f64()
}

/// Times one cell on the calling thread.
pub fn run_bench_cell(config: &BenchConfig) -> Result<BenchCell> {
    let BenchConfig {
        p,
        n,
        k,
        repetitions,
        seed,
    } = *config;
    if p == 0 || n == 0 || k == 0 || repetitions == 0 {
        return Err(DepthError::InvalidParameter(
            "p, n, k and repetitions must be >= 1".into(),
        ));
    }
    let mahalanobis_defined = n > p;
    let mut rt = Vec::with_capacity(repetitions);
    let mut maha = Vec::with_capacity(repetitions);
    for rep in 0..repetitions as u64 {
        let data = Distribution::Gaussian.sample(&mut seed.stream(rep), n, p)?;
        let dirs = sample_sphere(p, k, seed.derive(7, rep))?;
        let time_rt = || seconds(|| random_tukey_depth_all(&data, &dirs));
        let time_maha = || {
            seconds(|| {
                EllipticalFit::estimate(&data, LocationKind::Mean, ScatterKind::SampleCovariance)
                    .and_then(|fit| mahalanobis_depth_all(&data, &fit))
            })
        };
        if rep % 2 == 0 {
            rt.push(time_rt());
            if mahalanobis_defined {
                maha.push(time_maha());
            }
        } else {
            if mahalanobis_defined {
                maha.push(time_maha());
            }
            rt.push(time_rt());
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BenchCell {
        p,
        n,
        k,
        repetitions,
        random_tukey_mean: mean(&rt),
        random_tukey_min: min(&rt),
        mahalanobis_mean: mahalanobis_defined.then(|| mean(&maha)),
        mahalanobis_min: mahalanobis_defined.then(|| min(&maha)),
    })
}

/// Fastest full-sample random Tukey time of each `(p, k)` cell on `n`
/// points. The cells are timed round-robin so drifting machine load hits
/// them alike.
pub fn random_tukey_min_times(cells: &[(usize, usize)], n: usize, repetitions: usize, seed: Seed) -> Result<Vec<f64>> {
    if repetitions == 0 {
        return Err(DepthError::InvalidParameter("repetitions must be >= 1".into()));
    }
    let inputs = cells
        .iter()
        .enumerate()
        .map(|(i, &(p, k))| {
            let data = Distribution::Gaussian.sample(&mut seed.stream(i as u64), n, p)?;
            Ok((data, sample_sphere(p, k, seed.derive(7, i as u64))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = vec![f64::INFINITY; cells.len()];
    for _ in 0..repetitions {
        for ((data, dirs), b) in inputs.iter().zip(&mut best) {
            *b = b.min(seconds(|| random_tukey_depth_all(data, dirs)));
        }
    }
    Ok(best)
}
