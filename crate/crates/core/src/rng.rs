//! Seeded randomness and projection directions.
//!
//! Every random quantity in the crate is derived from a [`Seed`]. A seed
//! opens independent ChaCha8 streams (`stream index = replication index`),
//! so Monte Carlo harnesses give identical results whatever the number of
//! worker threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DepthError, Result};

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// 64-bit seed. Equal seeds and equal request sequences give equal outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Stream 0 of this seed.
    pub fn rng(self) -> StreamRng {
        self.stream(0)
    }

    /// Independent stream `index` of this seed.
    pub fn stream(self, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }

    /// Child seed for a labelled sub-task (`tag`) and an index within it.
    ///
    /// Uses the splitmix64 finalizer, so nearby `(tag, index)` pairs map to
    /// unrelated seeds.
    pub fn derive(self, tag: u64, index: u64) -> Seed {
        let mut z = self
            .0
            .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
            .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

/// `k` unit vectors in `R^p`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    p: usize,
    seed: Seed,
    values: Vec<f64>,
}

impl DirectionSet {
    /// Wraps explicit directions. Each one is normalized; zero vectors are rejected.
    pub fn from_directions(p: usize, directions: &[Vec<f64>]) -> Result<Self> {
        if p == 0 || directions.is_empty() {
            return Err(DepthError::EmptyInput("direction set"));
        }
        let mut values = Vec::with_capacity(p * directions.len());
        for d in directions {
            if d.len() != p {
                return Err(DepthError::DimensionMismatch {
                    expected: p,
                    found: d.len(),
                });
            }
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(DepthError::InvalidParameter(
                    "directions must be finite and non-zero".into(),
                ));
            }
            values.extend(d.iter().map(|v| v / norm));
        }
        Ok(DirectionSet {
            p,
            seed: Seed(0),
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.p
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn direction(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    /// The first `k` directions (the set a `k`-request with the same seed returns).
    pub fn prefix(&self, k: usize) -> DirectionSet {
        let k = k.min(self.len());
        DirectionSet {
            p: self.p,
            seed: self.seed,
            values: self.values[..k * self.p].to_vec(),
        }
    }

    /// Row-major flat storage, `len() * dim()` values.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Draws one direction uniformly on the unit sphere by normalizing
/// standard Gaussian coordinates. Zero-norm draws are resampled.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, p: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), p);
    loop {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// `k` i.i.d. directions uniform on `S^{p-1}`, read from stream 0 of `seed`.
///
/// The output is prefix-stable: the first `k` directions of a `k + 1`
/// request equal the `k` request.
pub fn sample_sphere(p: usize, k: usize, seed: Seed) -> Result<DirectionSet> {
    sample_directions(p, k, seed, false)
}

/// Like [`sample_sphere`] but folded onto the upper half-sphere
/// (last coordinate non-negative).
pub fn sample_half_sphere(p: usize, k: usize, seed: Seed) -> Result<DirectionSet> {
    sample_directions(p, k, seed, true)
}

fn sample_directions(p: usize, k: usize, seed: Seed, upper: bool) -> Result<DirectionSet> {
    if p == 0 {
        return Err(DepthError::InvalidParameter("dimension must be >= 1".into()));
    }
    if k == 0 {
        return Err(DepthError::InvalidParameter(
            "direction count must be >= 1".into(),
        ));
    }
    let mut rng = seed.rng();
    let mut values = vec![0.0; p * k];
    for d in values.chunks_exact_mut(p) {
        random_unit_vector(&mut rng, p, d);
        if upper && d[p - 1] < 0.0 {
            d.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(DirectionSet { p, seed, values })
}
