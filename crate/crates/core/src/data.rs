//! Numeric sample matrices and the simulation laws used by the harnesses.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DepthError, Result};

/// `n x p` matrix of finite reals, one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(DepthError::EmptySample);
        }
        if p == 0 {
            return Err(DepthError::EmptyInput("dimension"));
        }
        if values.len() != n * p {
            return Err(DepthError::DimensionMismatch {
                expected: n * p,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DepthError::NonFinite {
                row: pos / p,
                col: pos % p,
            });
        }
        Ok(Dataset { n, p, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(DepthError::EmptySample)?;
        let p = first.as_ref().len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != p {
                return Err(DepthError::Ragged {
                    row,
                    expected: p,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Dataset::new(rows.len(), p, values)
    }

    /// Stacks several samples of equal dimension, in order.
    pub fn concat(parts: &[&Dataset]) -> Result<Self> {
        let first = parts.first().ok_or(DepthError::EmptySample)?;
        let p = first.p;
        let mut values = Vec::new();
        let mut n = 0;
        for d in parts {
            if d.p != p {
                return Err(DepthError::DimensionMismatch {
                    expected: p,
                    found: d.p,
                });
            }
            values.extend_from_slice(&d.values);
            n += d.n;
        }
        Ok(Dataset { n, p, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Dataset {
        Dataset {
            n: self.n,
            p: self.p,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Subtracts `location` from every row.
    pub fn shifted(&self, location: &[f64]) -> Result<Dataset> {
        if location.len() != self.p {
            return Err(DepthError::DimensionMismatch {
                expected: self.p,
                found: location.len(),
            });
        }
        let mut values = self.values.clone();
        for row in values.chunks_exact_mut(self.p) {
            for (v, m) in row.iter_mut().zip(location) {
                *v -= m;
            }
        }
        Ok(Dataset {
            n: self.n,
            p: self.p,
            values,
        })
    }

    /// The dataset without row `i`. Fails if that would leave it empty.
    pub fn without_row(&self, i: usize) -> Result<Dataset> {
        if self.n <= 1 {
            return Err(DepthError::EmptySample);
        }
        let mut values = Vec::with_capacity((self.n - 1) * self.p);
        values.extend_from_slice(&self.values[..i * self.p]);
        values.extend_from_slice(&self.values[(i + 1) * self.p..]);
        Ok(Dataset {
            n: self.n - 1,
            p: self.p,
            values,
        })
    }
}

/// Sampling laws with independent standardized marginals (the Gaussian is
/// the standard multivariate normal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Gaussian,
    DoubleExponential,
    Cauchy,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [
        Distribution::Gaussian,
        Distribution::DoubleExponential,
        Distribution::Cauchy,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Distribution::Gaussian => "Gaussian",
            Distribution::DoubleExponential => "D. Expone.",
            Distribution::Cauchy => "Cauchy",
        }
    }

    /// One variate of the marginal law.
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Distribution::Gaussian => StandardNormal.sample(rng),
            Distribution::DoubleExponential => {
                // inverse CDF of Laplace(0, 1)
                let u: f64 = rng.random::<f64>() - 0.5;
                let tail = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
                -u.signum() * tail.ln()
            }
            Distribution::Cauchy => {
                let u: f64 = rng.random();
                (std::f64::consts::PI * (u - 0.5)).tan()
            }
        }
    }

    /// An `n x p` sample with i.i.d. entries.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R, n: usize, p: usize) -> Result<Dataset> {
        let values = (0..n * p).map(|_| self.draw(rng)).collect();
        Dataset::new(n, p, values)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Gaussian => "gaussian",
            Distribution::DoubleExponential => "dexp",
            Distribution::Cauchy => "cauchy",
        })
    }
}

impl FromStr for Distribution {
    type Err = DepthError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Distribution::Gaussian),
            "dexp" | "double_exponential" | "double-exponential" | "laplace" => Ok(Distribution::DoubleExponential),
            "cauchy" => Ok(Distribution::Cauchy),
            other => Err(DepthError::InvalidParameter(format!(
                "unknown distribution '{other}'"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn validates_shape_and_finiteness() {
        assert_eq!(Dataset::new(0, 2, vec![]), Err(DepthError::EmptySample));
        assert!(Dataset::new(1, 2, vec![1.0]).is_err());
        assert_eq!(
            Dataset::new(2, 2, vec![1.0, 2.0, f64::NAN, 0.0]),
            Err(DepthError::NonFinite { row: 1, col: 0 })
        );
        let ragged = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0]]);
        assert!(matches!(ragged, Err(DepthError::Ragged { row: 1, .. })));
    }

    #[test]
    fn row_helpers() {
        let d = Dataset::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert_eq!(d.row(1), &[3.0, 4.0]);
        assert_eq!(d.column(1), vec![2.0, 4.0, 6.0]);
        assert_eq!(d.without_row(1).unwrap().as_slice(), &[1.0, 2.0, 5.0, 6.0]);
        assert_eq!(d.shifted(&[1.0, 1.0]).unwrap().row(0), &[0.0, 1.0]);
        let both = Dataset::concat(&[&d, &d.scaled(2.0)]).unwrap();
        assert_eq!(both.n(), 6);
        assert_eq!(both.row(5), &[10.0, 12.0]);
    }

    #[test]
    fn laws_have_expected_medians_and_spread() {
        let mut rng = Seed(4).rng();
        let m = 200_000;
        for dist in Distribution::ALL {
            let mut xs: Vec<f64> = (0..m).map(|_| dist.draw(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let median = xs[m / 2];
            let q3 = xs[3 * m / 4];
            assert!(median.abs() < 0.02, "{dist}: median {median}");
            // upper quartiles: N(0,1) 0.6745, Laplace ln 2, Cauchy 1
            let expected = match dist {
                Distribution::Gaussian => 0.6745,
                Distribution::DoubleExponential => std::f64::consts::LN_2,
                Distribution::Cauchy => 1.0,
            };
            assert!((q3 - expected).abs() < 0.02, "{dist}: q3 {q3}");
        }
    }

    #[test]
    fn parses_distribution_tags() {
        assert_eq!("dexp".parse::<Distribution>().unwrap(), Distribution::DoubleExponential);
        assert_eq!("Gaussian".parse::<Distribution>().unwrap(), Distribution::Gaussian);
        assert!("uniform".parse::<Distribution>().is_err());
    }
}
