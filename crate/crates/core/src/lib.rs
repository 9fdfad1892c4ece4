//! Random Tukey depth and the procedures built on it.
//!
//! The random Tukey depth of a point is the smallest univariate halfspace
//! depth of its projections on `k` directions drawn uniformly on the unit
//! sphere. Around that kernel the crate provides:
//!
//! * [`depth`]: univariate, random Tukey, Mahalanobis and exact bivariate depths;
//! * [`estimators`]: mean, coordinate-wise median, sample covariance and a
//!   Huber-type robust scatter;
//! * [`calibration`]: the Spearman resemblance curve and the choice of `k`;
//! * [`homogeneity`]: depth-rank Wilcoxon and Kruskal-Wallis scale tests;
//! * [`functional`]: depth for discretized curves and depth-based classifiers;
//! * [`io`]: CSV ingestion of numeric matrices and curve files;
//! * [`report`]: JSON-lines records and text tables for the harnesses.

pub mod bench;
pub mod calibration;
pub mod data;
pub mod depth;
pub mod error;
pub mod estimators;
pub mod functional;
pub mod homogeneity;
pub mod io;
pub mod parallel;
pub mod report;
pub mod rng;

pub use data::{Dataset, Distribution};
pub use depth::{DepthKind, DepthVector};
pub use error::{DepthError, Result};
pub use estimators::EllipticalFit;
pub use rng::{DirectionSet, Seed};
