//! Binned orientation distributions.
//!
//! Angles are in degrees. Bin `j` of an `n`-bin distribution is centered at
//! `j * 360 / n` and covers `[j·w - w/2, j·w + w/2)` with `w = 360 / n`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default standard deviation of the training target, degrees.
pub const DEFAULT_TARGET_SIGMA: f64 = 4.0;

/// Tolerance on the sum of a distribution's bins.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrientationError {
    #[error("sigma must be > 0, got {0}")]
    NonPositiveSigma(f64),
    #[error("bin count mismatch: {expected} vs {actual}")]
    BinCountMismatch { expected: usize, actual: usize },
    #[error("length mismatch: {0} predictions vs {1} truths")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("distribution needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("bin {0} is negative or not finite")]
    InvalidProbability(usize),
    #[error("bins sum to {0}, expected 1")]
    NotNormalized(f64),
}

/// An angle in degrees, normalized to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub fn from_degrees(degrees: f64) -> Self {
        let d = degrees.rem_euclid(360.0);
        // rem_euclid of a tiny negative value rounds up to 360
        Self(if d >= 360.0 { 0.0 } else { d })
    }

    pub fn from_radians(radians: f64) -> Self {
        Self::from_degrees(radians.to_degrees())
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0 * PI / 180.0
    }

    /// Signed difference `self - other` wrapped to `(-180, 180]`.
    pub fn signed_difference(self, other: Angle) -> f64 {
        let d = (self.0 - other.0).rem_euclid(360.0);
        if d > 180.0 {
            d - 360.0
        } else {
            d
        }
    }
}

impl From<f64> for Angle {
    fn from(degrees: f64) -> Self {
        Self::from_degrees(degrees)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Shortest distance around the circle, in `[0, 180]`.
pub fn angular_distance(a: Angle, b: Angle) -> f64 {
    let d = (a.0 - b.0).abs();
    d.min(360.0 - d)
}

/// Unnormalized circular Gaussian density of `mu` around `tau`.
pub fn circular_gaussian_density(mu: Angle, tau: Angle, sigma: f64) -> f64 {
    let d = angular_distance(mu, tau);
    (-(d * d) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}

pub fn bin_width(n: usize) -> f64 {
    360.0 / n as f64
}

pub fn bin_center(j: usize, n: usize) -> Angle {
    Angle::from_degrees(j as f64 * bin_width(n))
}

/// Probabilities over `n` equally spaced headings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OrientationDistribution {
    bins: Vec<f64>,
}

impl OrientationDistribution {
    /// Wraps already-normalized probabilities.
    pub fn new(bins: Vec<f64>) -> Result<Self, OrientationError> {
        if bins.len() < 2 {
            return Err(OrientationError::TooFewBins(bins.len()));
        }
        if let Some(i) = bins.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(OrientationError::InvalidProbability(i));
        }
        let sum: f64 = bins.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(OrientationError::NotNormalized(sum));
        }
        Ok(Self { bins })
    }

    /// Scales non-negative weights onto the simplex.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, OrientationError> {
        if weights.len() < 2 {
            return Err(OrientationError::TooFewBins(weights.len()));
        }
        if let Some(i) = weights.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(OrientationError::InvalidProbability(i));
        }
        let sum: f64 = weights.iter().sum();
        if sum.is_nan() || sum <= 0.0 {
            return Err(OrientationError::NotNormalized(sum));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> Result<Self, OrientationError> {
        Self::from_weights(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn bin_width(&self) -> f64 {
        bin_width(self.len())
    }

    /// Index of the most probable bin; lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (j, p) in self.bins.iter().enumerate().skip(1) {
            if *p > self.bins[best] {
                best = j;
            }
        }
        best
    }

    /// Heading at the center of the most probable bin.
    pub fn decode(&self) -> Angle {
        bin_center(self.argmax(), self.len())
    }

    /// Mixes with the uniform distribution: `(1 - floor)·self + floor/n`.
    pub fn with_uniform_floor(&self, floor: f64) -> Result<Self, OrientationError> {
        let n = self.len() as f64;
        Self::from_weights(self.bins.iter().map(|p| (1.0 - floor) * p + floor / n).collect())
    }
}

impl TryFrom<Vec<f64>> for OrientationDistribution {
    type Error = OrientationError;
    fn try_from(bins: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(bins)
    }
}

impl From<OrientationDistribution> for Vec<f64> {
    fn from(d: OrientationDistribution) -> Self {
        d.bins
    }
}

/// Training target: circular Gaussian around `mu` sampled at the bin centers
/// and renormalized onto the simplex.
pub fn circular_gaussian_target(mu: Angle, sigma: f64, n: usize) -> Result<OrientationDistribution, OrientationError> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(OrientationError::NonPositiveSigma(sigma));
    }
    if n < 2 {
        return Err(OrientationError::TooFewBins(n));
    }
    let weights = (0..n)
        .map(|j| circular_gaussian_density(bin_center(j, n), mu, sigma))
        .collect();
    OrientationDistribution::from_weights(weights)
}

/// Sum of squared differences between a predicted distribution and the
/// normalized target around `mu`.
pub fn orientation_loss(predicted: &OrientationDistribution, mu: Angle, sigma: f64) -> Result<f64, OrientationError> {
    let target = circular_gaussian_target(mu, sigma, predicted.len())?;
    Ok(squared_distance(predicted, &target))
}

fn squared_distance(a: &OrientationDistribution, b: &OrientationDistribution) -> f64 {
    a.bins().iter().zip(b.bins()).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Loss against an explicit target of the same bin count.
pub fn loss_against(
    predicted: &OrientationDistribution,
    target: &OrientationDistribution,
) -> Result<f64, OrientationError> {
    if predicted.len() != target.len() {
        return Err(OrientationError::BinCountMismatch {
            expected: target.len(),
            actual: predicted.len(),
        });
    }
    Ok(squared_distance(predicted, target))
}

fn paired_errors(predictions: &[Angle], truths: &[Angle]) -> Result<Vec<f64>, OrientationError> {
    if predictions.len() != truths.len() {
        return Err(OrientationError::LengthMismatch(predictions.len(), truths.len()));
    }
    if predictions.is_empty() {
        return Err(OrientationError::EmptyInput);
    }
    Ok(predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| angular_distance(*p, *t))
        .collect())
}

/// Average degree error.
pub fn ade(predictions: &[Angle], truths: &[Angle]) -> Result<f64, OrientationError> {
    let errs = paired_errors(predictions, truths)?;
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Fraction of predictions within `threshold` degrees of the truth.
pub fn acc_within(predictions: &[Angle], truths: &[Angle], threshold: f64) -> Result<f64, OrientationError> {
    let errs = paired_errors(predictions, truths)?;
    Ok(errs.iter().filter(|e| **e <= threshold).count() as f64 / errs.len() as f64)
}
