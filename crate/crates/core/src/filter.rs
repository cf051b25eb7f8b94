//! Modified moving-average filter.
//!
//! Each component of the pose (x, y, heading) is filtered independently over
//! a FIFO window of the last `window_size` raw observations:
//!
//! 1. z-score every observation in the window against the window's mean and
//!    population standard deviation (zero deviation means every z is zero);
//! 2. average the observations whose z-score is at most `z_threshold`;
//! 3. if none qualify, report the latest observation instead.
//!
//! Headings use circular statistics by default: the mean is the direction of
//! the summed unit vectors and deviations are angular distances to it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orientation::{angular_distance, Angle};
use crate::validate::{ensure, ValidationError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("filter window is empty")]
    EmptyWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterParams {
    pub window_size: usize,
    pub z_threshold: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            window_size: 10,
            z_threshold: 2.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(self.window_size >= 1, "filter.window_size", "must be >= 1")?;
        ensure(
            self.z_threshold.is_finite() && self.z_threshold > 0.0,
            "filter.z_threshold",
            "must be > 0",
        )
    }
}

/// Statistics used for the heading component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadingStats {
    #[default]
    Circular,
    /// Arithmetic statistics on raw degrees. Breaks at the 0/360 seam; kept
    /// for comparison.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseObservation {
    pub x: f64,
    pub y: f64,
    pub theta: Angle,
}

impl PoseObservation {
    pub fn new(x: f64, y: f64, theta_degrees: f64) -> Self {
        Self {
            x,
            y,
            theta: Angle::from_degrees(theta_degrees),
        }
    }
}

/// Per-observation z-scores for each component, in window order.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Which components fell back to the latest observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Fallback {
    pub x: bool,
    pub y: bool,
    pub theta: bool,
}

impl Fallback {
    pub fn any(self) -> bool {
        self.x || self.y || self.theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOutput {
    pub pose: PoseObservation,
    pub fallback: Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    params: FilterParams,
    heading_stats: HeadingStats,
    window: VecDeque<PoseObservation>,
    estimate: Option<PoseObservation>,
}

impl FilterState {
    pub fn new(params: FilterParams, heading_stats: HeadingStats) -> Self {
        Self {
            params,
            heading_stats,
            window: VecDeque::with_capacity(params.window_size),
            estimate: None,
        }
    }

    pub fn params(&self) -> FilterParams {
        self.params
    }

    /// Raw observations, oldest first.
    pub fn window(&self) -> impl ExactSizeIterator<Item = &PoseObservation> {
        self.window.iter()
    }

    /// Last filtered output, if any update has happened.
    pub fn current_estimate(&self) -> Option<PoseObservation> {
        self.estimate
    }

    pub fn z_scores(&self) -> Result<ZScores, FilterError> {
        if self.window.is_empty() {
            return Err(FilterError::EmptyWindow);
        }
        let xs: Vec<f64> = self.window.iter().map(|o| o.x).collect();
        let ys: Vec<f64> = self.window.iter().map(|o| o.y).collect();
        let thetas: Vec<Angle> = self.window.iter().map(|o| o.theta).collect();
        Ok(ZScores {
            x: linear_z(&xs),
            y: linear_z(&ys),
            theta: match self.heading_stats {
                HeadingStats::Circular => circular_z(&thetas),
                HeadingStats::Linear => linear_z(&thetas.iter().map(|t| t.degrees()).collect::<Vec<_>>()),
            },
        })
    }

    /// Pushes a raw observation (evicting the oldest when full) and returns
    /// the filtered pose.
    pub fn update(&mut self, obs: PoseObservation) -> FilterOutput {
        if self.window.len() == self.params.window_size {
            self.window.pop_front();
        }
        self.window.push_back(obs);
        let z = self.z_scores().expect("window holds the new observation");
        let threshold = self.params.z_threshold;

        let xs: Vec<f64> = self.window.iter().map(|o| o.x).collect();
        let ys: Vec<f64> = self.window.iter().map(|o| o.y).collect();
        let (x, fx) = match inliers(&xs, &z.x, threshold) {
            Some(q) => (bounded_mean(&q), false),
            None => (obs.x, true),
        };
        let (y, fy) = match inliers(&ys, &z.y, threshold) {
            Some(q) => (bounded_mean(&q), false),
            None => (obs.y, true),
        };
        let thetas: Vec<Angle> = self.window.iter().map(|o| o.theta).collect();
        let (theta, ft) = match inliers(&thetas, &z.theta, threshold) {
            Some(q) => (
                match self.heading_stats {
                    HeadingStats::Circular => circular_mean(&q),
                    HeadingStats::Linear => {
                        Angle::from_degrees(bounded_mean(&q.iter().map(|t| t.degrees()).collect::<Vec<_>>()))
                    }
                },
                false,
            ),
            None => (obs.theta, true),
        };

        let pose = PoseObservation { x, y, theta };
        self.estimate = Some(pose);
        FilterOutput {
            pose,
            fallback: Fallback {
                x: fx,
                y: fy,
                theta: ft,
            },
        }
    }
}

fn inliers<T: Copy>(values: &[T], z: &[f64], threshold: f64) -> Option<Vec<T>> {
    let q: Vec<T> = values
        .iter()
        .zip(z)
        .filter(|(_, z)| **z <= threshold)
        .map(|(v, _)| *v)
        .collect();
    (!q.is_empty()).then_some(q)
}

/// Arithmetic mean clamped to the sample range, so rounding never pushes it
/// outside `[min, max]` and a constant sample returns its value exactly.
pub(crate) fn bounded_mean(values: &[f64]) -> f64 {
    let sum: f64 = values.iter().sum();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (sum / values.len() as f64).clamp(min, max)
}

fn linear_z(values: &[f64]) -> Vec<f64> {
    let mean = bounded_mean(values);
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean).abs() / sd).collect()
}

/// Direction of the summed unit vectors, measured relative to the first
/// angle so identical inputs return that angle exactly.
pub(crate) fn circular_mean(angles: &[Angle]) -> Angle {
    let reference = angles[0];
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| {
        let (ds, dc) = a.signed_difference(reference).to_radians().sin_cos();
        (s + ds, c + dc)
    });
    Angle::from_degrees(reference.degrees() + s.atan2(c).to_degrees())
}

fn circular_z(angles: &[Angle]) -> Vec<f64> {
    let mean = circular_mean(angles);
    let dev: Vec<f64> = angles.iter().map(|a| angular_distance(*a, mean)).collect();
    let sd = (dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64).sqrt();
    if sd == 0.0 {
        return vec![0.0; dev.len()];
    }
    dev.iter().map(|d| d / sd).collect()
}
