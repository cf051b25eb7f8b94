//! Per-frame estimation: decode heading, localize the center from whatever
//! keypoints are visible, and refine through the filter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{FilterParams, FilterState, HeadingStats, PoseObservation};
use crate::geometry::{
    estimate_center, CameraModel, CenterMode, GeometryError, ImageKeypoint, TrolleyModel, KEYPOINT_COUNT,
};
use crate::orientation::{Angle, OrientationDistribution};
use crate::validate::{ensure, ValidationError};

/// Degraded frames tolerated in a row before the track is flagged lost.
pub const DEFAULT_MAX_DEGRADED_GAP: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("frame {0}: no usable keypoints and no pose history")]
    ColdStartNoObservation(u64),
    #[error("frame {frame_id}: orientation has {actual} bins, pipeline expects {expected}")]
    BinCountMismatch {
        frame_id: u64,
        expected: usize,
        actual: usize,
    },
}

/// One frame of detector output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetectionFrame")]
pub struct DetectionFrame {
    pub frame_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<f64>,
    /// One slot per model keypoint, slot `i` holding keypoint `i`.
    pub keypoints: [ImageKeypoint; KEYPOINT_COUNT],
    pub orientation: OrientationDistribution,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetectionFrame {
    frame_id: u64,
    #[serde(default)]
    timestamp: Option<f64>,
    keypoints: Vec<ImageKeypoint>,
    orientation: OrientationDistribution,
}

impl TryFrom<RawDetectionFrame> for DetectionFrame {
    type Error = String;

    fn try_from(raw: RawDetectionFrame) -> Result<Self, String> {
        let n = raw.keypoints.len();
        let keypoints: [ImageKeypoint; KEYPOINT_COUNT] = raw
            .keypoints
            .try_into()
            .map_err(|_| format!("expected {KEYPOINT_COUNT} keypoints, got {n}"))?;
        if let Some((slot, kp)) = keypoints.iter().enumerate().find(|(i, k)| k.index != *i) {
            return Err(format!("keypoint slot {slot} holds index {}", kp.index));
        }
        Ok(Self {
            frame_id: raw.frame_id,
            timestamp: raw.timestamp,
            keypoints,
            orientation: raw.orientation,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub camera: CameraModel,
    #[serde(default)]
    pub model: TrolleyModel,
    pub bin_count: usize,
    #[serde(default)]
    pub filter: FilterParams,
    #[serde(default)]
    pub center_mode: CenterMode,
    #[serde(default)]
    pub heading_stats: HeadingStats,
    #[serde(default = "default_gap")]
    pub max_degraded_gap: usize,
}

fn default_gap() -> usize {
    DEFAULT_MAX_DEGRADED_GAP
}

impl PipelineConfig {
    pub fn new(camera: CameraModel, model: TrolleyModel, bin_count: usize) -> Self {
        Self {
            camera,
            model,
            bin_count,
            filter: FilterParams::default(),
            center_mode: CenterMode::default(),
            heading_stats: HeadingStats::default(),
            max_degraded_gap: DEFAULT_MAX_DEGRADED_GAP,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.camera.validate()?;
        self.model.validate()?;
        self.model.validate_with(&self.camera)?;
        self.filter.validate()?;
        ensure(self.bin_count >= 2, "bin_count", "must be >= 2")
    }

    pub fn initial_state(&self) -> TrackState {
        TrackState {
            filter: FilterState::new(self.filter, self.heading_stats),
            degraded_run: 0,
        }
    }
}

/// Everything that carries over between frames of one track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub filter: FilterState,
    /// Consecutive frames without usable keypoints.
    pub degraded_run: usize,
}

/// Pose output for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub frame_id: u64,
    /// Ground-frame position, meters.
    pub x: f64,
    pub y: f64,
    pub theta: Angle,
    pub n_visible: usize,
    /// Set when no keypoint was usable or the filter fell back to the
    /// latest observation.
    pub degraded: bool,
    /// Set once more than `max_degraded_gap` frames in a row had no usable
    /// keypoints.
    #[serde(default)]
    pub lost: bool,
    /// Unfiltered observation of this frame, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<PoseObservation>,
}

impl PoseEstimate {
    pub fn pose(&self) -> PoseObservation {
        PoseObservation {
            x: self.x,
            y: self.y,
            theta: self.theta,
        }
    }
}

/// Runs one frame through the estimator.
///
/// Frames without usable keypoints repeat the last filtered pose, flagged
/// degraded, and leave the filter window untouched.
pub fn process_frame(
    config: &PipelineConfig,
    state: &mut TrackState,
    frame: &DetectionFrame,
) -> Result<PoseEstimate, PipelineError> {
    if frame.orientation.len() != config.bin_count {
        return Err(PipelineError::BinCountMismatch {
            frame_id: frame.frame_id,
            expected: config.bin_count,
            actual: frame.orientation.len(),
        });
    }
    // heading first, so the center can use it; it never depends on position
    let theta = frame.orientation.decode();
    let center = estimate_center(
        &config.camera,
        &config.model,
        &frame.keypoints,
        config.center_mode,
        Some(theta.radians()),
    );
    match center {
        Ok(c) => {
            state.degraded_run = 0;
            let raw = PoseObservation {
                x: c.ground.0,
                y: c.ground.1,
                theta,
            };
            let out = state.filter.update(raw);
            Ok(PoseEstimate {
                frame_id: frame.frame_id,
                x: out.pose.x,
                y: out.pose.y,
                theta: out.pose.theta,
                n_visible: c.n_used,
                degraded: out.fallback.any(),
                lost: false,
                raw: Some(raw),
            })
        }
        Err(GeometryError::NoUsableKeypoints) => {
            let Some(last) = state.filter.current_estimate() else {
                return Err(PipelineError::ColdStartNoObservation(frame.frame_id));
            };
            state.degraded_run += 1;
            if state.degraded_run == config.max_degraded_gap + 1 {
                log::warn!(
                    "frame {}: track lost after {} degraded frames",
                    frame.frame_id,
                    config.max_degraded_gap
                );
            }
            Ok(PoseEstimate {
                frame_id: frame.frame_id,
                x: last.x,
                y: last.y,
                theta: last.theta,
                n_visible: 0,
                degraded: true,
                lost: state.degraded_run > config.max_degraded_gap,
                raw: None,
            })
        }
        Err(e) => unreachable!("estimate_center only fails with NoUsableKeypoints: {e}"),
    }
}

/// Goal pose handed to a motion planner: meters and radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub degraded: bool,
}

pub fn plan_goal(estimate: &PoseEstimate) -> GoalPose {
    GoalPose {
        x: estimate.x,
        y: estimate.y,
        theta: estimate.theta.radians(),
        degraded: estimate.degraded,
    }
}
