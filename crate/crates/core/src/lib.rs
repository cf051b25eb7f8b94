//! Pose estimation for ground-constrained objects from partial keypoints.
//!
//! The estimator combines three independent pieces:
//!
//! * [`geometry`]: back-projects any visible keypoint onto its known height
//!   above the ground and subtracts the prior-model offset to get the
//!   object's ground-contact center. One keypoint is enough.
//! * [`orientation`]: decodes the heading as the most probable bin of a
//!   discretized distribution trained against a circular Gaussian.
//! * [`filter`]: a moving average over a short window that drops z-score
//!   outliers per component and falls back to the newest observation.
//!
//! [`pipeline`] strings them together per frame, [`simulator`] provides a
//! deterministic synthetic camera with occlusion and noise, and [`report`]
//! writes the CSV/JSON artifacts.

pub mod filter;
pub mod geometry;
pub mod orientation;
pub mod pipeline;
pub mod report;
pub mod simulator;
mod validate;

pub use filter::{FilterParams, FilterState, HeadingStats, PoseObservation};
pub use geometry::{CameraModel, CenterMode, GeometryError, ImageKeypoint, ModelKeypoint, Point3, TrolleyModel};
pub use orientation::{Angle, OrientationDistribution, OrientationError};
pub use pipeline::{process_frame, DetectionFrame, GoalPose, PipelineConfig, PipelineError, PoseEstimate, TrackState};
pub use simulator::{run_scenario, ScenarioConfig, SimError, SummaryStats};
pub use validate::ValidationError;
