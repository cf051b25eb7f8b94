//! Synthetic scenes standing in for the detection networks.
//!
//! A trolley follows a waypoint trajectory on the ground in front of the
//! camera. Its six keypoints are projected through the pinhole model, hidden
//! by image bounds, image-space occluder rectangles and (optionally) the
//! trolley's own body, and perturbed by Gaussian pixel noise. The orientation
//! channel is a noisy circular-Gaussian target mixed with a uniform floor.
//!
//! Randomness for frame `k` comes from a ChaCha stream keyed on
//! `(rng_seed, k)`, so any frame can be regenerated on its own.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::PoseObservation;
use crate::geometry::{CameraModel, ImageKeypoint, TrolleyModel, KEYPOINT_COUNT};
use crate::orientation::{
    acc_within, angular_distance, circular_gaussian_target, Angle, OrientationDistribution, OrientationError,
    DEFAULT_TARGET_SIGMA,
};
use crate::pipeline::{process_frame, DetectionFrame, PipelineConfig, PipelineError, PoseEstimate};
use crate::validate::{ensure, ValidationError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("frame {frame_id} out of range (frame_count = {frame_count})")]
    FrameOutOfRange { frame_id: u64, frame_count: u64 },
    #[error("scenario and pipeline disagree on {0}")]
    Inconsistent(&'static str),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Trajectory knot; `theta` in degrees, `t` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Axis-aligned image rectangle, active on frames
/// `start_frame..=end_frame`, drifting by `velocity` pixels per frame from
/// `start_frame` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occluder {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
    #[serde(default)]
    pub start_frame: u64,
    #[serde(default)]
    pub end_frame: Option<u64>,
    #[serde(default)]
    pub velocity: [f64; 2],
}

impl Occluder {
    pub fn covers(&self, frame_id: u64, u: f64, v: f64) -> bool {
        if frame_id < self.start_frame || self.end_frame.is_some_and(|e| frame_id > e) {
            return false;
        }
        let dt = (frame_id - self.start_frame) as f64;
        let (du, dv) = (self.velocity[0] * dt, self.velocity[1] * dt);
        (self.u_min + du..=self.u_max + du).contains(&u) && (self.v_min + dv..=self.v_max + dv).contains(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrientationNoise {
    /// Standard deviation of the target center's jitter, degrees.
    #[serde(default)]
    pub mu_jitter_sigma: f64,
    /// Probability mass spread uniformly over all bins.
    #[serde(default)]
    pub uniform_floor: f64,
}

/// Sparse gross keypoint errors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutlierNoise {
    /// Per-keypoint probability of a gross error.
    #[serde(default)]
    pub rate: f64,
    /// Displacement of a gross error, pixels, in a uniformly random direction.
    #[serde(default)]
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub camera: CameraModel,
    #[serde(default)]
    pub model: TrolleyModel,
    pub trajectory: Vec<Waypoint>,
    #[serde(default)]
    pub occluders: Vec<Occluder>,
    #[serde(default)]
    pub pixel_noise_sigma: f64,
    #[serde(default)]
    pub orientation_noise: OrientationNoise,
    #[serde(default)]
    pub outliers: OutlierNoise,
    #[serde(default = "default_target_sigma")]
    pub target_sigma: f64,
    #[serde(default = "default_bins")]
    pub bin_count: usize,
    #[serde(default)]
    pub rng_seed: u64,
    pub frame_count: u64,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    /// Hide keypoints on the far side of the trolley body.
    #[serde(default)]
    pub self_occlusion: bool,
}

fn default_target_sigma() -> f64 {
    DEFAULT_TARGET_SIGMA
}

fn default_bins() -> usize {
    360
}

fn default_frame_rate() -> f64 {
    10.0
}

impl ScenarioConfig {
    /// A trolley standing still at ground position `(x, y)` with heading
    /// `theta` degrees.
    pub fn stationary(camera: CameraModel, x: f64, y: f64, theta: f64, frame_count: u64) -> Self {
        Self {
            name: String::new(),
            camera,
            model: TrolleyModel::default(),
            trajectory: vec![Waypoint { t: 0.0, x, y, theta }],
            occluders: Vec::new(),
            pixel_noise_sigma: 0.0,
            orientation_noise: OrientationNoise::default(),
            outliers: OutlierNoise::default(),
            target_sigma: DEFAULT_TARGET_SIGMA,
            bin_count: 360,
            rng_seed: 0,
            frame_count,
            frame_rate: 10.0,
            self_occlusion: false,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.camera.validate()?;
        self.model.validate()?;
        self.model.validate_with(&self.camera)?;
        ensure(!self.trajectory.is_empty(), "trajectory", "needs at least one waypoint")?;
        for (i, w) in self.trajectory.iter().enumerate() {
            ensure(
                w.t.is_finite() && w.x.is_finite() && w.y.is_finite() && w.theta.is_finite(),
                format!("trajectory[{i}]"),
                "values must be finite",
            )?;
            if i > 0 {
                ensure(
                    w.t > self.trajectory[i - 1].t,
                    format!("trajectory[{i}].t"),
                    "waypoint times must be strictly increasing",
                )?;
            }
        }
        for (i, o) in self.occluders.iter().enumerate() {
            ensure(
                o.u_min <= o.u_max && o.v_min <= o.v_max,
                format!("occluders[{i}]"),
                "min corner must not exceed max corner",
            )?;
            ensure(
                o.end_frame.is_none_or(|e| e >= o.start_frame),
                format!("occluders[{i}].end_frame"),
                "must be >= start_frame",
            )?;
        }
        ensure(
            self.pixel_noise_sigma.is_finite() && self.pixel_noise_sigma >= 0.0,
            "pixel_noise_sigma",
            "must be >= 0",
        )?;
        ensure(
            self.orientation_noise.mu_jitter_sigma.is_finite() && self.orientation_noise.mu_jitter_sigma >= 0.0,
            "orientation_noise.mu_jitter_sigma",
            "must be >= 0",
        )?;
        ensure(
            (0.0..1.0).contains(&self.orientation_noise.uniform_floor),
            "orientation_noise.uniform_floor",
            "must be in [0, 1)",
        )?;
        ensure(
            (0.0..=1.0).contains(&self.outliers.rate),
            "outliers.rate",
            "must be in [0, 1]",
        )?;
        ensure(
            self.outliers.magnitude.is_finite() && self.outliers.magnitude >= 0.0,
            "outliers.magnitude",
            "must be >= 0",
        )?;
        ensure(
            self.target_sigma.is_finite() && self.target_sigma > 0.0,
            "target_sigma",
            "must be > 0",
        )?;
        ensure(self.bin_count >= 2, "bin_count", "must be >= 2")?;
        ensure(self.frame_count >= 1, "frame_count", "must be >= 1")?;
        ensure(
            self.frame_rate.is_finite() && self.frame_rate > 0.0,
            "frame_rate",
            "must be > 0",
        )
    }

    /// Ground-truth pose at time `t`, linear in position and along the
    /// shorter arc in heading, held constant outside the waypoint span.
    pub fn pose_at(&self, t: f64) -> PoseObservation {
        let w = &self.trajectory;
        let first = w[0];
        let last = w[w.len() - 1];
        if t <= first.t {
            return PoseObservation::new(first.x, first.y, first.theta);
        }
        if t >= last.t {
            return PoseObservation::new(last.x, last.y, last.theta);
        }
        let k = w.partition_point(|p| p.t <= t);
        let (a, b) = (w[k - 1], w[k]);
        let s = (t - a.t) / (b.t - a.t);
        let dtheta = Angle::from_degrees(b.theta).signed_difference(Angle::from_degrees(a.theta));
        PoseObservation::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), a.theta + s * dtheta)
    }

    fn frame_rng(&self, frame_id: u64) -> ChaCha8Rng {
        keyed_rng(self.rng_seed, frame_id)
    }
}

/// Independent random stream for `(seed, key)`.
pub fn keyed_rng(seed: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

/// Draws a noisy orientation distribution for the true heading `theta`.
///
/// Always consumes exactly one normal variate, whatever the noise settings.
pub fn synthesize_orientation<R: Rng>(
    rng: &mut R,
    theta: Angle,
    noise: &OrientationNoise,
    target_sigma: f64,
    n: usize,
) -> Result<OrientationDistribution, OrientationError> {
    let z: f64 = rng.sample(StandardNormal);
    let mu = Angle::from_degrees(theta.degrees() + z * noise.mu_jitter_sigma);
    let target = circular_gaussian_target(mu, target_sigma, n)?;
    if noise.uniform_floor > 0.0 {
        target.with_uniform_floor(noise.uniform_floor)
    } else {
        Ok(target)
    }
}

/// Camera-frame positions of the model keypoints for a ground pose.
pub fn place_keypoints(
    camera: &CameraModel,
    model: &TrolleyModel,
    pose: &PoseObservation,
) -> [crate::geometry::Point3; KEYPOINT_COUNT] {
    let heading = pose.theta.radians();
    std::array::from_fn(|i| {
        let k = model.keypoints[i];
        let (a, b) = k.rotated_planar(heading);
        camera.from_ground(pose.x + a, pose.y + b, k.height)
    })
}

/// True when the keypoint's outward direction from the trolley center faces
/// away from the camera by more than 90°.
fn self_occluded(model: &TrolleyModel, pose: &PoseObservation, index: usize) -> bool {
    let (a, b) = model.keypoints[index].rotated_planar(pose.theta.radians());
    if a == 0.0 && b == 0.0 {
        return false;
    }
    let to_camera = (-(pose.x + a), -(pose.y + b));
    a * to_camera.0 + b * to_camera.1 < 0.0
}

/// Ground truth and synthetic detections for one frame.
pub fn generate_frame(config: &ScenarioConfig, frame_id: u64) -> Result<(PoseObservation, DetectionFrame), SimError> {
    if frame_id >= config.frame_count {
        return Err(SimError::FrameOutOfRange {
            frame_id,
            frame_count: config.frame_count,
        });
    }
    let t = frame_id as f64 / config.frame_rate;
    let truth = config.pose_at(t);
    let camera = &config.camera;
    let points = place_keypoints(camera, &config.model, &truth);
    let mut rng = config.frame_rng(frame_id);

    let mut keypoints = [ImageKeypoint::hidden(0); KEYPOINT_COUNT];
    for (i, slot) in keypoints.iter_mut().enumerate() {
        // fixed draw order per keypoint, regardless of visibility
        let nu: f64 = rng.sample(StandardNormal);
        let nv: f64 = rng.sample(StandardNormal);
        let gross: f64 = rng.random();
        let dir: f64 = rng.random::<f64>() * std::f64::consts::TAU;

        let mut kp = match camera.project(i, points[i]) {
            Ok(kp) => kp,
            Err(_) => ImageKeypoint::hidden(i),
        };
        if kp.visible && config.self_occlusion && self_occluded(&config.model, &truth, i) {
            kp.visible = false;
        }
        if kp.visible && config.occluders.iter().any(|o| o.covers(frame_id, kp.u, kp.v)) {
            kp.visible = false;
        }
        if kp.visible {
            kp.u += nu * config.pixel_noise_sigma;
            kp.v += nv * config.pixel_noise_sigma;
            if gross < config.outliers.rate {
                kp.u += dir.cos() * config.outliers.magnitude;
                kp.v += dir.sin() * config.outliers.magnitude;
            }
            kp.visible = camera.contains(kp.u, kp.v);
        }
        *slot = kp;
    }

    let orientation = synthesize_orientation(
        &mut rng,
        truth.theta,
        &config.orientation_noise,
        config.target_sigma,
        config.bin_count,
    )
    .expect("validated scenario yields a valid orientation target");

    Ok((
        truth,
        DetectionFrame {
            frame_id,
            timestamp: Some(t),
            keypoints,
            orientation,
        },
    ))
}

/// Absolute errors of an estimate against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseErrors {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl PoseErrors {
    pub fn between(estimate: &PoseObservation, truth: &PoseObservation) -> Self {
        Self {
            x: (estimate.x - truth.x).abs(),
            y: (estimate.y - truth.y).abs(),
            theta: angular_distance(estimate.theta, truth.theta),
        }
    }

    pub fn position(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub truth: PoseObservation,
    pub detection: DetectionFrame,
    /// Absent only for frames before the first usable observation.
    pub estimate: Option<PoseEstimate>,
}

impl FrameRecord {
    pub fn visible_keypoints(&self) -> usize {
        self.detection.keypoints.iter().filter(|k| k.visible).count()
    }

    pub fn degraded(&self) -> bool {
        self.estimate.is_none_or(|e| e.degraded)
    }

    /// Errors of the filtered estimate.
    pub fn errors(&self) -> Option<PoseErrors> {
        self.estimate.map(|e| PoseErrors::between(&e.pose(), &self.truth))
    }

    /// Errors of this frame's unfiltered observation.
    pub fn raw_errors(&self) -> Option<PoseErrors> {
        self.estimate
            .and_then(|e| e.raw)
            .map(|r| PoseErrors::between(&r, &self.truth))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComponentStats {
    pub mean: f64,
    pub std: f64,
}

/// Streaming mean and population standard deviation.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn stats(&self) -> ComponentStats {
        if self.n == 0 {
            return ComponentStats::default();
        }
        ComponentStats {
            mean: self.mean,
            std: (self.m2 / self.n as f64).max(0.0).sqrt(),
        }
    }
}

/// Per-scenario error summary. Error statistics cover non-degraded frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub condition: String,
    pub frames: u64,
    pub valid_frames: u64,
    pub degraded_frames: u64,
    pub lost_frames: u64,
    pub success_rate: f64,
    pub x: ComponentStats,
    pub y: ComponentStats,
    pub theta: ComponentStats,
    pub position: ComponentStats,
    /// Same statistics for the unfiltered per-frame positions.
    pub raw_position: ComponentStats,
    pub ade: f64,
    pub acc_5: f64,
    pub acc_15: f64,
    pub acc_30: f64,
}

#[derive(Debug, Clone, Default)]
struct SummaryAccumulator {
    frames: u64,
    degraded: u64,
    lost: u64,
    x: Welford,
    y: Welford,
    theta: Welford,
    position: Welford,
    raw_position: Welford,
    within: [u64; 3],
}

impl SummaryAccumulator {
    fn push(&mut self, record: &FrameRecord) {
        self.frames += 1;
        if record.estimate.is_some_and(|e| e.lost) {
            self.lost += 1;
        }
        if record.degraded() {
            self.degraded += 1;
            return;
        }
        let e = record.errors().expect("non-degraded frames carry an estimate");
        self.x.push(e.x);
        self.y.push(e.y);
        self.theta.push(e.theta);
        self.position.push(e.position());
        if let Some(r) = record.raw_errors() {
            self.raw_position.push(r.position());
        }
        for (count, threshold) in self.within.iter_mut().zip([5.0, 15.0, 30.0]) {
            if e.theta <= threshold {
                *count += 1;
            }
        }
    }

    fn finish(&self, condition: &str) -> SummaryStats {
        let valid = self.frames - self.degraded;
        let rate = |k: u64| if valid == 0 { 0.0 } else { k as f64 / valid as f64 };
        SummaryStats {
            condition: condition.to_string(),
            frames: self.frames,
            valid_frames: valid,
            degraded_frames: self.degraded,
            lost_frames: self.lost,
            success_rate: if self.frames == 0 {
                0.0
            } else {
                valid as f64 / self.frames as f64
            },
            x: self.x.stats(),
            y: self.y.stats(),
            theta: self.theta.stats(),
            position: self.position.stats(),
            raw_position: self.raw_position.stats(),
            ade: self.theta.stats().mean,
            acc_5: rate(self.within[0]),
            acc_15: rate(self.within[1]),
            acc_30: rate(self.within[2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub records: Vec<FrameRecord>,
    pub summary: SummaryStats,
}

/// Generates every frame and runs it through the pipeline in order.
///
/// With `strict`, a fully occluded first frame aborts the run; otherwise such
/// frames are recorded without an estimate.
pub fn run_scenario(
    scenario: &ScenarioConfig,
    pipeline: &PipelineConfig,
    strict: bool,
) -> Result<ScenarioRun, SimError> {
    scenario.validate()?;
    pipeline.validate()?;
    if scenario.camera != pipeline.camera {
        return Err(SimError::Inconsistent("camera"));
    }
    if scenario.model != pipeline.model {
        return Err(SimError::Inconsistent("model"));
    }
    if scenario.bin_count != pipeline.bin_count {
        return Err(SimError::Inconsistent("bin_count"));
    }

    let mut state = pipeline.initial_state();
    let mut acc = SummaryAccumulator::default();
    let mut records = Vec::with_capacity(scenario.frame_count as usize);
    for frame_id in 0..scenario.frame_count {
        let (truth, detection) = generate_frame(scenario, frame_id)?;
        let estimate = match process_frame(pipeline, &mut state, &detection) {
            Ok(e) => Some(e),
            Err(PipelineError::ColdStartNoObservation(_)) if !strict => None,
            Err(e) => return Err(e.into()),
        };
        let record = FrameRecord {
            frame_id,
            truth,
            detection,
            estimate,
        };
        acc.push(&record);
        records.push(record);
    }
    let summary = acc.finish(&scenario.name);
    log::debug!(
        "scenario '{}': {} frames, {} degraded",
        scenario.name,
        summary.frames,
        summary.degraded_frames
    );
    Ok(ScenarioRun { records, summary })
}

/// Settings for sweeping the orientation channel over bin counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub bin_counts: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_target_sigma")]
    pub target_sigma: f64,
    #[serde(default)]
    pub orientation_noise: OrientationNoise,
}

fn default_samples() -> u64 {
    10_000
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(!self.bin_counts.is_empty(), "bin_counts", "must not be empty")?;
        for (i, n) in self.bin_counts.iter().enumerate() {
            ensure(*n >= 2, format!("bin_counts[{i}]"), "must be >= 2")?;
        }
        ensure(self.samples >= 1, "samples", "must be >= 1")?;
        ensure(
            self.target_sigma.is_finite() && self.target_sigma > 0.0,
            "target_sigma",
            "must be > 0",
        )?;
        ensure(
            self.orientation_noise.mu_jitter_sigma.is_finite() && self.orientation_noise.mu_jitter_sigma >= 0.0,
            "orientation_noise.mu_jitter_sigma",
            "must be >= 0",
        )?;
        ensure(
            (0.0..1.0).contains(&self.orientation_noise.uniform_floor),
            "orientation_noise.uniform_floor",
            "must be in [0, 1)",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub bins: usize,
    pub ade: f64,
    pub acc_5: f64,
    pub acc_15: f64,
    pub acc_30: f64,
}

/// Orientation accuracy per bin count over uniformly random headings.
///
/// Sample `i` uses the same heading and jitter draw for every bin count.
pub fn sweep_bins(config: &SweepConfig) -> Result<Vec<SweepRow>, ValidationError> {
    config.validate()?;
    let rows = config
        .bin_counts
        .iter()
        .map(|&n| {
            let (predictions, truths): (Vec<Angle>, Vec<Angle>) = (0..config.samples)
                .map(|i| {
                    let mut rng = keyed_rng(config.rng_seed, i);
                    let truth = Angle::from_degrees(rng.random_range(0.0..360.0));
                    let dist =
                        synthesize_orientation(&mut rng, truth, &config.orientation_noise, config.target_sigma, n)
                            .expect("validated sweep yields a valid target");
                    (dist.decode(), truth)
                })
                .unzip();
            let acc = |t| acc_within(&predictions, &truths, t).expect("non-empty, equal lengths");
            SweepRow {
                bins: n,
                ade: crate::orientation::ade(&predictions, &truths).expect("non-empty, equal lengths"),
                acc_5: acc(5.0),
                acc_15: acc(15.0),
                acc_30: acc(30.0),
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CenterMode;

    fn camera() -> CameraModel {
        CameraModel::level(500.0, 500.0, 320.0, 240.0, 1.2, 640.0, 480.0)
    }

    fn pipeline_for(s: &ScenarioConfig) -> PipelineConfig {
        PipelineConfig::new(s.camera.clone(), s.model.clone(), s.bin_count)
    }

    #[test]
    fn noiseless_frame_is_exact_projection() {
        let s = ScenarioConfig::stationary(camera(), 0.0, 6.0, 0.0, 1);
        let (truth, frame) = generate_frame(&s, 0).unwrap();
        assert_eq!(truth, PoseObservation::new(0.0, 6.0, 0.0));
        let points = place_keypoints(&s.camera, &s.model, &truth);
        for (kp, p) in frame.keypoints.iter().zip(points) {
            let exact = s.camera.project(kp.index, p).unwrap();
            assert!(kp.visible);
            assert_eq!((kp.u, kp.v), (exact.u, exact.v));
        }
        assert_eq!(frame.orientation.decode().degrees(), 0.0);
    }

    #[test]
    fn full_image_occluder_hides_everything() {
        let mut s = ScenarioConfig::stationary(camera(), 0.0, 6.0, 45.0, 1);
        s.occluders.push(Occluder {
            u_min: 0.0,
            v_min: 0.0,
            u_max: 640.0,
            v_max: 480.0,
            start_frame: 0,
            end_frame: None,
            velocity: [0.0, 0.0],
        });
        let (_, frame) = generate_frame(&s, 0).unwrap();
        assert!(frame.keypoints.iter().all(|k| !k.visible));
    }

    #[test]
    fn frames_are_reproducible_in_isolation() {
        let mut s = ScenarioConfig::stationary(camera(), 0.5, 5.0, 80.0, 20);
        s.rng_seed = 42;
        s.pixel_noise_sigma = 1.5;
        s.orientation_noise = OrientationNoise {
            mu_jitter_sigma: 3.0,
            uniform_floor: 0.2,
        };
        let a = generate_frame(&s, 7).unwrap();
        for k in (0..20).rev() {
            generate_frame(&s, k).unwrap();
        }
        let b = generate_frame(&s, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.1.keypoints, generate_frame(&s, 8).unwrap().1.keypoints);
        assert!(matches!(
            generate_frame(&s, 20),
            Err(SimError::FrameOutOfRange {
                frame_id: 20,
                frame_count: 20
            })
        ));
    }

    #[test]
    fn trajectory_interpolation() {
        let mut s = ScenarioConfig::stationary(camera(), 0.0, 2.0, 350.0, 10);
        s.trajectory.push(Waypoint {
            t: 1.0,
            x: 1.0,
            y: 4.0,
            theta: 10.0,
        });
        let mid = s.pose_at(0.5);
        assert!((mid.x - 0.5).abs() < 1e-12 && (mid.y - 3.0).abs() < 1e-12);
        assert!(angular_distance(mid.theta, Angle::from_degrees(0.0)) < 1e-9);
        assert_eq!(s.pose_at(-1.0), PoseObservation::new(0.0, 2.0, 350.0));
        assert_eq!(s.pose_at(5.0), PoseObservation::new(1.0, 4.0, 10.0));
    }

    #[test]
    fn self_occlusion_hides_far_side() {
        // trolley broadside to the camera, heading along +x
        let mut s = ScenarioConfig::stationary(camera(), 0.0, 6.0, 0.0, 1);
        s.self_occlusion = true;
        let (_, frame) = generate_frame(&s, 0).unwrap();
        let vis: Vec<bool> = frame.keypoints.iter().map(|k| k.visible).collect();
        // +offset_y side faces away (towards +y, i.e. away from the camera)
        assert_eq!(vis, vec![false, true, false, true, false, true]);
    }

    #[test]
    fn moving_occluder_drifts() {
        let o = Occluder {
            u_min: 0.0,
            v_min: 0.0,
            u_max: 10.0,
            v_max: 10.0,
            start_frame: 2,
            end_frame: Some(5),
            velocity: [10.0, 0.0],
        };
        assert!(!o.covers(1, 5.0, 5.0));
        assert!(o.covers(2, 5.0, 5.0));
        assert!(!o.covers(3, 5.0, 5.0));
        assert!(o.covers(3, 15.0, 5.0));
        assert!(!o.covers(6, 45.0, 5.0));
    }

    #[test]
    fn noiseless_run_is_exact() {
        let mut s = ScenarioConfig::stationary(camera(), -0.4, 4.0, 120.0, 1);
        s.trajectory.push(Waypoint {
            t: 4.0,
            x: 0.6,
            y: 7.0,
            theta: 160.0,
        });
        s.frame_count = 100;
        // one degree per frame keeps every heading on a bin center
        s.frame_rate = 10.0;
        let run = run_scenario(&s, &pipeline_for(&s), false).unwrap();
        assert_eq!(run.summary.success_rate, 1.0);
        assert_eq!(run.summary.degraded_frames, 0);
        for r in &run.records {
            let e = r.raw_errors().unwrap();
            assert!(e.x < 1e-9 && e.y < 1e-9, "frame {}", r.frame_id);
        }
    }

    #[test]
    fn summary_matches_independent_pass() {
        let mut s = ScenarioConfig::stationary(camera(), 0.2, 5.0, 33.0, 150);
        s.pixel_noise_sigma = 2.0;
        s.rng_seed = 9;
        s.orientation_noise.mu_jitter_sigma = 5.0;
        s.occluders.push(Occluder {
            u_min: 0.0,
            v_min: 0.0,
            u_max: 640.0,
            v_max: 480.0,
            start_frame: 60,
            end_frame: Some(80),
            velocity: [0.0, 0.0],
        });
        let run = run_scenario(&s, &pipeline_for(&s), false).unwrap();
        let valid: Vec<PoseErrors> = run
            .records
            .iter()
            .filter(|r| !r.degraded())
            .map(|r| r.errors().unwrap())
            .collect();
        let two_pass = |v: Vec<f64>| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt();
            (m, sd)
        };
        let (mx, sx) = two_pass(valid.iter().map(|e| e.x).collect());
        let (mt, st) = two_pass(valid.iter().map(|e| e.theta).collect());
        assert!((mx - run.summary.x.mean).abs() < 1e-12 && (sx - run.summary.x.std).abs() < 1e-12);
        assert!((mt - run.summary.theta.mean).abs() < 1e-12 && (st - run.summary.theta.std).abs() < 1e-12);
        assert_eq!(run.summary.degraded_frames, 21);
        assert_eq!(run.summary.valid_frames as usize, valid.len());
        let acc15 = valid.iter().filter(|e| e.theta <= 15.0).count() as f64 / valid.len() as f64;
        assert!((acc15 - run.summary.acc_15).abs() < 1e-12);
    }

    #[test]
    fn cold_start_policy() {
        let mut s = ScenarioConfig::stationary(camera(), 0.0, 5.0, 0.0, 5);
        s.occluders.push(Occluder {
            u_min: 0.0,
            v_min: 0.0,
            u_max: 640.0,
            v_max: 480.0,
            start_frame: 0,
            end_frame: Some(1),
            velocity: [0.0, 0.0],
        });
        let p = pipeline_for(&s);
        assert!(matches!(
            run_scenario(&s, &p, true),
            Err(SimError::Pipeline(PipelineError::ColdStartNoObservation(0)))
        ));
        let run = run_scenario(&s, &p, false).unwrap();
        assert!(run.records[0].estimate.is_none() && run.records[1].estimate.is_none());
        assert!(run.records[2].estimate.is_some());
        assert_eq!(run.summary.degraded_frames, 2);
    }

    #[test]
    fn inconsistent_configs_rejected() {
        let s = ScenarioConfig::stationary(camera(), 0.0, 5.0, 0.0, 5);
        let mut p = pipeline_for(&s);
        p.bin_count = 72;
        assert_eq!(run_scenario(&s, &p, false), Err(SimError::Inconsistent("bin_count")));
        let mut p = pipeline_for(&s);
        p.center_mode = CenterMode::ComponentWise;
        assert!(run_scenario(&s, &p, false).is_ok());
    }

    #[test]
    fn validation_names_fields() {
        let mut s = ScenarioConfig::stationary(camera(), 0.0, 5.0, 0.0, 5);
        s.pixel_noise_sigma = -1.0;
        assert_eq!(s.validate().unwrap_err().field, "pixel_noise_sigma");
        let mut s = ScenarioConfig::stationary(camera(), 0.0, 5.0, 0.0, 5);
        s.orientation_noise.uniform_floor = 1.0;
        assert_eq!(s.validate().unwrap_err().field, "orientation_noise.uniform_floor");
        let mut s = ScenarioConfig::stationary(camera(), 0.0, 5.0, 0.0, 0);
        assert_eq!(s.validate().unwrap_err().field, "frame_count");
        s.frame_count = 1;
        s.trajectory.clear();
        assert_eq!(s.validate().unwrap_err().field, "trajectory");
    }

    #[test]
    fn sweep_quantization_only() {
        let cfg = SweepConfig {
            bin_counts: vec![72, 360],
            samples: 2000,
            rng_seed: 1,
            target_sigma: DEFAULT_TARGET_SIGMA,
            orientation_noise: OrientationNoise::default(),
        };
        let rows = sweep_bins(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].acc_30, 1.0);
        assert_eq!(rows[0].acc_5, 1.0);
        assert!(rows[1].ade < rows[0].ade);
        assert!(rows.iter().all(|r| r.ade <= 360.0 / r.bins as f64 / 2.0));
        let empty = SweepConfig {
            bin_counts: vec![],
            ..cfg
        };
        assert_eq!(sweep_bins(&empty).unwrap_err().field, "bin_counts");
    }
}
