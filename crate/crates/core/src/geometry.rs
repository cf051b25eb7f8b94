//! Camera model, trolley prior model and ground-plane back-projection.
//!
//! Camera frame: x right, y down, z forward. `ground_normal` points from the
//! ground up towards the camera, so a level camera has normal `[0, -1, 0]` and
//! a point at height `h` above the ground satisfies `n·P = -(λ - h)`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::validate::{ensure, ValidationError};

/// Rays whose component along the ground normal is at most this are treated
/// as parallel to the ground.
pub const RAY_EPSILON: f64 = 1e-6;

/// Tolerance on `‖ground_normal‖ = 1`.
pub const NORMAL_TOLERANCE: f64 = 1e-12;

/// Number of keypoints on the trolley model.
pub const KEYPOINT_COUNT: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("keypoint {0} is not visible")]
    InvisibleKeypoint(usize),
    #[error("keypoint {index} ray is parallel to the ground (|n·ρ| = {dot:e})")]
    DegenerateRay { index: usize, dot: f64 },
    #[error("keypoint {0} lies at camera height")]
    AtCameraHeight(usize),
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("no usable keypoints in frame")]
    NoUsableKeypoints,
}

/// A point or direction in the camera frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Self {
        self * (1.0 / self.norm())
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Pinhole camera with zero skew, mounted at a known height above a planar
/// ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Unit vector in the camera frame pointing away from the ground.
    pub ground_normal: Point3,
    /// Perpendicular distance from the optical center to the ground, meters.
    pub camera_height: f64,
    pub image_width: f64,
    pub image_height: f64,
}

impl CameraModel {
    /// Level camera looking along the ground.
    pub fn level(fx: f64, fy: f64, cx: f64, cy: f64, camera_height: f64, image_width: f64, image_height: f64) -> Self {
        Self {
            fx,
            fy,
            cx,
            cy,
            ground_normal: Point3::new(0.0, -1.0, 0.0),
            camera_height,
            image_width,
            image_height,
        }
    }

    /// Replaces the ground normal with the one seen by a camera pitched down
    /// by `pitch` radians and rolled by `roll` radians about its optical axis.
    pub fn with_tilt(mut self, pitch: f64, roll: f64) -> Self {
        let (sp, cp) = pitch.sin_cos();
        let (sr, cr) = roll.sin_cos();
        // world up expressed in a pitched camera, then rotated about z by roll
        let up = Point3::new(0.0, -cp, -sp);
        self.ground_normal = Point3::new(cr * up.x + sr * up.y, -sr * up.x + cr * up.y, up.z);
        self
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(self.fx.is_finite() && self.fx > 0.0, "camera.fx", "must be > 0")?;
        ensure(self.fy.is_finite() && self.fy > 0.0, "camera.fy", "must be > 0")?;
        ensure(self.cx.is_finite(), "camera.cx", "must be finite")?;
        ensure(self.cy.is_finite(), "camera.cy", "must be finite")?;
        ensure(
            self.camera_height.is_finite() && self.camera_height > 0.0,
            "camera.camera_height",
            "must be > 0",
        )?;
        ensure(
            self.image_width.is_finite() && self.image_width > 0.0,
            "camera.image_width",
            "must be > 0",
        )?;
        ensure(
            self.image_height.is_finite() && self.image_height > 0.0,
            "camera.image_height",
            "must be > 0",
        )?;
        let n = self.ground_normal;
        ensure(
            n.is_finite() && (n.norm() - 1.0).abs() <= NORMAL_TOLERANCE,
            "camera.ground_normal",
            "must be a unit vector (within 1e-12)",
        )?;
        ensure(
            n.z.abs() < 1.0 - 1e-9,
            "camera.ground_normal",
            "optical axis must not be perpendicular to the ground",
        )?;
        Ok(())
    }

    /// Ray `K⁻¹ [u, v, 1]ᵀ` through a pixel.
    pub fn pixel_ray(&self, u: f64, v: f64) -> Point3 {
        Point3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        (0.0..=self.image_width).contains(&u) && (0.0..=self.image_height).contains(&v)
    }

    /// Orthonormal ground-frame axes `(right, forward)` in the camera frame.
    ///
    /// `forward` is the optical axis with the normal component removed and
    /// `right = forward × normal`, so `(right, forward, normal)` is
    /// right-handed with the normal as "up".
    pub fn ground_axes(&self) -> (Point3, Point3) {
        let n = self.ground_normal;
        let z = Point3::new(0.0, 0.0, 1.0);
        let forward = (z - n * n.dot(z)).normalized();
        let right = forward.cross(n);
        (right, forward)
    }

    /// Planar ground-frame coordinates of a camera-frame point.
    pub fn to_ground(&self, p: Point3) -> (f64, f64) {
        let (right, forward) = self.ground_axes();
        (right.dot(p), forward.dot(p))
    }

    /// Camera-frame position of a point at ground coordinates `(x, y)` and
    /// `height` above the ground.
    pub fn from_ground(&self, x: f64, y: f64, height: f64) -> Point3 {
        let (right, forward) = self.ground_axes();
        let n = self.ground_normal;
        right * x + forward * y + n * (height - self.camera_height)
    }

    /// Forward pinhole projection. Visibility reflects image bounds only.
    pub fn project(&self, index: usize, p: Point3) -> Result<ImageKeypoint, GeometryError> {
        if p.z.is_nan() || p.z <= 0.0 {
            return Err(GeometryError::BehindCamera(p.z));
        }
        let u = self.fx * p.x / p.z + self.cx;
        let v = self.fy * p.y / p.z + self.cy;
        Ok(ImageKeypoint {
            index,
            u,
            v,
            visible: self.contains(u, v),
        })
    }

    /// Intersects the pixel ray of `kp` with the plane at `keypoint_height`
    /// above the ground: `X = |λ - ζ| / |n·ρ| · ρ`.
    pub fn backproject(&self, kp: &ImageKeypoint, keypoint_height: f64) -> Result<Point3, GeometryError> {
        if !kp.visible {
            return Err(GeometryError::InvisibleKeypoint(kp.index));
        }
        let ray = self.pixel_ray(kp.u, kp.v);
        let dot = self.ground_normal.dot(ray);
        if dot.abs() <= RAY_EPSILON {
            return Err(GeometryError::DegenerateRay { index: kp.index, dot });
        }
        let drop = (self.camera_height - keypoint_height).abs();
        if drop == 0.0 {
            return Err(GeometryError::AtCameraHeight(kp.index));
        }
        Ok(ray * (drop / dot.abs()))
    }
}

/// One keypoint of the prior model, relative to the trolley's ground-contact
/// center at the reference heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelKeypoint {
    /// Along the trolley's heading axis, meters.
    pub offset_x: f64,
    /// To the left of the heading axis, meters.
    pub offset_y: f64,
    /// Above the ground, meters.
    pub height: f64,
}

impl ModelKeypoint {
    pub const fn new(offset_x: f64, offset_y: f64, height: f64) -> Self {
        Self {
            offset_x,
            offset_y,
            height,
        }
    }

    /// Planar offset rotated by `heading` radians.
    pub fn rotated_planar(&self, heading: f64) -> (f64, f64) {
        let (s, c) = heading.sin_cos();
        (
            c * self.offset_x - s * self.offset_y,
            s * self.offset_x + c * self.offset_y,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrolleyModel {
    pub keypoints: [ModelKeypoint; KEYPOINT_COUNT],
}

impl Default for TrolleyModel {
    /// A generic airport trolley: handle corners, rear wheels, front wheels.
    fn default() -> Self {
        Self {
            keypoints: [
                ModelKeypoint::new(-0.50, 0.28, 0.95),
                ModelKeypoint::new(-0.50, -0.28, 0.95),
                ModelKeypoint::new(-0.40, 0.25, 0.10),
                ModelKeypoint::new(-0.40, -0.25, 0.10),
                ModelKeypoint::new(0.45, 0.22, 0.10),
                ModelKeypoint::new(0.45, -0.22, 0.10),
            ],
        }
    }
}

impl TrolleyModel {
    pub fn validate(&self) -> Result<(), ValidationError> {
        for (i, kp) in self.keypoints.iter().enumerate() {
            ensure(
                kp.offset_x.is_finite() && kp.offset_y.is_finite(),
                format!("model.keypoints[{i}]"),
                "offsets must be finite",
            )?;
            ensure(
                kp.height.is_finite() && kp.height >= 0.0,
                format!("model.keypoints[{i}].height"),
                "must be >= 0",
            )?;
        }
        Ok(())
    }

    /// Checks that the model can be localized by this camera.
    pub fn validate_with(&self, camera: &CameraModel) -> Result<(), ValidationError> {
        ensure(
            self.keypoints.iter().any(|k| k.height < camera.camera_height),
            "model.keypoints",
            "at least one keypoint must lie below camera_height",
        )
    }
}

/// A detected keypoint in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageKeypoint {
    pub index: usize,
    pub u: f64,
    pub v: f64,
    pub visible: bool,
}

impl ImageKeypoint {
    pub fn hidden(index: usize) -> Self {
        Self {
            index,
            u: 0.0,
            v: 0.0,
            visible: false,
        }
    }
}

/// How prior-model offsets are removed from back-projected keypoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMode {
    /// Subtract `(offset_x, offset_y, height)` component-wise from the
    /// camera-frame point, with no rotation.
    ComponentWise,
    /// Rotate the planar offset by the heading, lift it along the ground
    /// normal by the keypoint height, and subtract in the camera frame.
    #[default]
    OrientationCorrected,
}

/// Center estimate from one frame of keypoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterEstimate {
    /// Camera-frame center.
    pub center: Point3,
    /// Ground-frame planar coordinates `(x, y)` of `center`.
    pub ground: (f64, f64),
    /// Keypoints that contributed.
    pub n_used: usize,
    /// Visible keypoints whose pixel lies outside the image.
    pub out_of_bounds: usize,
}

/// Offset of a model keypoint from the center, in the camera frame.
pub fn model_offset(camera: &CameraModel, kp: &ModelKeypoint, mode: CenterMode, heading: Option<f64>) -> Point3 {
    match (mode, heading) {
        (CenterMode::OrientationCorrected, Some(heading)) => {
            let (right, forward) = camera.ground_axes();
            let (a, b) = kp.rotated_planar(heading);
            right * a + forward * b + camera.ground_normal * kp.height
        }
        _ => Point3::new(kp.offset_x, kp.offset_y, kp.height),
    }
}

/// Averages `X_i - Y_i` over the given `(point, model keypoint)` pairs.
pub fn average_center(
    camera: &CameraModel,
    pairs: &[(Point3, ModelKeypoint)],
    mode: CenterMode,
    heading: Option<f64>,
) -> Result<Point3, GeometryError> {
    if pairs.is_empty() {
        return Err(GeometryError::NoUsableKeypoints);
    }
    let sum = pairs.iter().fold(Point3::default(), |acc, (x, y)| {
        acc + (*x - model_offset(camera, y, mode, heading))
    });
    Ok(sum * (1.0 / pairs.len() as f64))
}

/// Estimates the trolley center from visible keypoints.
///
/// `heading` is in radians in the ground frame. Without it (or in
/// [`CenterMode::ComponentWise`]) offsets are subtracted unrotated.
/// Degenerate keypoints are skipped.
pub fn estimate_center(
    camera: &CameraModel,
    model: &TrolleyModel,
    observations: &[ImageKeypoint],
    mode: CenterMode,
    heading: Option<f64>,
) -> Result<CenterEstimate, GeometryError> {
    let mut pairs = Vec::with_capacity(observations.len());
    let mut out_of_bounds = 0;
    for kp in observations.iter().filter(|k| k.visible) {
        let Some(prior) = model.keypoints.get(kp.index) else {
            continue;
        };
        if !camera.contains(kp.u, kp.v) {
            out_of_bounds += 1;
        }
        match camera.backproject(kp, prior.height) {
            Ok(x) => pairs.push((x, *prior)),
            Err(e) => log::trace!("skipping keypoint: {e}"),
        }
    }
    let center = average_center(camera, &pairs, mode, heading)?;
    Ok(CenterEstimate {
        center,
        ground: camera.to_ground(center),
        n_used: pairs.len(),
        out_of_bounds,
    })
}
