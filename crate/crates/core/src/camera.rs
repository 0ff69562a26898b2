//! Projection models and the pixel/physical unit conversion.
//!
//! Screen coordinates are continuous pixel coordinates: pixel `(x, y)` spans
//! `[x, x+1) × [y, y+1)`. Perspective intrinsics act on the same coordinates,
//! so the principal point must be given in that frame.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Orthographic,
    /// Pinhole camera under the weak-perspective assumption: tangents are
    /// scaled by the mean camera-to-object distance.
    Perspective {
        intrinsics: Matrix3<f64>,
        inverse: Matrix3<f64>,
        mean_distance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    projection: Projection,
    /// Physical length covered by one pixel at the object.
    pixel_pitch: f64,
}

impl CameraModel {
    pub fn orthographic(pixel_pitch: f64) -> Result<Self> {
        if !(pixel_pitch > 0.0 && pixel_pitch.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pixel pitch must be positive, got {pixel_pitch}"
            )));
        }
        Ok(CameraModel {
            projection: Projection::Orthographic,
            pixel_pitch,
        })
    }

    /// A pinhole camera. The pixel pitch is derived as the mean distance over
    /// the focal length (geometric mean of `fx` and `fy`).
    pub fn perspective(intrinsics: Matrix3<f64>, mean_distance: f64) -> Result<Self> {
        if !(mean_distance > 0.0 && mean_distance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mean distance must be positive, got {mean_distance}"
            )));
        }
        let inverse = intrinsics
            .try_inverse()
            .filter(|m| m.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::InvalidParameter("intrinsics are not invertible".into()))?;
        let focal = (intrinsics[(0, 0)] * intrinsics[(1, 1)]).abs().sqrt();
        if focal <= 0.0 {
            return Err(Error::InvalidParameter(
                "focal length must be non-zero".into(),
            ));
        }
        Ok(CameraModel {
            projection: Projection::Perspective {
                intrinsics,
                inverse,
                mean_distance,
            },
            pixel_pitch: mean_distance / focal,
        })
    }

    /// Pinhole camera from `fx fy cx cy`.
    pub fn from_focal(fx: f64, fy: f64, cx: f64, cy: f64, mean_distance: f64) -> Result<Self> {
        CameraModel::perspective(
            Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0),
            mean_distance,
        )
    }

    /// Pinhole camera from nine row-major numbers.
    pub fn from_row_major(values: &[f64], mean_distance: f64) -> Result<Self> {
        if values.len() != 9 {
            return Err(Error::InvalidParameter(format!(
                "intrinsics need 9 values, got {}",
                values.len()
            )));
        }
        CameraModel::perspective(Matrix3::from_row_slice(values), mean_distance)
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn is_perspective(&self) -> bool {
        matches!(self.projection, Projection::Perspective { .. })
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn mean_distance(&self) -> Option<f64> {
        match self.projection {
            Projection::Orthographic => None,
            Projection::Perspective { mean_distance, .. } => Some(mean_distance),
        }
    }

    /// Viewing ray through screen point `u`: `e_z` for orthographic cameras,
    /// the unnormalized `C⁻¹ (u, v, 1)` for perspective ones.
    pub fn ray(&self, u: Vector2<f64>) -> Vector3<f64> {
        match &self.projection {
            Projection::Orthographic => Vector3::z(),
            Projection::Perspective { inverse, .. } => inverse * Vector3::new(u.x, u.y, 1.0),
        }
    }

    /// Screen-space derivatives `(∂u r, ∂v r)` of the ray; zero for
    /// orthographic cameras.
    pub fn ray_derivatives(&self) -> (Vector3<f64>, Vector3<f64>) {
        match &self.projection {
            Projection::Orthographic => (Vector3::zeros(), Vector3::zeros()),
            Projection::Perspective { inverse, .. } => (
                inverse.column(0).into_owned(),
                inverse.column(1).into_owned(),
            ),
        }
    }

    pub fn pixel_to_physical(&self, length_px: f64) -> f64 {
        length_px * self.pixel_pitch
    }

    pub fn physical_to_pixel(&self, length: f64) -> f64 {
        length / self.pixel_pitch
    }
}
