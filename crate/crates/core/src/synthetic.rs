//! Analytic scenes with exact normals and depth.
//!
//! Orthographic scenes are height fields over pixel centers, given in pixel
//! units and scaled by the pixel pitch in the depth map. Perspective scenes
//! are placed in camera space at the camera's mean distance; their normals
//! are flipped to face `+z` like the orthographic ones.

use nalgebra::{Vector2, Vector3};

use crate::camera::{CameraModel, Projection};
use crate::error::{Error, Result};
use crate::image_io::{DepthMap, NormalMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CylinderAxis {
    /// Axis along image rows.
    Horizontal,
    /// Axis along image columns.
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneKind {
    /// `h = slope_u · u + slope_v · v`.
    Plane { slope_u: f64, slope_v: f64 },
    /// Hemisphere over a disk. `center` defaults to the image center.
    Sphere {
        radius: f64,
        center: Option<Vector2<f64>>,
    },
    /// Half cylinder through the image center.
    Cylinder { radius: f64, axis: CylinderAxis },
    /// Two planes meeting at a vertical crease at `u = crease` (default: the
    /// image center), with height zero on the crease.
    Wedge {
        left_slope: f64,
        right_slope: f64,
        crease: Option<f64>,
    },
    /// `h = A · sin(2πu/P) · sin(2πv/P)`.
    Sinusoid { amplitude: f64, period: f64 },
}

impl SceneKind {
    /// The same shape with every length multiplied by `factor`, for
    /// rendering it at `factor` times the resolution.
    pub fn scaled(self, factor: f64) -> SceneKind {
        match self {
            SceneKind::Plane { .. } => self,
            SceneKind::Sphere { radius, center } => SceneKind::Sphere {
                radius: radius * factor,
                center: center.map(|c| c * factor),
            },
            SceneKind::Cylinder { radius, axis } => SceneKind::Cylinder {
                radius: radius * factor,
                axis,
            },
            SceneKind::Wedge {
                left_slope,
                right_slope,
                crease,
            } => SceneKind::Wedge {
                left_slope,
                right_slope,
                crease: crease.map(|c| c * factor),
            },
            SceneKind::Sinusoid { amplitude, period } => SceneKind::Sinusoid {
                amplitude: amplitude * factor,
                period: period * factor,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticScene {
    pub kind: SceneKind,
    pub width: usize,
    pub height: usize,
    pub camera: CameraModel,
}

/// Height and gradient of an orthographic scene at a pixel center, or `None`
/// outside its support.
type HeightSample = Option<(f64, Vector2<f64>)>;

impl SyntheticScene {
    pub fn new(kind: SceneKind, width: usize, height: usize, camera: CameraModel) -> Self {
        SyntheticScene {
            kind,
            width,
            height,
            camera,
        }
    }

    /// Orthographic scene with unit pixel pitch.
    pub fn orthographic(kind: SceneKind, width: usize, height: usize) -> Self {
        let camera = CameraModel::orthographic(1.0).expect("unit pitch is valid");
        SyntheticScene::new(kind, width, height, camera)
    }

    fn center(&self) -> Vector2<f64> {
        Vector2::new(self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("image must not be empty");
        }
        match self.kind {
            SceneKind::Plane { slope_u, slope_v }
                if !(slope_u.is_finite() && slope_v.is_finite()) =>
            {
                bad("plane slopes must be finite")
            }
            SceneKind::Sphere { radius, .. } | SceneKind::Cylinder { radius, .. }
                if !(radius > 0.0) =>
            {
                bad("radius must be positive")
            }
            SceneKind::Wedge {
                left_slope,
                right_slope,
                ..
            } if !(left_slope.abs() < 10.0 && right_slope.abs() < 10.0) => {
                bad("wedge slopes must be smaller than 10 in magnitude")
            }
            SceneKind::Sinusoid { amplitude, period }
                if !(period > 2.0 && amplitude.is_finite()) =>
            {
                bad("sinusoid period must exceed 2 pixels")
            }
            _ => Ok(()),
        }
    }

    fn height_at(&self, u: Vector2<f64>) -> HeightSample {
        match self.kind {
            SceneKind::Plane { slope_u, slope_v } => Some((
                slope_u * u.x + slope_v * u.y,
                Vector2::new(slope_u, slope_v),
            )),
            SceneKind::Sphere { radius, center } => {
                let d = u - center.unwrap_or_else(|| self.center());
                let h2 = radius * radius - d.norm_squared();
                (h2 > 0.0).then(|| {
                    let h = h2.sqrt();
                    (h, -d / h)
                })
            }
            SceneKind::Cylinder { radius, axis } => {
                let c = self.center();
                let (d, dir) = match axis {
                    CylinderAxis::Vertical => (u.x - c.x, Vector2::x()),
                    CylinderAxis::Horizontal => (u.y - c.y, Vector2::y()),
                };
                let h2 = radius * radius - d * d;
                (h2 > 0.0).then(|| {
                    let h = h2.sqrt();
                    (h, dir * (-d / h))
                })
            }
            SceneKind::Wedge {
                left_slope,
                right_slope,
                crease,
            } => {
                let c = crease.unwrap_or(self.width as f64 / 2.0);
                let s = if u.x < c { left_slope } else { right_slope };
                Some((s * (u.x - c), Vector2::new(s, 0.0)))
            }
            SceneKind::Sinusoid { amplitude, period } => {
                let k = 2.0 * std::f64::consts::PI / period;
                let (sx, cx) = (k * u.x).sin_cos();
                let (sy, cy) = (k * u.y).sin_cos();
                Some((
                    amplitude * sx * sy,
                    Vector2::new(amplitude * k * cx * sy, amplitude * k * sx * cy),
                ))
            }
        }
    }

    /// Camera-space intersection point and `+z`-facing unit normal for a
    /// perspective scene.
    fn hit(
        &self,
        u: Vector2<f64>,
        mean_distance: f64,
    ) -> Result<Option<(Vector3<f64>, Vector3<f64>)>> {
        let ray = self.camera.ray(u);
        match self.kind {
            SceneKind::Sphere { radius, center } => {
                let c = self.camera.ray(center.unwrap_or_else(|| self.center()));
                let c = c / c.z * mean_distance;
                let a = ray.norm_squared();
                let b = ray.dot(&c);
                let disc = b * b - a * (c.norm_squared() - radius * radius);
                if disc <= 0.0 {
                    return Ok(None);
                }
                let t = (b - disc.sqrt()) / a;
                if t <= 0.0 {
                    return Ok(None);
                }
                let p = ray * t;
                Ok(Some((p, (c - p) / radius)))
            }
            SceneKind::Plane { slope_u, slope_v } => {
                let n = Vector3::new(-slope_u, -slope_v, 1.0).normalize();
                let anchor = self.camera.ray(self.center());
                let anchor = anchor / anchor.z * mean_distance;
                let denom = n.dot(&ray);
                let t = n.dot(&anchor) / denom;
                if !(denom.abs() > 1e-12 && t > 0.0) {
                    return Ok(None);
                }
                Ok(Some((ray * t, n)))
            }
            _ => Err(Error::InvalidParameter(
                "perspective rendering supports spheres and planes only".into(),
            )),
        }
    }

    /// Analytic normal map and depth map. Pixels whose normal is too
    /// grazing to keep are background in both.
    pub fn render(&self) -> Result<(NormalMap, DepthMap)> {
        self.validate()?;
        let (w, h) = (self.width, self.height);
        let mut depth = DepthMap::empty(w, h);
        let pitch = self.camera.pixel_pitch();
        let normals = match *self.camera.projection() {
            Projection::Orthographic => {
                let (nm, _) = NormalMap::from_fn(w, h, |x, y| {
                    let u = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
                    let (height, grad) = self.height_at(u)?;
                    depth.set(x, y, Some(height * pitch));
                    Some(Vector3::new(-grad.x, -grad.y, 1.0))
                });
                nm
            }
            Projection::Perspective { mean_distance, .. } => {
                let mut hits = Vec::with_capacity(w * h);
                for y in 0..h {
                    for x in 0..w {
                        hits.push(
                            self.hit(Vector2::new(x as f64 + 0.5, y as f64 + 0.5), mean_distance)?,
                        );
                    }
                }
                let (nm, _) = NormalMap::from_fn(w, h, |x, y| {
                    let (p, n) = hits[y * w + x]?;
                    depth.set(x, y, Some(p.z));
                    Some(n)
                });
                nm
            }
        };
        for y in 0..h {
            for x in 0..w {
                if !normals.is_foreground(x, y) {
                    depth.set(x, y, None);
                }
            }
        }
        Ok((normals, depth))
    }
}
