//! Browser bindings: pick a scene or upload a normal map, preview its
//! curvature, remesh it and integrate the mesh.

use wasm_bindgen::prelude::*;

use screenmesh::diffgeo::{curvature_field, CurvatureField};
use screenmesh::eval::{compression_rate, rmse_aligned};
use screenmesh::halfedge::ScreenMesh;
use screenmesh::image_io::{gaussian_blur_normals, DepthMap, NormalMap, DEFAULT_BLUR_SIGMA};
use screenmesh::integrate::{integrate, IntegratedSurface, IntegrationOptions};
use screenmesh::remesh::{refine_observed, SizingConfig};
use screenmesh::synthetic::{CylinderAxis, SceneKind, SyntheticScene};
use screenmesh::{CameraModel, Error, Result};

fn scene_kind(name: &str, size: usize) -> Result<SceneKind> {
    let s = size as f64;
    Ok(match name {
        "sphere" => SceneKind::Sphere {
            radius: 0.4 * s,
            center: None,
        },
        "cylinder" => SceneKind::Cylinder {
            radius: 0.35 * s,
            axis: CylinderAxis::Vertical,
        },
        "wedge" => SceneKind::Wedge {
            left_slope: 1.0,
            right_slope: -1.0,
            crease: None,
        },
        "sinusoid" => SceneKind::Sinusoid {
            amplitude: 0.04 * s,
            period: 0.25 * s,
        },
        "plane" => SceneKind::Plane {
            slope_u: 0.3,
            slope_v: -0.2,
        },
        other => return Err(Error::InvalidParameter(format!("unknown scene `{other}`"))),
    })
}

/// Piecewise-linear dark blue to yellow ramp over `t ∈ [0, 1]`.
fn ramp(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let x = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let c = |k: usize| (STOPS[i][k] * (1.0 - f) + STOPS[i + 1][k] * f).round() as u8;
    [c(0), c(1), c(2)]
}

/// RGBA image of per-pixel values mapped through [`ramp`]; missing values
/// are transparent.
fn colorize(values: &[Option<f64>]) -> Vec<u8> {
    let present = values.iter().flatten();
    let lo = present.clone().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = present.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        match v {
            Some(v) => {
                let [r, g, b] = ramp((v - lo) / span);
                out.extend([r, g, b, 255]);
            }
            None => out.extend([0, 0, 0, 0]),
        }
    }
    out
}

#[wasm_bindgen]
pub struct Demo {
    normals: NormalMap,
    blurred: NormalMap,
    truth: Option<DepthMap>,
    camera: CameraModel,
    curvature: CurvatureField,
    mesh: Option<ScreenMesh>,
    surface: Option<IntegratedSurface>,
}

impl Demo {
    fn from_normals(normals: NormalMap, truth: Option<DepthMap>) -> Result<Demo> {
        if normals.foreground_count() == 0 {
            return Err(Error::EmptyMask);
        }
        let camera = CameraModel::orthographic(1.0)?;
        let blurred = gaussian_blur_normals(&normals, DEFAULT_BLUR_SIGMA);
        let curvature = curvature_field(&blurred, &camera);
        Ok(Demo {
            normals,
            blurred,
            truth,
            camera,
            curvature,
            mesh: None,
            surface: None,
        })
    }

    pub fn synthetic(scene: &str, size: usize) -> Result<Demo> {
        if !(16..=1024).contains(&size) {
            return Err(Error::InvalidParameter("size must lie in 16..=1024".into()));
        }
        let (nm, depth) =
            SyntheticScene::orthographic(scene_kind(scene, size)?, size, size).render()?;
        Demo::from_normals(nm, Some(depth))
    }

    /// Decode 8-bit RGBA with `n = 2c/255 − 1`; alpha 0 marks background.
    pub fn decode_rgba(width: usize, height: usize, rgba: &[u8]) -> Result<Demo> {
        if rgba.len() != width * height * 4 {
            return Err(Error::InvalidParameter(format!(
                "expected {} bytes of RGBA, got {}",
                width * height * 4,
                rgba.len()
            )));
        }
        let (nm, _) = NormalMap::from_fn(width, height, |x, y| {
            let p = &rgba[4 * (y * width + x)..][..4];
            let c = |k: usize| 2.0 * p[k] as f64 / 255.0 - 1.0;
            (p[3] > 0).then(|| nalgebra::Vector3::new(c(0), c(1), c(2)))
        });
        Demo::from_normals(nm, None)
    }

    pub fn remesh_with(&mut self, epsilon: f64) -> Result<usize> {
        let cfg = SizingConfig::new(epsilon);
        let mesh = refine_observed(
            &self.blurred,
            &self.curvature,
            &self.camera,
            &cfg,
            |_, _| {},
        )?;
        let count = mesh.vertex_count();
        self.mesh = Some(mesh);
        self.surface = None;
        Ok(count)
    }

    pub fn integrate_mesh(&mut self) -> Result<Vec<u8>> {
        let mesh = match &self.mesh {
            Some(m) => m,
            None => {
                self.remesh_with(0.5)?;
                self.mesh.as_ref().expect("mesh was just built")
            }
        };
        let (surface, _) = integrate(mesh, &self.camera, &IntegrationOptions::default())?;
        let (w, h) = (self.normals.width(), self.normals.height());
        let depth = screenmesh::eval::depth_at_pixels(&surface, w, h, self.normals.mask());
        self.surface = Some(surface);
        Ok(colorize(&depth))
    }
}

#[wasm_bindgen]
impl Demo {
    /// One of `sphere`, `cylinder`, `wedge`, `sinusoid`, `plane` at
    /// `size × size` pixels.
    #[wasm_bindgen(constructor)]
    pub fn new(scene: &str, size: usize) -> std::result::Result<Demo, JsError> {
        Demo::synthetic(scene, size).map_err(|e| JsError::new(&e.to_string()))
    }

    /// A normal map uploaded as canvas pixels.
    #[wasm_bindgen(js_name = fromRgba)]
    pub fn from_rgba(
        width: usize,
        height: usize,
        rgba: &[u8],
    ) -> std::result::Result<Demo, JsError> {
        Demo::decode_rgba(width, height, rgba).map_err(|e| JsError::new(&e.to_string()))
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.normals.width()
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.normals.height()
    }

    #[wasm_bindgen(getter, js_name = foregroundPixels)]
    pub fn foreground_pixels(&self) -> usize {
        self.normals.foreground_count()
    }

    /// The input normals as RGBA.
    #[wasm_bindgen(js_name = normalsRgba)]
    pub fn normals_rgba(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.normals.normals().len() * 4);
        for (n, &fg) in self.normals.normals().iter().zip(self.normals.mask()) {
            if fg {
                let c = |v: f64| ((v + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8;
                out.extend([c(n.x), c(n.y), c(n.z), 255]);
            } else {
                out.extend([0, 0, 0, 0]);
            }
        }
        out
    }

    /// Maximum absolute curvature on a log scale as RGBA.
    #[wasm_bindgen(js_name = curvatureRgba)]
    pub fn curvature_rgba(&self) -> Vec<u8> {
        let (w, h) = (self.curvature.width(), self.curvature.height());
        let values: Vec<Option<f64>> = (0..w * h)
            .map(|i| self.curvature.get(i % w, i / w).map(|k| (k + 1e-6).log10()))
            .collect();
        colorize(&values)
    }

    /// Build the adaptive mesh for `epsilon` pixels; returns the vertex count.
    pub fn remesh(&mut self, epsilon: f64) -> std::result::Result<usize, JsError> {
        self.remesh_with(epsilon)
            .map_err(|e| JsError::new(&e.to_string()))
    }

    /// Edges of the current mesh as `x0 y0 x1 y1` quadruples in pixels.
    #[wasm_bindgen(js_name = meshEdges)]
    pub fn mesh_edges(&self) -> Vec<f32> {
        let Some(mesh) = &self.mesh else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(mesh.edge_count() * 4);
        for e in mesh.edges() {
            let (a, b) = mesh.edge_vertices(e);
            let (p, q) = (mesh.position(a), mesh.position(b));
            out.extend([p.x as f32, p.y as f32, q.x as f32, q.y as f32]);
        }
        out
    }

    #[wasm_bindgen(getter)]
    pub fn compression(&self) -> f64 {
        self.mesh.as_ref().map_or(f64::NAN, |m| {
            compression_rate(m.vertex_count(), self.normals.foreground_count())
        })
    }

    /// Integrate the current mesh; returns its depth at pixel centers as RGBA.
    pub fn integrate(&mut self) -> std::result::Result<Vec<u8>, JsError> {
        self.integrate_mesh()
            .map_err(|e| JsError::new(&e.to_string()))
    }

    /// Aligned depth RMSE in pixels for synthetic scenes after integration,
    /// NaN otherwise.
    #[wasm_bindgen(getter)]
    pub fn rmse(&self) -> f64 {
        match (&self.surface, &self.truth) {
            (Some(s), Some(t)) => rmse_aligned(s, t, &self.camera).map_or(f64::NAN, |r| r.rmse),
            _ => f64::NAN,
        }
    }
}
