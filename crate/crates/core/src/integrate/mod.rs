//! Mesh-based normal integration.
//!
//! Depth is linear over each face and the normal is constant, so the
//! integration energy reduces per face to a cotangent-weighted quadratic in
//! the vertex depths. The orthographic unknown is the height in pixels; the
//! perspective unknown is the logarithm of the depth along each ray.

mod sparse;

use nalgebra::{Matrix2, Vector2, Vector3};

pub use sparse::{conjugate_gradient, CsrMatrix, SolveInfo};

use crate::camera::{CameraModel, Projection};
use crate::diffgeo::first_fundamental_form;
use crate::error::Result;
use crate::halfedge::{ScreenMesh, VertexId};
use crate::image_io::NormalMap;
use crate::remesh::initial_triangulation;

/// Bound on the magnitude of a single cotangent weight.
pub const MAX_COTANGENT: f64 = 1e6;

/// Inner product used for the angles of the cotangent weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CotangentMode {
    /// Angles measured with the face's first fundamental form.
    #[default]
    FirstForm,
    /// Plain screen-space angles.
    Screen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    /// Relative residual at which the solver stops.
    pub tolerance: f64,
    pub cotangent: CotangentMode,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            tolerance: 1e-8,
            cotangent: CotangentMode::FirstForm,
        }
    }
}

/// `(m_f, b_f)`: the mean of `(n·r)²`-type products and of `n·r` over a face
/// whose rays vary linearly between its corners.
pub fn face_constants(normal: &Vector3<f64>, rays: &[Vector3<f64>; 3]) -> (f64, f64) {
    let p = rays.map(|r| normal.dot(&r));
    let mut m = 0.0;
    for i in 0..3 {
        for j in i..3 {
            m += p[i] * p[j];
        }
    }
    (m / 12.0, (p[0] + p[1] + p[2]) / 3.0)
}

/// Cotangent of the angle between the corner edge vectors `a` and `b`,
/// measured with `metric`. Clamped to `±MAX_COTANGENT`.
pub fn cot_opposite_angle(a: Vector2<f64>, b: Vector2<f64>, metric: &Matrix2<f64>) -> f64 {
    let ab = a.dot(&(metric * b));
    let aa = a.dot(&(metric * a));
    let bb = b.dot(&(metric * b));
    let sin = (aa * bb - ab * ab).max(1e-18).sqrt();
    (ab / sin).clamp(-MAX_COTANGENT, MAX_COTANGENT)
}

/// Screen-space derivative of `n · r` contributions that do not involve the
/// depth: `(n_x, n_y)` for orthographic cameras, `(n·∂u r, n·∂v r)` otherwise.
pub fn normal_gradient_term(cam: &CameraModel, normal: &Vector3<f64>) -> Vector2<f64> {
    match cam.projection() {
        Projection::Orthographic => Vector2::new(normal.x, normal.y),
        Projection::Perspective { .. } => {
            let (du, dv) = cam.ray_derivatives();
            Vector2::new(normal.dot(&du), normal.dot(&dv))
        }
    }
}

/// Sparse system over vertex ids (rows of deleted vertices are empty).
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Connected component per vertex id; `u32::MAX` for deleted vertices.
    pub components: Vec<u32>,
    pub component_count: usize,
    /// Faces left out because they are degenerate on screen.
    pub skipped_faces: usize,
}

/// Assemble the optimality system of the discretized integration energy.
/// Uses the cached face normals and first fundamental forms of `mesh`.
pub fn assemble(mesh: &ScreenMesh, cam: &CameraModel, mode: CotangentMode) -> IntegrationSystem {
    let n = mesh.vertex_capacity();
    let mut triplets: Vec<(u32, u32, f64)> = Vec::with_capacity(mesh.face_count() * 12);
    let mut rhs = vec![0.0; n];
    let mut skipped = 0;

    for f in mesh.faces() {
        let verts = mesh.face_vertices(f);
        let pos = verts.map(|v| mesh.position(v));
        let area = mesh.face_area(f);
        if !(area > 0.0 && area.is_finite()) {
            skipped += 1;
            continue;
        }
        let data = mesh.face(f);
        let metric = match mode {
            CotangentMode::FirstForm => data.first_form,
            CotangentMode::Screen => Matrix2::identity(),
        };
        let rays = pos.map(|u| cam.ray(u));
        let (m, b) = face_constants(&data.normal, &rays);
        let g = normal_gradient_term(cam, &data.normal);

        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let c = cot_opposite_angle(pos[i] - pos[k], pos[j] - pos[k], &metric);
            let (vi, vj) = (verts[i].0, verts[j].0);
            let w = 2.0 * c * m;
            triplets.push((vi, vi, w));
            triplets.push((vj, vj, w));
            triplets.push((vi, vj, -w));
            triplets.push((vj, vi, -w));
            let t = c * b * g.dot(&(pos[j] - pos[i]));
            rhs[vj as usize] -= t;
            rhs[vi as usize] += t;
        }
    }

    let (components, component_count) = mesh.components();
    IntegrationSystem {
        matrix: CsrMatrix::from_triplets(n, &triplets),
        rhs,
        components,
        component_count,
        skipped_faces: skipped,
    }
}

/// Solve the system with zero mean depth on every connected component.
/// Returns one value per vertex id.
pub fn solve(sys: &IntegrationSystem, tolerance: f64) -> Result<(Vec<f64>, SolveInfo)> {
    let live = sys.components.iter().filter(|&&c| c != u32::MAX).count();
    let (mut z, info) = conjugate_gradient(&sys.matrix, &sys.rhs, tolerance, 10 * live.max(1))?;
    let mut sum = vec![0.0; sys.component_count];
    let mut count = vec![0usize; sys.component_count];
    for (i, &c) in sys.components.iter().enumerate() {
        if c != u32::MAX {
            sum[c as usize] += z[i];
            count[c as usize] += 1;
        }
    }
    for (i, &c) in sys.components.iter().enumerate() {
        if c == u32::MAX {
            z[i] = 0.0;
        } else {
            z[i] -= sum[c as usize] / count[c as usize] as f64;
        }
    }
    Ok((z, info))
}

/// A mesh with 3D vertex positions in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedSurface {
    pub mesh: ScreenMesh,
    /// Indexed by vertex id.
    pub positions: Vec<Vector3<f64>>,
}

impl IntegratedSurface {
    /// Depth of vertex `v` along the viewing axis.
    pub fn depth(&self, v: VertexId) -> f64 {
        self.positions[v.idx()].z
    }
}

/// Turn per-vertex solutions into 3D positions. Orthographic: screen
/// coordinates and height scaled by the pixel pitch. Perspective: rays scaled
/// by `z̄ · exp(z − mean z)`.
pub fn lift(mesh: &ScreenMesh, z: &[f64], cam: &CameraModel) -> IntegratedSurface {
    let mut positions = vec![Vector3::zeros(); mesh.vertex_capacity()];
    match cam.projection() {
        Projection::Orthographic => {
            let p = cam.pixel_pitch();
            for v in mesh.vertices() {
                let u = mesh.position(v);
                positions[v.idx()] = Vector3::new(u.x, u.y, z[v.idx()]) * p;
            }
        }
        Projection::Perspective { mean_distance, .. } => {
            let count = mesh.vertex_count().max(1) as f64;
            let mean = mesh.vertices().map(|v| z[v.idx()]).sum::<f64>() / count;
            for v in mesh.vertices() {
                let h = mean_distance * (z[v.idx()] - mean).exp();
                positions[v.idx()] = cam.ray(mesh.position(v)) * h;
            }
        }
    }
    IntegratedSurface {
        mesh: mesh.clone(),
        positions,
    }
}

/// Assemble, solve and lift in one call.
pub fn integrate(
    mesh: &ScreenMesh,
    cam: &CameraModel,
    opts: &IntegrationOptions,
) -> Result<(IntegratedSurface, SolveInfo)> {
    let sys = assemble(mesh, cam, opts.cotangent);
    let (z, info) = solve(&sys, opts.tolerance)?;
    Ok((lift(mesh, &z, cam), info))
}

/// Two triangles per foreground pixel, each carrying that pixel's normal.
pub fn dense_mesh(nm: &NormalMap, cam: &CameraModel) -> Result<ScreenMesh> {
    let mut mesh = initial_triangulation(nm.width(), nm.height(), nm.mask())?;
    let pixels = (0..nm.width() * nm.height()).filter(|&i| nm.mask()[i]);
    for (k, i) in pixels.enumerate() {
        let normal = nm.normals()[i];
        for f in [2 * k, 2 * k + 1] {
            let f = crate::halfedge::FaceId(f as u32);
            let centroid = mesh.face_centroid(f);
            let data = mesh.face_mut(f);
            data.normal = normal;
            if let Some(first) = first_fundamental_form(cam, &normal, centroid) {
                data.first_form = first;
            }
        }
    }
    Ok(mesh)
}

/// Pixel-resolution comparator: integrate on the unrefined grid.
pub fn integrate_dense_baseline(
    nm: &NormalMap,
    cam: &CameraModel,
    opts: &IntegrationOptions,
) -> Result<(ScreenMesh, Vec<f64>)> {
    let mesh = dense_mesh(nm, cam)?;
    let sys = assemble(&mesh, cam, opts.cotangent);
    let (z, _) = solve(&sys, opts.tolerance)?;
    Ok((mesh, z))
}
