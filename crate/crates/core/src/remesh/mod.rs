//! Curvature-adaptive isotropic remeshing in screen space.
//!
//! The mesh starts as two triangles per foreground pixel and is refined by
//! repeated split, collapse, flip and smoothing passes. Edge lengths are
//! measured with the first fundamental form of the adjacent faces, so the
//! result is isotropic on the surface rather than on the screen.

mod raster;
mod smooth;

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2, Vector3};

pub use raster::{barycentric, contains, interpolate_at_pixels, rasterize, Coverage};
pub use smooth::{tangential_smooth, SmoothStats};

use crate::camera::CameraModel;
use crate::diffgeo::{curvature_field, first_fundamental_form, CurvatureField};
use crate::error::{Error, Result};
use crate::halfedge::{EdgeId, FaceId, HalfedgeId, ScreenMesh, VertexData, VertexId};
use crate::image_io::NormalMap;

/// Which inner product the Delaunay flip test measures angles with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlipMetric {
    /// Plain screen coordinates.
    Screen,
    /// Mean first fundamental form of the two faces, matching the metric
    /// edge lengths are measured in.
    #[default]
    FirstForm,
}

/// Sizing and schedule of the refinement loop. Lengths are in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizingConfig {
    /// Admissible deviation from the true surface.
    pub epsilon: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub outer_iterations: usize,
    pub smoothing_iterations: usize,
    pub split_factor: f64,
    pub collapse_factor: f64,
    pub flip_metric: FlipMetric,
}

impl SizingConfig {
    pub fn new(epsilon: f64) -> Self {
        SizingConfig {
            epsilon,
            l_min: 1.0,
            l_max: 100.0,
            outer_iterations: 10,
            smoothing_iterations: 5,
            split_factor: 4.0 / 3.0,
            collapse_factor: 4.0 / 5.0,
            flip_metric: FlipMetric::FirstForm,
        }
    }

    /// Config with `epsilon` given in physical units.
    pub fn from_physical(epsilon: f64, cam: &CameraModel) -> Self {
        SizingConfig::new(cam.physical_to_pixel(epsilon))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.l_min > 0.0 && self.l_min < self.l_max && self.l_max.is_finite()) {
            return bad(format!(
                "need 0 < l_min < l_max, got {} and {}",
                self.l_min, self.l_max
            ));
        }
        if !(self.split_factor > 1.0 && self.collapse_factor > 0.0 && self.collapse_factor < 1.0) {
            return bad("split factor must exceed 1 and collapse factor lie in (0, 1)".into());
        }
        Ok(())
    }
}

/// Longest edge whose chord stays within `epsilon` of a surface with
/// curvature `kappa`: `sqrt(6ε/κ − ε²)`, clamped to `[l_min, l_max]`.
pub fn optimal_edge_length(kappa: f64, cfg: &SizingConfig) -> f64 {
    let k = kappa.abs();
    if k == 0.0 || !k.is_finite() {
        return if k == 0.0 { cfg.l_max } else { cfg.l_min };
    }
    let eps = cfg.epsilon;
    let radicand = 6.0 * eps / k - eps * eps;
    if radicand <= 0.0 {
        return cfg.l_min;
    }
    radicand.sqrt().clamp(cfg.l_min, cfg.l_max)
}

/// Two triangles per foreground pixel, split along the diagonal from the
/// top-left to the bottom-right corner. Vertices sit on the pixel-corner
/// lattice; a corner shared only by two diagonally touching pixels gets one
/// vertex per pixel so the result is manifold.
///
/// Faces `2k` and `2k + 1` belong to the `k`-th foreground pixel in row-major
/// order.
pub fn initial_triangulation(width: usize, height: usize, mask: &[bool]) -> Result<ScreenMesh> {
    assert_eq!(mask.len(), width * height);
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    const NONE: u32 = u32::MAX;
    let fg = |x: isize, y: isize| {
        x >= 0
            && y >= 0
            && (x as usize) < width
            && (y as usize) < height
            && mask[y as usize * width + x as usize]
    };
    let corner = |cx: usize, cy: usize| cy * (width + 1) + cx;

    // Vertex id per corner and quadrant (top-left, top-right, bottom-left,
    // bottom-right pixel around the corner).
    let mut ids = vec![[NONE; 4]; (width + 1) * (height + 1)];
    let mut vertices = Vec::new();
    for cy in 0..=height {
        for cx in 0..=width {
            let (x, y) = (cx as isize, cy as isize);
            let quad = [fg(x - 1, y - 1), fg(x, y - 1), fg(x - 1, y), fg(x, y)];
            if !quad.iter().any(|&q| q) {
                continue;
            }
            let p = Vector2::new(cx as f64, cy as f64);
            let diagonal = quad == [true, false, false, true] || quad == [false, true, true, false];
            let slot = &mut ids[corner(cx, cy)];
            if diagonal {
                for k in 0..4 {
                    if quad[k] {
                        slot[k] = vertices.len() as u32;
                        vertices.push(VertexData::at(p));
                    }
                }
            } else {
                let id = vertices.len() as u32;
                vertices.push(VertexData::at(p));
                for k in 0..4 {
                    if quad[k] {
                        slot[k] = id;
                    }
                }
            }
        }
    }

    let mut triangles = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if !mask[y * width + x] {
                continue;
            }
            let a = ids[corner(x, y)][3];
            let b = ids[corner(x + 1, y)][2];
            let c = ids[corner(x + 1, y + 1)][0];
            let d = ids[corner(x, y + 1)][1];
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    ScreenMesh::from_triangles(vertices, &triangles)
}

/// Normalized sum of the normals of the covered pixels, falling back to a
/// bilinear sample at `centroid` when no pixel is covered or the sum vanishes.
pub fn face_normal(nm: &NormalMap, pixels: &[u32], centroid: Vector2<f64>) -> Vector3<f64> {
    let sum: Vector3<f64> = pixels.iter().map(|&i| nm.normals()[i as usize]).sum();
    let len = sum.norm();
    if len > 1e-12 {
        sum / len
    } else {
        nm.sample_bilinear(centroid)
    }
}

/// Metric length of the displacement `d` measured across edge `e`: the mean
/// of the quadratic forms of its faces, or the single face on the boundary.
pub fn metric_length(mesh: &ScreenMesh, e: EdgeId, d: Vector2<f64>) -> f64 {
    let q = |f: FaceId| d.dot(&(mesh.face(f).first_form * d));
    let faces = (mesh.face_of(e.halfedge(0)), mesh.face_of(e.halfedge(1)));
    let sq = match faces {
        (Some(a), Some(b)) => 0.5 * (q(a) + q(b)),
        (Some(a), None) | (None, Some(a)) => q(a),
        (None, None) => d.norm_squared(),
    };
    sq.max(0.0).sqrt()
}

/// Length of edge `e` on the surface, in pixels.
pub fn edge_length_metric(mesh: &ScreenMesh, e: EdgeId) -> f64 {
    let (a, b) = mesh.edge_vertices(e);
    metric_length(mesh, e, mesh.position(b) - mesh.position(a))
}

fn target_length(mesh: &ScreenMesh, e: EdgeId) -> f64 {
    let (a, b) = mesh.edge_vertices(e);
    0.5 * (mesh.vertex(a).target_length + mesh.vertex(b).target_length)
}

/// Re-rasterize and refresh all cached per-face and per-vertex quantities:
/// face normals, first fundamental forms, `κ_v` and `L_v`.
pub fn update_geometry(
    mesh: &mut ScreenMesh,
    nm: &NormalMap,
    cf: &CurvatureField,
    cam: &CameraModel,
    cfg: &SizingConfig,
) -> Coverage {
    let coverage = rasterize(mesh, nm.width(), nm.height(), nm.mask());
    let faces: Vec<FaceId> = mesh.faces().collect();
    let mut face_kappa = vec![0.0f64; mesh.face_capacity()];
    for &f in &faces {
        let pixels = coverage.pixels(f);
        let centroid = mesh.face_centroid(f);
        let normal = face_normal(nm, pixels, centroid);
        let data = mesh.face_mut(f);
        data.normal = normal;
        if let Some(first) = first_fundamental_form(cam, &normal, centroid) {
            data.first_form = first;
        }
        face_kappa[f.idx()] = pixels
            .iter()
            .map(|&i| cf.values()[i as usize])
            .fold(0.0, f64::max);
    }
    let verts: Vec<VertexId> = mesh.vertices().collect();
    for v in verts {
        let kappa = mesh
            .vertex_faces(v)
            .map(|f| face_kappa[f.idx()])
            .fold(0.0, f64::max);
        let data = mesh.vertex_mut(v);
        data.curvature = kappa;
        data.target_length = optimal_edge_length(kappa, cfg);
    }
    coverage
}

/// Per-vertex `(κ_v, L_v)` from a current rasterization.
pub fn vertex_curvature_and_length(
    mesh: &ScreenMesh,
    cf: &CurvatureField,
    coverage: &Coverage,
    cfg: &SizingConfig,
) -> Vec<(VertexId, f64, f64)> {
    mesh.vertices()
        .map(|v| {
            let kappa = mesh
                .vertex_faces(v)
                .flat_map(|f| coverage.pixels(f).iter())
                .map(|&i| cf.values()[i as usize])
                .fold(0.0, f64::max);
            (v, kappa, optimal_edge_length(kappa, cfg))
        })
        .collect()
}

/// Split every edge longer than `split_factor · L_e`, longest first.
pub fn split_long_edges(mesh: &mut ScreenMesh, cfg: &SizingConfig) -> usize {
    let mut long: Vec<(f64, EdgeId)> = mesh
        .edges()
        .filter_map(|e| {
            let l = edge_length_metric(mesh, e);
            (l > cfg.split_factor * target_length(mesh, e)).then_some((l, e))
        })
        .collect();
    long.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, e) in &long {
        let (a, b) = mesh.edge_vertices(e);
        let mid = (mesh.position(a) + mesh.position(b)) * 0.5;
        mesh.split_edge(e, mid);
    }
    long.len()
}

/// Absolute turning angle of the boundary at `v`; zero on a straight run.
fn boundary_turn(mesh: &ScreenMesh, v: VertexId) -> f64 {
    let Some(out) = mesh.vertex_halfedge(v) else {
        return PI;
    };
    let next = mesh.position(mesh.to(out)) - mesh.position(v);
    let prev = mesh.position(v) - mesh.position(mesh.from(mesh.prev(out)));
    let cross = prev.x * next.y - prev.y * next.x;
    cross.atan2(prev.dot(&next)).abs()
}

/// Collapse candidates for edge `e` as (halfedge, target) pairs, in order of
/// preference.
fn collapse_options(mesh: &ScreenMesh, e: EdgeId) -> Vec<(HalfedgeId, Vector2<f64>)> {
    let h = e.halfedge(0);
    let (a, b) = (mesh.from(h), mesh.to(h));
    let (pa, pb) = (mesh.position(a), mesh.position(b));
    match (mesh.is_boundary_vertex(a), mesh.is_boundary_vertex(b)) {
        (false, false) => vec![(h, (pa + pb) * 0.5), (h, pb), (h.twin(), pa)],
        (false, true) => vec![(h, pb)],
        (true, false) => vec![(h.twin(), pa)],
        (true, true) => {
            if !mesh.is_boundary_edge(e) {
                return Vec::new();
            }
            // Remove the endpoint where the silhouette is straightest.
            if boundary_turn(mesh, a) <= boundary_turn(mesh, b) {
                vec![(h, pb), (h.twin(), pa)]
            } else {
                vec![(h.twin(), pa), (h, pb)]
            }
        }
    }
}

/// Whether collapsing `h` to `target` keeps every resulting edge at most
/// `split_factor` times its target length.
fn collapse_keeps_edges_short(
    mesh: &ScreenMesh,
    h: HalfedgeId,
    target: Vector2<f64>,
    cfg: &SizingConfig,
) -> bool {
    let removed = mesh.from(h);
    let kept = mesh.to(h);
    let merged = mesh
        .vertex(removed)
        .target_length
        .min(mesh.vertex(kept).target_length);
    for v in [removed, kept] {
        for out in mesh.outgoing(v) {
            let w = mesh.to(out);
            if w == removed || w == kept {
                continue;
            }
            let len = metric_length(mesh, out.edge(), mesh.position(w) - target);
            let limit = cfg.split_factor * 0.5 * (merged + mesh.vertex(w).target_length);
            if len > limit {
                return false;
            }
        }
    }
    true
}

/// Collapse edges shorter than `collapse_factor · L_e`, shortest first.
pub fn collapse_short_edges(mesh: &mut ScreenMesh, cfg: &SizingConfig) -> usize {
    let is_short = |mesh: &ScreenMesh, e: EdgeId| {
        let l = edge_length_metric(mesh, e);
        (l < cfg.collapse_factor * target_length(mesh, e)).then_some(l)
    };
    let mut short: Vec<(f64, EdgeId)> = mesh
        .edges()
        .filter_map(|e| is_short(mesh, e).map(|l| (l, e)))
        .collect();
    short.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut count = 0;
    for &(_, e) in &short {
        if !mesh.is_edge_alive(e) || is_short(mesh, e).is_none() {
            continue;
        }
        for (h, target) in collapse_options(mesh, e) {
            if mesh.check_collapse(h, target).is_err()
                || !collapse_keeps_edges_short(mesh, h, target, cfg)
            {
                continue;
            }
            let removed = *mesh.vertex(mesh.from(h));
            let kept = mesh.to(h);
            mesh.collapse_edge(h, target).expect("collapse was checked");
            let data = mesh.vertex_mut(kept);
            data.target_length = data.target_length.min(removed.target_length);
            data.curvature = data.curvature.max(removed.curvature);
            count += 1;
            break;
        }
    }
    count
}

fn metric_angle(m: &Matrix2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = a.dot(&(m * b));
    let aa = a.dot(&(m * a));
    let bb = b.dot(&(m * b));
    (aa * bb - ab * ab).max(0.0).sqrt().atan2(ab)
}

/// Sum of the two angles opposite interior edge `e`.
fn opposite_angle_sum(mesh: &ScreenMesh, e: EdgeId, metric: FlipMetric) -> f64 {
    let h0 = e.halfedge(0);
    let h1 = e.halfedge(1);
    let p = mesh.position(mesh.from(h0));
    let q = mesh.position(mesh.to(h0));
    let r = mesh.position(mesh.to(mesh.next(h0)));
    let s = mesh.position(mesh.to(mesh.next(h1)));
    let m = match metric {
        FlipMetric::Screen => Matrix2::identity(),
        FlipMetric::FirstForm => {
            let fa = mesh.face_of(h0).expect("interior edge");
            let fb = mesh.face_of(h1).expect("interior edge");
            (mesh.face(fa).first_form + mesh.face(fb).first_form) * 0.5
        }
    };
    metric_angle(&m, p - r, q - r) + metric_angle(&m, p - s, q - s)
}

/// Flip interior edges whose opposite angles sum to more than π until none
/// remain or `10 · E` flips have been made.
pub fn delaunay_flips(mesh: &mut ScreenMesh, metric: FlipMetric) -> usize {
    const TOLERANCE: f64 = 1e-10;
    let cap = 10 * mesh.edge_count();
    let mut queued = vec![false; mesh.edge_capacity()];
    let mut queue: VecDeque<EdgeId> = mesh.edges().collect();
    for e in &queue {
        queued[e.idx()] = true;
    }
    let mut flips = 0;
    while let Some(e) = queue.pop_front() {
        queued[e.idx()] = false;
        if flips >= cap {
            break;
        }
        if mesh.is_boundary_edge(e) || opposite_angle_sum(mesh, e, metric) <= PI + TOLERANCE {
            continue;
        }
        if mesh.flip_edge(e).is_err() {
            continue;
        }
        flips += 1;
        for side in 0..2 {
            let h = e.halfedge(side);
            for n in [mesh.next(h), mesh.prev(h)] {
                let ne = n.edge();
                if !queued[ne.idx()] {
                    queued[ne.idx()] = true;
                    queue.push_back(ne);
                }
            }
        }
    }
    flips
}

/// Counts for one outer iteration of [`refine_observed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IterationReport {
    pub iteration: usize,
    pub splits: usize,
    pub collapses: usize,
    pub flips: usize,
    pub smoothing_moves: usize,
    pub vertices: usize,
    pub faces: usize,
}

/// Refine a normal map into an adaptive mesh. The curvature field is
/// computed once from `nm`.
pub fn refine(nm: &NormalMap, cam: &CameraModel, cfg: &SizingConfig) -> Result<ScreenMesh> {
    let cf = curvature_field(nm, cam);
    refine_observed(nm, &cf, cam, cfg, |_, _| {})
}

/// [`refine`] with a precomputed curvature field and a callback invoked after
/// every outer iteration with the compacted, fully updated mesh.
pub fn refine_observed<F>(
    nm: &NormalMap,
    cf: &CurvatureField,
    cam: &CameraModel,
    cfg: &SizingConfig,
    mut observer: F,
) -> Result<ScreenMesh>
where
    F: FnMut(&IterationReport, &ScreenMesh),
{
    cfg.validate()?;
    let mut mesh = initial_triangulation(nm.width(), nm.height(), nm.mask())?;
    update_geometry(&mut mesh, nm, cf, cam, cfg);

    for iteration in 0..cfg.outer_iterations {
        let splits = split_long_edges(&mut mesh, cfg);
        let collapses = collapse_short_edges(&mut mesh, cfg);
        let flips = delaunay_flips(&mut mesh, cfg.flip_metric);
        let smooth = tangential_smooth(&mut mesh, cfg.smoothing_iterations);
        mesh.compact();
        update_geometry(&mut mesh, nm, cf, cam, cfg);
        let report = IterationReport {
            iteration,
            splits,
            collapses,
            flips,
            smoothing_moves: smooth.moved,
            vertices: mesh.vertex_count(),
            faces: mesh.face_count(),
        };
        observer(&report, &mesh);
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffgeo::tangents_orthographic;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn optimal_length_examples() {
        let cfg = SizingConfig::new(0.5);
        let l = optimal_edge_length(0.03, &cfg);
        assert!((l - 99.75f64.sqrt()).abs() < 1e-12);
        assert!((l - 9.9875).abs() < 1e-4);
        assert_eq!(optimal_edge_length(0.0, &cfg), 100.0);
        assert_eq!(optimal_edge_length(20.0, &cfg), 1.0);
        // Sign of the curvature does not matter.
        assert_eq!(optimal_edge_length(-0.03, &cfg), l);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(SizingConfig::new(0.0).validate().is_err());
        let mut cfg = SizingConfig::new(1.0);
        cfg.l_min = 200.0;
        assert!(cfg.validate().is_err());
        assert!(SizingConfig::new(1.0).validate().is_ok());
    }

    #[test]
    fn grid_counts() {
        let m = initial_triangulation(1, 1, &[true]).unwrap();
        assert_eq!((m.vertex_count(), m.face_count()), (4, 2));
        let m = initial_triangulation(2, 2, &[true; 4]).unwrap();
        assert_eq!((m.vertex_count(), m.face_count()), (9, 8));
        m.validate().unwrap();
        assert!(matches!(
            initial_triangulation(2, 1, &[false, false]),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn diagonal_pixels_become_separate_components() {
        let m = initial_triangulation(2, 2, &[true, false, false, true]).unwrap();
        m.validate().unwrap();
        assert_eq!((m.vertex_count(), m.face_count()), (8, 4));
        assert_eq!(m.components().1, 2);
        let m = initial_triangulation(2, 2, &[false, true, true, false]).unwrap();
        m.validate().unwrap();
        assert_eq!(m.components().1, 2);
    }

    #[test]
    fn grid_faces_follow_pixel_order_and_diagonal() {
        let mask = [true, false, true, true, true, false];
        let m = initial_triangulation(3, 2, &mask).unwrap();
        let pixels: Vec<usize> = (0..6).filter(|&i| mask[i]).collect();
        for (k, &p) in pixels.iter().enumerate() {
            let (x, y) = ((p % 3) as f64, (p / 3) as f64);
            for f in [FaceId(2 * k as u32), FaceId(2 * k as u32 + 1)] {
                assert!((m.face_area(f) - 0.5).abs() < 1e-15);
                let pos = m.face_positions(f);
                assert!(pos.contains(&Vector2::new(x, y)));
                assert!(pos.contains(&Vector2::new(x + 1.0, y + 1.0)));
            }
        }
    }

    #[test]
    fn face_normal_examples() {
        let (nm, _) = NormalMap::from_fn(2, 1, |x, _| {
            Some(if x == 0 {
                Vector3::z()
            } else {
                Vector3::new(1.0, 0.0, 1.0)
            })
        });
        let n = face_normal(&nm, &[0, 1], Vector2::new(1.0, 0.5));
        let expected = Vector3::new(FRAC_1_SQRT_2, 0.0, 1.0 + FRAC_1_SQRT_2).normalize();
        assert!((n - expected).norm() < 1e-15);

        let c = Vector3::new(0.1, -0.2, 0.9).normalize();
        let (flat, _) = NormalMap::from_fn(3, 3, |_, _| Some(c));
        assert!((face_normal(&flat, &[0, 4, 8], Vector2::new(1.5, 1.5)) - c).norm() < 1e-15);
        assert!((face_normal(&flat, &[], Vector2::new(1.2, 0.7)) - c).norm() < 1e-15);
    }

    fn two_triangles(normal: Vector3<f64>) -> ScreenMesh {
        let verts = [(0.0, 0.0), (3.0, 0.0), (3.0, 4.0), (0.0, 4.0)]
            .iter()
            .map(|&(x, y)| VertexData::at(Vector2::new(x, y)))
            .collect();
        let mut m = ScreenMesh::from_triangles(verts, &[[0, 1, 2], [0, 2, 3]]).unwrap();
        let (tu, tv) = tangents_orthographic(&normal);
        let first = Matrix2::new(tu.dot(&tu), tu.dot(&tv), tu.dot(&tv), tv.dot(&tv));
        for f in m.faces().collect::<Vec<_>>() {
            m.face_mut(f).normal = normal;
            m.face_mut(f).first_form = first;
        }
        m
    }

    #[test]
    fn edge_length_examples() {
        let m = two_triangles(Vector3::z());
        let diag = m.find_halfedge(VertexId(0), VertexId(2)).unwrap().edge();
        assert!((edge_length_metric(&m, diag) - 5.0).abs() < 1e-15);
        let bottom = m.find_halfedge(VertexId(0), VertexId(1)).unwrap().edge();
        assert!((edge_length_metric(&m, bottom) - 3.0).abs() < 1e-15);

        let m = two_triangles(Vector3::new(1.0, 0.0, 1.0).normalize());
        let d = Vector2::new(1.0, 0.0);
        assert!((metric_length(&m, diag, d) - 2f64.sqrt()).abs() < 1e-12);
        assert!((metric_length(&m, bottom, d) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn vertex_sizing_takes_star_maximum() {
        let mask = vec![true; 9];
        let (nm, _) = NormalMap::from_fn(3, 3, |_, _| Some(Vector3::z()));
        let cam = CameraModel::orthographic(1.0).unwrap();
        let cfg = SizingConfig::new(0.5);
        let mut mesh = initial_triangulation(3, 3, &mask).unwrap();
        let mut cf = curvature_field(&nm, &cam);
        assert!(cf.values().iter().all(|&k| k == 0.0));
        update_geometry(&mut mesh, &nm, &cf, &cam, &cfg);
        assert!(mesh
            .vertices()
            .all(|v| mesh.vertex(v).target_length == 100.0));

        // A synthetic spike at the center pixel affects only its star.
        cf = spike(&cf, 4, 0.03);
        let cov = update_geometry(&mut mesh, &nm, &cf, &cam, &cfg);
        let sizing = vertex_curvature_and_length(&mesh, &cf, &cov, &cfg);
        for (v, kappa, len) in sizing {
            assert_eq!(mesh.vertex(v).curvature, kappa);
            assert_eq!(mesh.vertex(v).target_length, len);
            let touches = mesh.vertex_faces(v).any(|f| cov.pixels(f).contains(&4));
            assert_eq!(kappa, if touches { 0.03 } else { 0.0 });
        }
    }

    fn spike(cf: &CurvatureField, pixel: usize, value: f64) -> CurvatureField {
        let mut values = cf.values().to_vec();
        values[pixel] = value;
        CurvatureField::from_values(cf.width(), cf.height(), values, cf.mask().to_vec())
    }

    #[test]
    fn planar_input_coarsens_to_maximum_length() {
        let (nm, _) = NormalMap::from_fn(300, 300, |_, _| Some(Vector3::z()));
        let cam = CameraModel::orthographic(1.0).unwrap();
        let cfg = SizingConfig::new(0.5);
        let mesh = refine(&nm, &cam, &cfg).unwrap();
        mesh.validate().unwrap();
        let mut lengths: Vec<f64> = mesh.edges().map(|e| edge_length_metric(&mesh, e)).collect();
        lengths.sort_by(f64::total_cmp);
        let median = lengths[lengths.len() / 2];
        assert!(
            (66.0..=134.0).contains(&median),
            "median edge length {median}"
        );
    }

    #[test]
    fn refinement_is_deterministic_and_valid_each_iteration() {
        let (nm, _) = NormalMap::from_fn(48, 40, |x, y| {
            let (u, v) = (x as f64 - 24.0, y as f64 - 20.0);
            let r2 = u * u + v * v;
            (r2 < 18.0 * 18.0).then(|| Vector3::new(u, v, (18.0f64 * 18.0 - r2).sqrt()))
        });
        let cam = CameraModel::orthographic(1.0).unwrap();
        let cfg = SizingConfig::new(0.5);
        let cf = curvature_field(&nm, &cam);
        let mut iterations = 0;
        let a = refine_observed(&nm, &cf, &cam, &cfg, |report, mesh| {
            mesh.validate().unwrap();
            assert_eq!(report.vertices, mesh.vertex_count());
            iterations += 1;
        })
        .unwrap();
        assert_eq!(iterations, cfg.outer_iterations);
        let b = refine(&nm, &cam, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.vertex_count() < nm.foreground_count());
    }
}
