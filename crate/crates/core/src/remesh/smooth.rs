//! Tangential relaxation toward the metric-weighted centroid of each star.

use nalgebra::{Matrix2, Vector2};

use crate::halfedge::{signed_area, ScreenMesh, VertexId, MIN_FACE_AREA};

/// Largest condition number of the 2×2 system that is still solved.
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SmoothStats {
    pub moved: usize,
    pub rejected: usize,
    pub singular: usize,
}

fn condition_number(m: &Matrix2<f64>) -> f64 {
    let tr = m.trace();
    let det = m.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (hi, lo) = (0.5 * tr + disc, 0.5 * tr - disc);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Weighted centroid of the star of `v`, or `None` if the system is
/// singular.
fn star_centroid(mesh: &ScreenMesh, v: VertexId) -> Option<Vector2<f64>> {
    let mut lhs = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for f in mesh.vertex_faces(v) {
        let [a, b, c] = mesh.face_vertices(f);
        let area = mesh.face_area(f);
        let first = mesh.face(f).first_form;
        let target = (mesh.vertex(a).target_length
            + mesh.vertex(b).target_length
            + mesh.vertex(c).target_length)
            / 3.0;
        let w = area * first.determinant().max(0.0).sqrt() / (target * target);
        lhs += first * w;
        rhs += first * mesh.face_centroid(f) * w;
    }
    if !(condition_number(&lhs) <= MAX_CONDITION) {
        return None;
    }
    lhs.try_inverse().map(|inv| inv * rhs)
}

fn move_keeps_orientation(mesh: &ScreenMesh, v: VertexId, p: Vector2<f64>) -> bool {
    mesh.vertex_faces(v).all(|f| {
        let q = mesh
            .face_vertices(f)
            .map(|w| if w == v { p } else { mesh.position(w) });
        signed_area(q[0], q[1], q[2]) > MIN_FACE_AREA
    })
}

/// Move interior vertices toward the centroid of their star, measured with
/// each face's first fundamental form and weighted by surface area over the
/// squared target length. Every pass computes all targets from the current
/// positions, then applies them one by one, skipping moves that would invert
/// a face. Boundary vertices stay fixed.
pub fn tangential_smooth(mesh: &mut ScreenMesh, passes: usize) -> SmoothStats {
    let mut stats = SmoothStats::default();
    let interior: Vec<VertexId> = mesh
        .vertices()
        .filter(|&v| !mesh.is_boundary_vertex(v))
        .collect();
    for _ in 0..passes {
        let targets: Vec<Option<Vector2<f64>>> =
            interior.iter().map(|&v| star_centroid(mesh, v)).collect();
        for (&v, target) in interior.iter().zip(targets) {
            let Some(p) = target else {
                stats.singular += 1;
                continue;
            };
            if move_keeps_orientation(mesh, v, p) {
                mesh.vertex_mut(v).position = p;
                stats.moved += 1;
            } else {
                stats.rejected += 1;
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfedge::VertexData;
    use std::f64::consts::PI;

    fn hex_fan(center: Vector2<f64>) -> ScreenMesh {
        let mut verts = vec![VertexData::at(center)];
        for k in 0..6 {
            let a = PI / 3.0 * k as f64;
            verts.push(VertexData::at(Vector2::new(a.cos(), a.sin()) * 10.0));
        }
        for v in &mut verts {
            v.target_length = 10.0;
        }
        let tris: Vec<[u32; 3]> = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
        ScreenMesh::from_triangles(verts, &tris).unwrap()
    }

    #[test]
    fn symmetric_fan_is_a_fixed_point() {
        let mut m = hex_fan(Vector2::zeros());
        let stats = tangential_smooth(&mut m, 5);
        assert_eq!(stats.moved, 5);
        assert!(m.position(VertexId(0)).norm() < 1e-12);
    }

    #[test]
    fn identity_metric_gives_area_weighted_centroid() {
        // Irregular boundary so face areas differ.
        let ring = [
            (10.0, 0.0),
            (4.0, 9.0),
            (-6.0, 7.0),
            (-9.0, -1.0),
            (-3.0, -8.0),
            (6.0, -6.0),
        ];
        let mut verts = vec![VertexData::at(Vector2::new(0.5, -0.5))];
        verts.extend(
            ring.iter()
                .map(|&(x, y)| VertexData::at(Vector2::new(x, y))),
        );
        for v in &mut verts {
            v.target_length = 3.0;
        }
        let tris: Vec<[u32; 3]> = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
        let mut m = ScreenMesh::from_triangles(verts, &tris).unwrap();

        let mut weighted = Vector2::zeros();
        let mut total = 0.0;
        for f in m.faces() {
            weighted += m.face_centroid(f) * m.face_area(f);
            total += m.face_area(f);
        }
        let expected = weighted / total;
        tangential_smooth(&mut m, 1);
        assert!((m.position(VertexId(0)) - expected).norm() < 1e-12);
    }

    #[test]
    fn perturbed_center_returns_monotonically() {
        let mut m = hex_fan(Vector2::new(3.0, -2.0));
        let mut last = m.position(VertexId(0)).norm();
        for _ in 0..5 {
            tangential_smooth(&mut m, 1);
            let d = m.position(VertexId(0)).norm();
            assert!(d <= last + 1e-12, "{d} > {last}");
            last = d;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn boundary_vertices_do_not_move() {
        let mut m = hex_fan(Vector2::new(1.0, 1.0));
        let before: Vec<_> = (1..7).map(|i| m.position(VertexId(i))).collect();
        tangential_smooth(&mut m, 3);
        let after: Vec<_> = (1..7).map(|i| m.position(VertexId(i))).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn uniform_anisotropic_metric_keeps_symmetric_fixed_point() {
        let mut m = hex_fan(Vector2::new(2.0, 0.0));
        for f in m.faces().collect::<Vec<_>>() {
            m.face_mut(f).first_form = Matrix2::new(4.0, 0.0, 0.0, 1.0);
        }
        tangential_smooth(&mut m, 20);
        assert!(m.position(VertexId(0)).norm() < 1e-3);
    }
}
