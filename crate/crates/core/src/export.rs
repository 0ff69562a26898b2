//! Mesh and depth output.
//!
//! Floats are written in Rust's shortest round-trip form, so identical
//! meshes give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::eval::depth_at_pixels;
use crate::halfedge::ScreenMesh;
use crate::image_io::DepthMap;
use crate::integrate::IntegratedSurface;

/// Dense vertex numbering in id order, plus faces in that numbering.
fn numbered(mesh: &ScreenMesh) -> (Vec<u32>, Vec<[u32; 3]>) {
    let mut index = vec![u32::MAX; mesh.vertex_capacity()];
    for (k, v) in mesh.vertices().enumerate() {
        index[v.idx()] = k as u32;
    }
    let faces = mesh
        .faces()
        .map(|f| mesh.face_vertices(f).map(|v| index[v.idx()]))
        .collect();
    (index, faces)
}

fn obj_text(mesh: &ScreenMesh, point: impl Fn(usize) -> Vector3<f64>) -> String {
    let (_, faces) = numbered(mesh);
    let mut s = String::new();
    for v in mesh.vertices() {
        let p = point(v.idx());
        writeln!(s, "v {} {} {}", p.x, p.y, p.z).unwrap();
    }
    for [a, b, c] in faces {
        writeln!(s, "f {} {} {}", a + 1, b + 1, c + 1).unwrap();
    }
    s
}

/// Wavefront OBJ of the lifted surface.
pub fn surface_to_obj(surface: &IntegratedSurface) -> String {
    obj_text(&surface.mesh, |i| surface.positions[i])
}

/// Wavefront OBJ of the screen-space mesh at z = 0.
pub fn screen_mesh_to_obj(mesh: &ScreenMesh) -> String {
    obj_text(mesh, |i| {
        let p = mesh.vertex(crate::halfedge::VertexId(i as u32)).position;
        Vector3::new(p.x, p.y, 0.0)
    })
}

/// ASCII PLY of the lifted surface.
pub fn surface_to_ply(surface: &IntegratedSurface) -> String {
    let mesh = &surface.mesh;
    let (_, faces) = numbered(mesh);
    let mut s = String::new();
    writeln!(s, "ply\nformat ascii 1.0").unwrap();
    writeln!(s, "element vertex {}", mesh.vertex_count()).unwrap();
    writeln!(s, "property double x\nproperty double y\nproperty double z").unwrap();
    writeln!(s, "element face {}", faces.len()).unwrap();
    writeln!(s, "property list uchar int vertex_indices\nend_header").unwrap();
    for v in mesh.vertices() {
        let p = surface.positions[v.idx()];
        writeln!(s, "{} {} {}", p.x, p.y, p.z).unwrap();
    }
    for [a, b, c] in faces {
        writeln!(s, "3 {a} {b} {c}").unwrap();
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write OBJ or PLY depending on the extension; anything else is OBJ.
pub fn write_surface(surface: &IntegratedSurface, path: &Path) -> Result<()> {
    let is_ply = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    let text = if is_ply {
        surface_to_ply(surface)
    } else {
        surface_to_obj(surface)
    };
    write_text(path, &text)
}

/// Surface depth sampled at the centers of the masked pixels it covers.
pub fn surface_depth_map(
    surface: &IntegratedSurface,
    width: usize,
    height: usize,
    mask: &[bool],
) -> DepthMap {
    let depth = depth_at_pixels(surface, width, height, mask);
    DepthMap::from_fn(width, height, |x, y| depth[y * width + x])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfedge::VertexData;
    use nalgebra::Vector2;

    fn square() -> IntegratedSurface {
        let verts = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]
            .iter()
            .map(|&(x, y)| VertexData::at(Vector2::new(x, y)))
            .collect();
        let mesh = ScreenMesh::from_triangles(verts, &[[0, 1, 2], [0, 2, 3]]).unwrap();
        let positions = mesh
            .vertices()
            .map(|v| {
                let p = mesh.position(v);
                Vector3::new(p.x, p.y, 0.5 * p.x)
            })
            .collect();
        IntegratedSurface { mesh, positions }
    }

    #[test]
    fn obj_lists_vertices_then_one_based_faces() {
        let text = surface_to_obj(&square());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "v 0 0 0");
        assert_eq!(lines[1], "v 2 0 1");
        assert_eq!(lines[4], "f 1 2 3");
        assert_eq!(lines[5], "f 1 3 4");
        assert_eq!(lines.len(), 6);
    }

    #[test]
    fn ply_header_counts_match_body() {
        let text = surface_to_ply(&square());
        assert!(text.contains("element vertex 4\n"));
        assert!(text.contains("element face 2\n"));
        let body: Vec<&str> = text.split("end_header\n").nth(1).unwrap().lines().collect();
        assert_eq!(body.len(), 6);
        assert_eq!(body[5], "3 0 2 3");
    }

    #[test]
    fn renumbers_after_deletions() {
        let mut s = square();
        let e = s
            .mesh
            .find_halfedge(crate::halfedge::VertexId(0), crate::halfedge::VertexId(2))
            .unwrap();
        let v = s.mesh.split_edge(e.edge(), Vector2::new(1.0, 1.0));
        s.positions.push(Vector3::new(1.0, 1.0, 0.5));
        let h = s
            .mesh
            .find_halfedge(v, crate::halfedge::VertexId(1))
            .unwrap();
        s.mesh.collapse_edge(h, Vector2::new(2.0, 0.0)).unwrap();
        let text = surface_to_obj(&s);
        let nv = text.lines().filter(|l| l.starts_with("v ")).count();
        for l in text.lines().filter(|l| l.starts_with("f ")) {
            for idx in l[2..].split(' ') {
                let i: usize = idx.parse().unwrap();
                assert!((1..=nv).contains(&i));
            }
        }
    }

    #[test]
    fn depth_map_matches_plane() {
        let d = surface_depth_map(&square(), 2, 2, &[true; 4]);
        assert_eq!(d.get(0, 0), Some(0.25));
        assert_eq!(d.get(1, 1), Some(0.75));
    }
}
