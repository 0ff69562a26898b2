//! Pixel-center coverage of mesh faces.

use nalgebra::Vector2;

use crate::halfedge::{FaceId, ScreenMesh, VertexId};

const NONE: u32 = u32::MAX;

/// Which foreground pixels each face covers, stored as compressed rows
/// indexed by face id, plus the inverse map from pixel to face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    width: usize,
    height: usize,
    offsets: Vec<usize>,
    pixels: Vec<u32>,
    owner: Vec<u32>,
}

impl Coverage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Linear pixel indices covered by face `f`, in row-major order.
    pub fn pixels(&self, f: FaceId) -> &[u32] {
        match (self.offsets.get(f.idx()), self.offsets.get(f.idx() + 1)) {
            (Some(&a), Some(&b)) => &self.pixels[a..b],
            _ => &[],
        }
    }

    /// Face owning the pixel with linear index `i`.
    pub fn owner(&self, i: usize) -> Option<FaceId> {
        match self.owner[i] {
            NONE => None,
            f => Some(FaceId(f)),
        }
    }

    pub fn covered_count(&self) -> usize {
        self.pixels.len()
    }
}

/// Edge function of `p` against the directed edge `a → b`, evaluated with the
/// endpoints in a canonical order so that both faces sharing an edge get
/// exactly opposite values.
#[inline]
fn edge_function(a: Vector2<f64>, b: Vector2<f64>, p: Vector2<f64>) -> f64 {
    let swap = (b.x, b.y) < (a.x, a.y);
    let (s, t) = if swap { (b, a) } else { (a, b) };
    let e = (t.x - s.x) * (p.y - s.y) - (t.y - s.y) * (p.x - s.x);
    if swap {
        -e
    } else {
        e
    }
}

/// Owner-side test for points exactly on an edge. Of the two directions of
/// an edge exactly one qualifies.
#[inline]
fn is_top_left(a: Vector2<f64>, b: Vector2<f64>) -> bool {
    let d = b - a;
    d.y < 0.0 || (d.y == 0.0 && d.x > 0.0)
}

/// Whether `p` lies inside the positively oriented triangle `tri`, using the
/// top-left rule for ties.
pub fn contains(tri: &[Vector2<f64>; 3], p: Vector2<f64>) -> bool {
    (0..3).all(|k| {
        let (a, b) = (tri[k], tri[(k + 1) % 3]);
        let e = edge_function(a, b, p);
        e > 0.0 || (e == 0.0 && is_top_left(a, b))
    })
}

/// Barycentric coordinates of `p` with respect to `tri`.
pub fn barycentric(tri: &[Vector2<f64>; 3], p: Vector2<f64>) -> [f64; 3] {
    let [a, b, c] = *tri;
    let area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let w0 = ((b.x - p.x) * (c.y - p.y) - (b.y - p.y) * (c.x - p.x)) / area;
    let w1 = ((c.x - p.x) * (a.y - p.y) - (c.y - p.y) * (a.x - p.x)) / area;
    [w0, w1, 1.0 - w0 - w1]
}

/// Assign every foreground pixel whose center lies inside a face to that
/// face. `mask` is row-major with `width * height` entries.
pub fn rasterize(mesh: &ScreenMesh, width: usize, height: usize, mask: &[bool]) -> Coverage {
    assert_eq!(mask.len(), width * height);
    let mut owner = vec![NONE; width * height];
    let mut counts = vec![0usize; mesh.face_capacity()];

    for f in mesh.faces() {
        let tri = mesh.face_positions(f);
        let (lo, hi) = pixel_range(&tri, width, height);
        for y in lo.1..hi.1 {
            for x in lo.0..hi.0 {
                let i = y * width + x;
                if !mask[i] || owner[i] != NONE {
                    continue;
                }
                if contains(&tri, Vector2::new(x as f64 + 0.5, y as f64 + 0.5)) {
                    owner[i] = f.0;
                    counts[f.idx()] += 1;
                }
            }
        }
    }

    let mut offsets = Vec::with_capacity(counts.len() + 1);
    offsets.push(0);
    for c in &counts {
        offsets.push(offsets.last().unwrap() + c);
    }
    let mut fill = offsets[..counts.len()].to_vec();
    let mut pixels = vec![0u32; *offsets.last().unwrap()];
    for (i, &f) in owner.iter().enumerate() {
        if f != NONE {
            pixels[fill[f as usize]] = i as u32;
            fill[f as usize] += 1;
        }
    }
    Coverage {
        width,
        height,
        offsets,
        pixels,
        owner,
    }
}

/// Half-open pixel index range whose centers may fall in the triangle.
fn pixel_range(
    tri: &[Vector2<f64>; 3],
    width: usize,
    height: usize,
) -> ((usize, usize), (usize, usize)) {
    let min_x = tri.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let max_x = tri.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = tri.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let max_y = tri.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let clamp = |v: f64, n: usize| v.max(0.0).min(n as f64) as usize;
    (
        (
            clamp((min_x - 0.5).floor(), width),
            clamp((min_y - 0.5).floor(), height),
        ),
        (
            clamp((max_x - 0.5).floor() + 1.0, width),
            clamp((max_y - 0.5).floor() + 1.0, height),
        ),
    )
}

/// Interpolate a per-vertex scalar at every covered pixel center. Uncovered
/// pixels are `None`.
pub fn interpolate_at_pixels(
    mesh: &ScreenMesh,
    coverage: &Coverage,
    values: impl Fn(VertexId) -> f64,
) -> Vec<Option<f64>> {
    let mut out = vec![None; coverage.width * coverage.height];
    for f in mesh.faces() {
        let verts = mesh.face_vertices(f);
        let tri = mesh.face_positions(f);
        let vals = verts.map(&values);
        for &i in coverage.pixels(f) {
            let i = i as usize;
            let p = Vector2::new(
                (i % coverage.width) as f64 + 0.5,
                (i / coverage.width) as f64 + 0.5,
            );
            let w = barycentric(&tri, p);
            out[i] = Some(w[0] * vals[0] + w[1] * vals[1] + w[2] * vals[2]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::remesh::initial_triangulation;

    #[test]
    fn unit_square_center_has_one_owner() {
        let mesh = initial_triangulation(1, 1, &[true]).unwrap();
        let cov = rasterize(&mesh, 1, 1, &[true]);
        let owners: Vec<_> = mesh
            .faces()
            .filter(|&f| !cov.pixels(f).is_empty())
            .collect();
        assert_eq!(owners.len(), 1);
        let tri = mesh.face_positions(owners[0]);
        assert!(contains(&tri, Vector2::new(0.5, 0.5)));
        assert_eq!(cov.owner(0), Some(owners[0]));
    }

    #[test]
    fn background_pixels_are_not_assigned() {
        let mesh = initial_triangulation(2, 1, &[true, true]).unwrap();
        let cov = rasterize(&mesh, 2, 1, &[true, false]);
        assert_eq!(cov.covered_count(), 1);
        assert_eq!(cov.owner(1), None);
        assert!(mesh.faces().filter(|&f| cov.pixels(f).is_empty()).count() >= 2);
    }

    #[test]
    fn full_grid_matches_brute_force() {
        let mask = vec![true; 16];
        let mesh = initial_triangulation(4, 4, &mask).unwrap();
        let cov = rasterize(&mesh, 4, 4, &mask);
        assert_eq!(cov.covered_count(), 16);
        for y in 0..4 {
            for x in 0..4 {
                let p = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
                let hits: Vec<FaceId> = mesh
                    .faces()
                    .filter(|&f| contains(&mesh.face_positions(f), p))
                    .collect();
                assert_eq!(hits.len(), 1, "pixel ({x}, {y})");
                assert_eq!(cov.owner(y * 4 + x), Some(hits[0]));
            }
        }
    }

    #[test]
    fn shared_edge_through_centers_is_claimed_once() {
        // Two faces meeting along the vertical line x = 1.5, which passes
        // through the centers of the second pixel column.
        let verts = [
            (0.0, 0.0),
            (1.5, 0.0),
            (3.0, 0.0),
            (0.0, 3.0),
            (1.5, 3.0),
            (3.0, 3.0),
        ]
        .iter()
        .map(|&(x, y)| crate::halfedge::VertexData::at(Vector2::new(x, y)))
        .collect();
        let mesh = ScreenMesh::from_triangles(verts, &[[0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4]])
            .unwrap();
        let mask = vec![true; 9];
        let cov = rasterize(&mesh, 3, 3, &mask);
        assert_eq!(cov.covered_count(), 9);
        let total: usize = mesh.faces().map(|f| cov.pixels(f).len()).sum();
        assert_eq!(total, 9);
    }

    #[test]
    fn barycentric_reproduces_linear_functions() {
        let tri = [
            Vector2::new(0.2, 0.1),
            Vector2::new(5.0, 1.0),
            Vector2::new(2.0, 4.0),
        ];
        let f = |p: Vector2<f64>| 3.0 * p.x - 2.0 * p.y + 0.5;
        let p = Vector2::new(2.1, 1.7);
        let w = barycentric(&tri, p);
        let interp = w[0] * f(tri[0]) + w[1] * f(tri[1]) + w[2] * f(tri[2]);
        assert!((interp - f(p)).abs() < 1e-12);
    }
}
