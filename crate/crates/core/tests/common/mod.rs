#![allow(dead_code)]

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::Rng;

use screenmesh::diffgeo::first_fundamental_form;
use screenmesh::halfedge::{ScreenMesh, VertexData};
use screenmesh::integrate::CotangentMode;
use screenmesh::CameraModel;

/// Principal point of [`perspective_camera`]; random meshes are centered on it.
pub const PRINCIPAL_POINT: f64 = 20.0;

pub fn perspective_camera() -> CameraModel {
    CameraModel::from_focal(60.0, 55.0, PRINCIPAL_POINT, PRINCIPAL_POINT, 50.0).unwrap()
}

/// A unit normal with `n_z ≥ 0.3`.
pub fn random_normal(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let n = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.3..1.0),
        )
        .normalize();
        if n.z >= 0.3 {
            return n;
        }
    }
}

/// Jittered grid of at most 30 vertices with random diagonals, random face
/// normals facing every corner ray and matching first fundamental forms.
pub fn random_mesh(rng: &mut impl Rng, cam: &CameraModel) -> ScreenMesh {
    let nx = rng.random_range(3..=5usize);
    let ny = rng.random_range(3..=6usize);
    let spacing = 8.0;
    let origin = PRINCIPAL_POINT - 0.5 * spacing * (nx - 1) as f64;
    let mut verts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let jitter = Vector2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let p = Vector2::new(origin + spacing * i as f64, origin + spacing * j as f64) + jitter;
            verts.push(VertexData::at(p));
        }
    }
    let id = |i: usize, j: usize| (j * nx + i) as u32;
    let mut tris = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if rng.random_bool(0.5) {
                tris.extend([[a, b, c], [a, c, d]]);
            } else {
                tris.extend([[a, b, d], [b, c, d]]);
            }
        }
    }
    let mut mesh = ScreenMesh::from_triangles(verts, &tris).unwrap();
    for f in mesh.faces().collect::<Vec<_>>() {
        let rays = mesh.face_vertices(f).map(|v| cam.ray(mesh.position(v)));
        let n = loop {
            let n = random_normal(rng);
            if rays.iter().all(|r| n.dot(r) >= 0.3 * r.norm()) {
                break n;
            }
        };
        let centroid = mesh.face_centroid(f);
        let data = mesh.face_mut(f);
        data.normal = n;
        data.first_form = first_fundamental_form(cam, &n, centroid).unwrap();
    }
    mesh
}

/// The integration energy of per-vertex values `z`, summed face by face from
/// the linear interpolant, with exact quadrature of `n·r` and `(n·r)²`.
/// Constant terms are dropped.
pub fn integration_energy(
    mesh: &ScreenMesh,
    cam: &CameraModel,
    mode: CotangentMode,
    z: &[f64],
) -> f64 {
    let mut total = 0.0;
    for f in mesh.faces() {
        let vs = mesh.face_vertices(f);
        let p = vs.map(|v| mesh.position(v));
        let data = mesh.face(f);
        let n = data.normal;
        let metric = match mode {
            CotangentMode::FirstForm => data.first_form,
            CotangentMode::Screen => Matrix2::identity(),
        };
        let edges = Matrix2::from_rows(&[(p[1] - p[0]).transpose(), (p[2] - p[0]).transpose()]);
        let dz = Vector2::new(
            z[vs[1].idx()] - z[vs[0].idx()],
            z[vs[2].idx()] - z[vs[0].idx()],
        );
        let grad = edges.try_inverse().unwrap() * dz;
        let area = 0.5 * edges.determinant().abs();

        // Edge midpoints integrate quadratics exactly over a triangle.
        let mids = [(0, 1), (1, 2), (2, 0)].map(|(a, b)| n.dot(&cam.ray((p[a] + p[b]) * 0.5)));
        let int_p = area / 3.0 * mids.iter().sum::<f64>();
        let int_p2 = area / 3.0 * mids.iter().map(|v| v * v).sum::<f64>();

        let c = mesh.face_centroid(f);
        let g = Vector2::new(
            n.dot(&(cam.ray(c + Vector2::x()) - cam.ray(c))),
            n.dot(&(cam.ray(c + Vector2::y()) - cam.ray(c))),
        );
        let g = if cam.is_perspective() {
            g
        } else {
            Vector2::new(n.x, n.y)
        };

        let inv = metric.try_inverse().unwrap();
        let scale = metric.determinant().sqrt();
        total += scale * (int_p2 * grad.dot(&(inv * grad)) + 2.0 * int_p * grad.dot(&(inv * g)));
    }
    total
}

/// Central-difference gradient of [`integration_energy`].
pub fn energy_gradient_fd(
    mesh: &ScreenMesh,
    cam: &CameraModel,
    mode: CotangentMode,
    z: &[f64],
    h: f64,
) -> Vec<f64> {
    let mut z = z.to_vec();
    let mut out = vec![0.0; z.len()];
    for v in mesh.vertices() {
        let i = v.idx();
        let z0 = z[i];
        z[i] = z0 + h;
        let up = integration_energy(mesh, cam, mode, &z);
        z[i] = z0 - h;
        let down = integration_energy(mesh, cam, mode, &z);
        z[i] = z0;
        out[i] = (up - down) / (2.0 * h);
    }
    out
}

/// Generalized eigenvalues of `second v = κ first v` via a Cholesky
/// reduction to a symmetric eigenproblem, descending.
pub fn generalized_eigenvalues(first: &Matrix2<f64>, second: &Matrix2<f64>) -> (f64, f64) {
    let l = first.cholesky().expect("metric is positive definite").l();
    let l_inv = l.try_inverse().unwrap();
    let reduced = l_inv * second * l_inv.transpose();
    let reduced = (reduced + reduced.transpose()) * 0.5;
    let e = reduced.symmetric_eigen().eigenvalues;
    (e[0].max(e[1]), e[0].min(e[1]))
}

pub fn random_spd(rng: &mut impl Rng) -> Matrix2<f64> {
    let a = Matrix2::from_fn(|_, _| rng.random_range(-2.0..2.0));
    a * a.transpose() + Matrix2::identity() * rng.random_range(0.05..1.0)
}

pub fn random_symmetric(rng: &mut impl Rng) -> Matrix2<f64> {
    let a = Matrix2::from_fn(|_, _| rng.random_range(-1.0..1.0));
    a + a.transpose()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(f64::MIN_POSITIVE)
}
