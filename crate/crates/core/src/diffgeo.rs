//! Tangents, fundamental forms and principal curvatures from normals alone.
//!
//! All lengths here are in pixel units. For perspective cameras the
//! weak-perspective tangents are divided by the pixel pitch, which makes the
//! first fundamental form dimensionless (the identity for a fronto-parallel
//! plane on the optical axis) and curvatures come out in 1/pixel.

use nalgebra::{Matrix2, Vector2, Vector3};

use crate::camera::{CameraModel, Projection};
use crate::image_io::{NormalMap, MIN_NORMAL_Z};

/// Below this `det I` a metric is considered degenerate.
const MIN_METRIC_DET: f64 = 1e-12;

/// Relative bound on `|n·r| / |r|` before a perspective pixel counts as
/// grazing.
const MIN_RAY_INCIDENCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalForms {
    /// Metric tensor `I_ij = ∂ᵢx·∂ⱼx`.
    pub first: Matrix2<f64>,
    /// Symmetrized `II_ij = −∂ᵢx·∂ⱼn`.
    pub second: Matrix2<f64>,
}

/// Orthographic tangents `∂u x = e_x − (n_x/n_z) e_z`, `∂v x = e_y − (n_y/n_z) e_z`.
pub fn tangents_orthographic(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let nz = n.z.max(MIN_NORMAL_Z);
    (
        Vector3::new(1.0, 0.0, -n.x / nz),
        Vector3::new(0.0, 1.0, -n.y / nz),
    )
}

/// Weak-perspective tangents `(∂ᵢr − (n·∂ᵢr)/(n·r) r) · z̄`.
///
/// Returns `None` when the ray grazes the surface.
pub fn tangents_perspective(
    n: &Vector3<f64>,
    r: &Vector3<f64>,
    dr_u: &Vector3<f64>,
    dr_v: &Vector3<f64>,
    z_bar: f64,
) -> Option<(Vector3<f64>, Vector3<f64>)> {
    let nr = n.dot(r);
    if nr.abs() < MIN_RAY_INCIDENCE * r.norm() {
        return None;
    }
    let t = |dr: &Vector3<f64>| (dr - r * (n.dot(dr) / nr)) * z_bar;
    Some((t(dr_u), t(dr_v)))
}

/// Surface tangents at screen point `u` in pixel units.
pub fn surface_tangents(
    cam: &CameraModel,
    n: &Vector3<f64>,
    u: Vector2<f64>,
) -> Option<(Vector3<f64>, Vector3<f64>)> {
    match cam.projection() {
        Projection::Orthographic => Some(tangents_orthographic(n)),
        Projection::Perspective { mean_distance, .. } => {
            let (dr_u, dr_v) = cam.ray_derivatives();
            let (tu, tv) = tangents_perspective(n, &cam.ray(u), &dr_u, &dr_v, *mean_distance)?;
            let pitch = cam.pixel_pitch();
            Some((tu / pitch, tv / pitch))
        }
    }
}

fn gram(tu: &Vector3<f64>, tv: &Vector3<f64>) -> Matrix2<f64> {
    let off = tu.dot(tv);
    Matrix2::new(tu.dot(tu), off, off, tv.dot(tv))
}

/// First fundamental form for a surface patch with normal `n` seen at `u`.
pub fn first_fundamental_form(
    cam: &CameraModel,
    n: &Vector3<f64>,
    u: Vector2<f64>,
) -> Option<Matrix2<f64>> {
    let (tu, tv) = surface_tangents(cam, n, u)?;
    Some(gram(&tu, &tv))
}

/// One-dimensional finite difference of the normal field along a pixel axis:
/// central where both neighbors are foreground, one-sided where only one is,
/// zero otherwise.
fn normal_derivative(nm: &NormalMap, x: usize, y: usize, dx: isize, dy: isize) -> Vector3<f64> {
    let (xi, yi) = (x as isize, y as isize);
    let fetch = |sx: isize, sy: isize| {
        nm.is_foreground_at(sx, sy)
            .then(|| nm.normals()[sy as usize * nm.width() + sx as usize])
    };
    let center = nm.normals()[nm.index(x, y)];
    match (fetch(xi - dx, yi - dy), fetch(xi + dx, yi + dy)) {
        (Some(a), Some(b)) => (b - a) * 0.5,
        (None, Some(b)) => b - center,
        (Some(a), None) => center - a,
        (None, None) => Vector3::zeros(),
    }
}

/// Fundamental forms at foreground pixel `(x, y)`, or `None` for background
/// or grazing pixels.
pub fn fundamental_forms_at(
    nm: &NormalMap,
    cam: &CameraModel,
    x: usize,
    y: usize,
) -> Option<FundamentalForms> {
    let n = nm.normal(x, y)?;
    let center = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
    let (tu, tv) = surface_tangents(cam, &n, center)?;
    let dn_u = normal_derivative(nm, x, y, 1, 0);
    let dn_v = normal_derivative(nm, x, y, 0, 1);

    let raw = Matrix2::new(
        -tu.dot(&dn_u),
        -tu.dot(&dn_v),
        -tv.dot(&dn_u),
        -tv.dot(&dn_v),
    );
    Some(FundamentalForms {
        first: gram(&tu, &tv),
        second: (raw + raw.transpose()) * 0.5,
    })
}

/// Principal curvatures `(k1, k2)`, `k1 ≥ k2`: the generalized eigenvalues of
/// `κ I v = II v` in closed form. `None` for a degenerate metric.
pub fn principal_curvatures(ff: &FundamentalForms) -> Option<(f64, f64)> {
    let (i, ii) = (&ff.first, &ff.second);
    let a = i.determinant();
    if !(a > MIN_METRIC_DET) {
        return None;
    }
    let b = -(i[(0, 0)] * ii[(1, 1)] + i[(1, 1)] * ii[(0, 0)] - 2.0 * i[(0, 1)] * ii[(0, 1)]);
    let c = ii.determinant();
    let mean = -b / (2.0 * a);
    let gauss = c / a;
    let disc = (mean * mean - gauss).max(0.0).sqrt();
    Some((mean + disc, mean - disc))
}

/// Maximum absolute principal curvature per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    width: usize,
    height: usize,
    kappa_max: Vec<f64>,
    mask: Vec<bool>,
    degenerate: usize,
}

impl CurvatureField {
    /// Wrap precomputed values; background entries should be zero.
    pub fn from_values(width: usize, height: usize, kappa_max: Vec<f64>, mask: Vec<bool>) -> Self {
        assert_eq!(kappa_max.len(), width * height);
        assert_eq!(mask.len(), width * height);
        CurvatureField {
            width,
            height,
            kappa_max,
            mask,
            degenerate: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `kappa_max` at a foreground pixel.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.kappa_max[i])
    }

    /// Raw values; background entries are zero.
    pub fn values(&self) -> &[f64] {
        &self.kappa_max
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Foreground pixels whose own estimate was unusable and were filled
    /// from their neighbors.
    pub fn degenerate_count(&self) -> usize {
        self.degenerate
    }
}

/// Per-pixel `max(|k1|, |k2|)`. Pixels with a degenerate metric or grazing
/// ray take the largest value among their valid 4-neighbors, else zero.
pub fn curvature_field(nm: &NormalMap, cam: &CameraModel) -> CurvatureField {
    let (w, h) = (nm.width(), nm.height());
    let mut kappa = vec![0.0; w * h];
    let mut valid = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let k = fundamental_forms_at(nm, cam, x, y)
                .and_then(|ff| principal_curvatures(&ff))
                .map(|(k1, k2)| k1.abs().max(k2.abs()))
                .filter(|k| k.is_finite());
            if let Some(k) = k {
                kappa[y * w + x] = k;
                valid[y * w + x] = true;
            }
        }
    }

    let mut degenerate = 0;
    let filled: Vec<f64> = (0..w * h)
        .map(|i| {
            if valid[i] || !nm.mask()[i] {
                return kappa[i];
            }
            degenerate += 1;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            [(-1, 0), (1, 0), (0, -1), (0, 1)]
                .iter()
                .filter_map(|&(dx, dy)| {
                    let (sx, sy) = (x + dx, y + dy);
                    (sx >= 0 && sy >= 0 && (sx as usize) < w && (sy as usize) < h)
                        .then(|| sy as usize * w + sx as usize)
                })
                .filter(|&j| valid[j])
                .map(|j| kappa[j])
                .fold(0.0, f64::max)
        })
        .collect();

    CurvatureField {
        width: w,
        height: h,
        kappa_max: filled,
        mask: nm.mask().to_vec(),
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &Vector3<f64>, b: &Vector3<f64>, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn orthographic_tangent_examples() {
        let (tu, tv) = tangents_orthographic(&Vector3::z());
        assert_eq!((tu, tv), (Vector3::x(), Vector3::y()));

        let n = Vector3::new(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2);
        let (tu, tv) = tangents_orthographic(&n);
        assert!(close(&tu, &Vector3::new(1.0, 0.0, -1.0), 1e-15));
        assert_eq!(tv, Vector3::y());

        let n = Vector3::new(0.0, 0.6, 0.8);
        let (tu, tv) = tangents_orthographic(&n);
        assert_eq!(tu, Vector3::x());
        assert!(close(&tv, &Vector3::new(0.0, 1.0, -0.75), 1e-15));
    }

    #[test]
    fn perspective_tangent_examples() {
        let z = Vector3::z();
        let (tu, _) = tangents_perspective(&z, &z, &Vector3::x(), &Vector3::y(), 3.0).unwrap();
        assert!(close(&tu, &Vector3::new(3.0, 0.0, 0.0), 1e-15));

        let (tu2, _) = tangents_perspective(&z, &z, &Vector3::x(), &Vector3::y(), 6.0).unwrap();
        assert!(close(&tu2, &(tu * 2.0), 1e-15));

        let r = Vector3::new(1.0, 0.0, 1.0);
        let (tu, _) = tangents_perspective(&z, &r, &Vector3::x(), &Vector3::y(), 2.0).unwrap();
        assert!(close(&tu, &Vector3::new(2.0, 0.0, 0.0), 1e-15));
    }

    #[test]
    fn perspective_grazing_is_rejected() {
        let n = Vector3::x();
        assert!(
            tangents_perspective(&n, &Vector3::z(), &Vector3::x(), &Vector3::y(), 1.0).is_none()
        );
    }

    #[test]
    fn perspective_metric_is_identity_on_axis() {
        let cam = CameraModel::from_focal(500.0, 500.0, 32.0, 32.0, 200.0).unwrap();
        let i = first_fundamental_form(&cam, &Vector3::z(), Vector2::new(32.0, 32.0)).unwrap();
        assert!((i - Matrix2::identity()).norm() < 1e-12);
    }

    #[test]
    fn tangents_are_orthogonal_to_normal() {
        let cam = CameraModel::perspective(
            Matrix3::new(300.0, 0.0, 40.0, 0.0, 310.0, 25.0, 0.0, 0.0, 1.0),
            50.0,
        )
        .unwrap();
        for n in [
            Vector3::new(0.3, -0.4, 0.8),
            Vector3::new(-0.9, 0.1, 0.2),
            Vector3::new(0.0, 0.0, 1.0),
        ] {
            let n = n.normalize();
            let (tu, tv) = tangents_orthographic(&n);
            assert!(n.dot(&tu).abs() < 1e-9 && n.dot(&tv).abs() < 1e-9);
            let (tu, tv) = surface_tangents(&cam, &n, Vector2::new(3.0, 70.0)).unwrap();
            assert!(n.dot(&tu).abs() < 1e-9 && n.dot(&tv).abs() < 1e-9);
        }
    }

    #[test]
    fn principal_curvature_examples() {
        let ff = |first, second| FundamentalForms { first, second };
        let k = principal_curvatures(&ff(Matrix2::identity(), Matrix2::new(3.0, 0.0, 0.0, -1.0)));
        assert_eq!(k, Some((3.0, -1.0)));
        let k = principal_curvatures(&ff(Matrix2::identity() * 2.0, Matrix2::identity())).unwrap();
        assert!((k.0 - 0.5).abs() < 1e-15 && (k.1 - 0.5).abs() < 1e-15);
        let k = principal_curvatures(&ff(
            Matrix2::new(2.0, 0.0, 0.0, 1.0),
            Matrix2::new(2.0, 0.0, 0.0, 3.0),
        ))
        .unwrap();
        assert!((k.0 - 3.0).abs() < 1e-14 && (k.1 - 1.0).abs() < 1e-14);
        assert_eq!(
            principal_curvatures(&ff(Matrix2::zeros(), Matrix2::identity())),
            None
        );
    }

    #[test]
    fn curvature_is_metric_scale_invariant() {
        let first = Matrix2::new(1.7, 0.3, 0.3, 0.9);
        let second = Matrix2::new(-0.4, 0.25, 0.25, 1.1);
        let (a1, a2) = principal_curvatures(&FundamentalForms { first, second }).unwrap();
        for s in [1e-3, 0.37, 12.0, 4e4] {
            let (b1, b2) = principal_curvatures(&FundamentalForms {
                first: first * s,
                second: second * s,
            })
            .unwrap();
            assert!((a1 - b1).abs() < 1e-12 && (a2 - b2).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_has_zero_second_form() {
        let n = Vector3::new(0.2, -0.1, 1.0).normalize();
        let (nm, _) = NormalMap::from_fn(5, 5, |_, _| Some(n));
        let cam = CameraModel::orthographic(1.0).unwrap();
        let ff = fundamental_forms_at(&nm, &cam, 2, 2).unwrap();
        assert_eq!(ff.second, Matrix2::zeros());

        let (flat, _) = NormalMap::from_fn(5, 5, |_, _| Some(Vector3::z()));
        let ff = fundamental_forms_at(&flat, &cam, 0, 4).unwrap();
        assert_eq!(ff.first, Matrix2::identity());
    }

    #[test]
    fn isolated_pixel_has_zero_second_form() {
        let mut nm = NormalMap::empty(3, 3);
        nm.set(1, 1, Some(Vector3::new(0.1, 0.0, 1.0).normalize()));
        let cam = CameraModel::orthographic(1.0).unwrap();
        let ff = fundamental_forms_at(&nm, &cam, 1, 1).unwrap();
        assert_eq!(ff.second, Matrix2::zeros());
        assert!(fundamental_forms_at(&nm, &cam, 0, 0).is_none());
    }

    #[test]
    fn degenerate_pixel_inherits_neighbor_maximum() {
        // The middle pixel's normal is perpendicular to its viewing ray.
        let cam = CameraModel::perspective(Matrix3::identity(), 1.0).unwrap();
        let r = cam.ray(Vector2::new(1.5, 0.5));
        let graze = Vector3::new(-r.z, 0.0, r.x).normalize();
        assert!(graze.dot(&r).abs() < 1e-12);
        let (nm, _) = NormalMap::from_fn(3, 1, |x, _| {
            Some(match x {
                0 => Vector3::new(0.05, 0.0, 1.0),
                1 => graze,
                _ => Vector3::new(0.3, 0.0, 1.0),
            })
        });
        let cf = curvature_field(&nm, &cam);
        assert_eq!(cf.degenerate_count(), 1);
        let expected = cf.get(0, 0).unwrap().max(cf.get(2, 0).unwrap());
        assert_eq!(cf.get(1, 0), Some(expected));
    }
}
