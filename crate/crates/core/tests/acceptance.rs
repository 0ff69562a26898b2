//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use screenmesh::diffgeo::{curvature_field, principal_curvatures, FundamentalForms};
use screenmesh::eval::{
    peak_overshoot, rmse_aligned, rmse_aligned_where, run_pipeline, scaling_study, triangle_angles,
    AngleMetric, PipelineConfig, PipelineOutput,
};
use screenmesh::export::write_surface;
use screenmesh::image_io::{load_normal_map, save_normal_map, DepthMap, NormalEncoding};
use screenmesh::integrate::{assemble, CotangentMode};
use screenmesh::remesh::SizingConfig;
use screenmesh::synthetic::{SceneKind, SyntheticScene};
use screenmesh::{CameraModel, NormalMap};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ortho() -> CameraModel {
    CameraModel::orthographic(1.0).unwrap()
}

fn sphere_kind() -> SceneKind {
    SceneKind::Sphere {
        radius: 100.0,
        center: None,
    }
}

fn render(kind: SceneKind, size: usize) -> (NormalMap, DepthMap) {
    SyntheticScene::orthographic(kind, size, size)
        .render()
        .unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

/// The sphere at ε = 0.5 px with the dense baseline, validated after every
/// refinement iteration.
struct SphereRun {
    out: PipelineOutput,
    truth: DepthMap,
    invalid_iterations: Vec<String>,
    iterations: usize,
    elapsed: Duration,
}

fn sphere_run() -> SphereRun {
    let (nm, truth) = render(sphere_kind(), 256);
    let mut cfg = PipelineConfig::new(SizingConfig::new(0.5));
    cfg.dense_baseline = true;
    let mut invalid = Vec::new();
    let mut iterations = 0;
    let start = Instant::now();
    let out = run_pipeline(&nm, &ortho(), &cfg, Some(&truth), |r, m| {
        iterations += 1;
        if let Err(e) = m.validate() {
            invalid.push(format!("iteration {}: {e}", r.iteration));
        }
    })
    .unwrap();
    SphereRun {
        out,
        truth,
        invalid_iterations: invalid,
        iterations,
        elapsed: start.elapsed(),
    }
}

fn planar_reproduction() -> Outcome {
    let start = Instant::now();
    let (nm, truth) = render(
        SceneKind::Plane {
            slope_u: 0.3,
            slope_v: -0.2,
        },
        128,
    );
    let mut cfg = PipelineConfig::new(SizingConfig::new(0.5));
    cfg.dense_baseline = true;
    let out = run_pipeline(&nm, &ortho(), &cfg, Some(&truth), |_, _| {}).unwrap();
    let elapsed = start.elapsed();
    let adaptive = out.report.rmse.unwrap();
    let dense = out.report.dense_rmse.unwrap();
    outcome(
        adaptive < 1e-5 && dense < 1e-5 && elapsed < Duration::from_secs(10),
        format!(
            "adaptive RMSE {adaptive:.3e} px, dense RMSE {dense:.3e} px (< 1e-5), {} (< 10 s)",
            secs(elapsed)
        ),
    )
}

fn sphere_accuracy(run: &SphereRun) -> Outcome {
    let cam = ortho();
    let center = Vector2::new(128.0, 128.0);
    let inner =
        |x: usize, y: usize| (Vector2::new(x as f64 + 0.5, y as f64 + 0.5) - center).norm() < 90.0;
    let adaptive = rmse_aligned_where(&run.out.surface, &run.truth, &cam, inner).unwrap();
    let dense =
        rmse_aligned_where(run.out.dense.as_ref().unwrap(), &run.truth, &cam, inner).unwrap();
    outcome(
        adaptive.rmse <= 1.0 && dense.rmse <= adaptive.rmse && run.elapsed < Duration::from_secs(60),
        format!(
            "inner-disk RMSE {:.4} px (<= 1.0), dense {:.4} px (<= adaptive), {} pixels, {} (< 60 s)",
            adaptive.rmse,
            dense.rmse,
            adaptive.pixels,
            secs(run.elapsed)
        ),
    )
}

fn compression(run: &SphereRun) -> Outcome {
    let r = &run.out.report;
    outcome(
        r.compression_rate >= 0.90,
        format!(
            "{} vertices for {} pixels, compression {:.4} (>= 0.90)",
            r.vertex_count, r.foreground_pixel_count, r.compression_rate
        ),
    )
}

fn sublinear_growth() -> Outcome {
    let start = Instant::now();
    let rows = scaling_study(sphere_kind(), 256, &[256, 512, 1024], 0.5, false).unwrap();
    let elapsed = start.elapsed();
    let ratio = rows[2].vertices as f64 / rows[0].vertices as f64;
    let pixel_ratio = rows[2].foreground_pixels as f64 / rows[0].foreground_pixels as f64;
    let counts: Vec<String> = rows.iter().map(|r| r.vertices.to_string()).collect();
    outcome(
        ratio < 4.0 && pixel_ratio > 15.0 && elapsed < Duration::from_secs(600),
        format!(
            "V = {} at 256/512/1024, V ratio {ratio:.3} (< 4), pixel ratio {pixel_ratio:.2}, {} (< 600 s)",
            counts.join("/"),
            secs(elapsed)
        ),
    )
}

fn curvature_oracle() -> Outcome {
    let radius = 100.0;
    let (nm, _) = render(sphere_kind(), 256);
    let cf = curvature_field(&nm, &ortho());
    let center = Vector2::new(128.0, 128.0);
    let mut worst_field = 0.0f64;
    for y in 0..256 {
        for x in 0..256 {
            if (Vector2::new(x as f64 + 0.5, y as f64 + 0.5) - center).norm() < 0.7 * radius {
                let k = cf.get(x, y).unwrap();
                worst_field = worst_field.max((k * radius - 1.0).abs());
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst_pair = 0.0f64;
    for _ in 0..1000 {
        let ff = FundamentalForms {
            first: random_spd(&mut rng),
            second: random_symmetric(&mut rng),
        };
        let (k1, k2) = principal_curvatures(&ff).unwrap();
        let (e1, e2) = generalized_eigenvalues(&ff.first, &ff.second);
        let scale = e1.abs().max(e2.abs());
        worst_pair = worst_pair
            .max((k1 - e1).abs() / scale)
            .max((k2 - e2).abs() / scale);
    }
    outcome(
        worst_field <= 0.02 && worst_pair < 1e-10,
        format!(
            "inner-disk max relative deviation from 1/R {worst_field:.4} (<= 0.02), closed form vs eigen solver {worst_pair:.2e} (< 1e-10)"
        ),
    )
}

fn system_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa55e);
    let (mut asym, mut kernel, mut min_quad, mut fd_err) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for k in 0..50 {
        let cam = if k % 2 == 0 {
            ortho()
        } else {
            perspective_camera()
        };
        let mode = if k % 4 < 2 {
            CotangentMode::FirstForm
        } else {
            CotangentMode::Screen
        };
        let mesh = random_mesh(&mut rng, &cam);
        let sys = assemble(&mesh, &cam, mode);
        let a = &sys.matrix;
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                asym = asym.max((a.get(i, j) - a.get(j, i)).abs());
            }
        }
        kernel = a
            .mul_vec(&vec![1.0; a.dim()])
            .iter()
            .fold(kernel, |m, v| m.max(v.abs()));
        for _ in 0..100 {
            let x: Vec<f64> = (0..a.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xax: f64 = a.mul_vec(&x).iter().zip(&x).map(|(p, q)| p * q).sum();
            min_quad = min_quad.min(xax);
        }
        let z: Vec<f64> = (0..a.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let analytic: Vec<f64> = a
            .mul_vec(&z)
            .iter()
            .zip(&sys.rhs)
            .map(|(p, q)| p - q)
            .collect();
        let fd = energy_gradient_fd(&mesh, &cam, mode, &z, 1e-3);
        fd_err = fd_err.max(relative_error(&fd, &analytic));
    }
    outcome(
        asym <= 1e-12 && kernel <= 1e-10 && min_quad >= -1e-10 && fd_err < 1e-4,
        format!(
            "50 meshes: asymmetry {asym:.1e} (<= 1e-12), |A·1| {kernel:.1e} (<= 1e-10), min xᵀAx {min_quad:.3e} (>= -1e-10), gradient error {fd_err:.1e} (< 1e-4)"
        ),
    )
}

fn gibbs_suppression() -> Outcome {
    let (nm, truth) = render(
        SceneKind::Wedge {
            left_slope: 1.0,
            right_slope: -1.0,
            crease: None,
        },
        256,
    );
    let cam = ortho();
    let mut cfg = PipelineConfig::new(SizingConfig::new(0.5));
    cfg.dense_baseline = true;
    let out = run_pipeline(&nm, &cam, &cfg, Some(&truth), |_, _| {}).unwrap();
    let adaptive = peak_overshoot(&out.surface, &truth, &cam).unwrap();
    let dense = peak_overshoot(out.dense.as_ref().unwrap(), &truth, &cam).unwrap();
    outcome(
        adaptive < 0.02 && dense < 0.02,
        format!(
            "crease overshoot adaptive {:.3} %, dense {:.3} % of depth range (< 2 %)",
            100.0 * adaptive,
            100.0 * dense
        ),
    )
}

fn mesh_quality(run: &SphereRun) -> Outcome {
    let angles = triangle_angles(&run.out.surface.mesh, AngleMetric::FirstForm);
    let inside = angles
        .iter()
        .filter(|&&a| (20.0..=120.0).contains(&a))
        .count();
    let fraction = inside as f64 / angles.len() as f64;
    let screen = triangle_angles(&run.out.surface.mesh, AngleMetric::Screen);
    let screen_fraction = screen
        .iter()
        .filter(|&&a| (20.0..=120.0).contains(&a))
        .count() as f64
        / screen.len() as f64;
    outcome(
        fraction >= 0.99 && run.invalid_iterations.is_empty() && run.iterations == 10,
        format!(
            "{:.2} % of {} first-form angles in [20°, 120°] (>= 99 %; plain screen angles {:.2} %), {}/{} iterations valid{}",
            100.0 * fraction,
            angles.len(),
            100.0 * screen_fraction,
            run.iterations - run.invalid_iterations.len(),
            run.iterations,
            run.invalid_iterations
                .first()
                .map(|e| format!(", first failure: {e}"))
                .unwrap_or_default()
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (nm, truth) = render(sphere_kind(), 256);
    let input = dir.path().join("normals.png");
    save_normal_map(&nm, &input, NormalEncoding::Png16).unwrap();
    let mut artifacts = Vec::new();
    for run in 0..2 {
        let (nm, _) = load_normal_map(&input, NormalEncoding::Png16).unwrap();
        let cfg = PipelineConfig::new(SizingConfig::new(0.5));
        let out = run_pipeline(&nm, &ortho(), &cfg, Some(&truth), |_, _| {}).unwrap();
        let obj = dir.path().join(format!("run{run}.obj"));
        let csv = dir.path().join(format!("run{run}.csv"));
        write_surface(&out.surface, &obj).unwrap();
        fs::write(&csv, out.report.to_csv()).unwrap();
        artifacts.push((fs::read(obj).unwrap(), fs::read(csv).unwrap()));
    }
    let same_obj = artifacts[0].0 == artifacts[1].0;
    let same_csv = artifacts[0].1 == artifacts[1].1;
    outcome(
        same_obj && same_csv && !artifacts[0].0.is_empty(),
        format!(
            "OBJ identical: {same_obj} ({} bytes), CSV identical: {same_csv}",
            artifacts[0].0.len()
        ),
    )
}

fn monotone_epsilon() -> Outcome {
    let (nm, truth) = render(sphere_kind(), 256);
    let cam = ortho();
    let mut vertices = Vec::new();
    let mut errors = Vec::new();
    for eps in [0.25, 0.5, 1.0, 2.0] {
        let out = run_pipeline(
            &nm,
            &cam,
            &PipelineConfig::new(SizingConfig::new(eps)),
            None,
            |_, _| {},
        )
        .unwrap();
        vertices.push(out.report.vertex_count);
        errors.push(rmse_aligned(&out.surface, &truth, &cam).unwrap().rmse);
    }
    let v_ok = vertices.windows(2).all(|w| w[1] <= w[0]);
    let e_ok = errors.windows(2).all(|w| w[1] >= w[0]) && errors[3] > errors[0];
    let v: Vec<String> = vertices.iter().map(|v| v.to_string()).collect();
    let e: Vec<String> = errors.iter().map(|e| format!("{e:.4}")).collect();
    outcome(
        v_ok && e_ok,
        format!(
            "ε = 0.25/0.5/1/2 px: V = {} (non-increasing), RMSE = {} px (non-decreasing)",
            v.join("/"),
            e.join("/")
        ),
    )
}

fn main() -> ExitCode {
    let sphere = sphere_run();
    let criteria: [(&str, &dyn Fn() -> Outcome); 10] = [
        ("planar reproduction", &planar_reproduction),
        ("sphere accuracy", &|| sphere_accuracy(&sphere)),
        ("compression", &|| compression(&sphere)),
        ("sublinear growth", &sublinear_growth),
        ("curvature oracle", &curvature_oracle),
        ("system correctness", &system_correctness),
        ("Gibbs suppression", &gibbs_suppression),
        ("mesh quality", &|| mesh_quality(&sphere)),
        ("determinism", &determinism),
        ("monotone epsilon response", &monotone_epsilon),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
