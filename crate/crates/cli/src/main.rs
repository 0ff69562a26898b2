mod args;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use screenmesh::diffgeo::curvature_field;
use screenmesh::eval::{aligned_rmse, run_pipeline, scaling_csv, scaling_study, PipelineConfig};
use screenmesh::export::{screen_mesh_to_obj, surface_depth_map, write_surface, write_text};
use screenmesh::halfedge::ScreenMesh;
use screenmesh::image_io::{
    gaussian_blur_normals, load_depth_map, load_normal_map, save_depth_map, save_normal_map,
    NormalEncoding,
};
use screenmesh::integrate::{dense_mesh, integrate, CotangentMode, IntegrationOptions};
use screenmesh::remesh::{refine_observed, FlipMetric, IterationReport, SizingConfig};
use screenmesh::synthetic::{CylinderAxis, SceneKind, SyntheticScene};
use screenmesh::{CameraModel, DepthMap, NormalMap};

use args::*;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] screenmesh::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Curvature(a) => curvature(&a),
        Command::Mesh(a) => mesh(&a),
        Command::Integrate(a) => integrate_dense(&a),
        Command::Pipeline(a) => pipeline(&a),
        Command::Eval(a) => eval(&a),
        Command::Bench(a) => bench(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn camera(a: &CameraArgs) -> Result<CameraModel> {
    match a.camera {
        CameraKind::Ortho => Ok(CameraModel::orthographic(a.pixel_pitch)?),
        CameraKind::Persp => {
            let k = a
                .intrinsics
                .as_deref()
                .ok_or_else(|| CliError::Usage("--camera persp needs --intrinsics".into()))?;
            let z = a
                .mean_depth
                .ok_or_else(|| CliError::Usage("--camera persp needs --mean-depth".into()))?;
            Ok(CameraModel::from_focal(k[0], k[1], k[2], k[3], z)?)
        }
    }
}

fn sizing(a: &SizingArgs, cam: &CameraModel) -> Result<SizingConfig> {
    let mut cfg = match a.epsilon {
        Length::Pixels(e) => SizingConfig::new(e),
        Length::Physical(e) => SizingConfig::from_physical(e, cam),
    };
    cfg.outer_iterations = a.iterations;
    cfg.smoothing_iterations = a.smoothing_iterations;
    cfg.l_min = a.lmin;
    cfg.l_max = a.lmax;
    cfg.flip_metric = match a.flip_metric {
        FlipMetricArg::Screen => FlipMetric::Screen,
        FlipMetricArg::FirstForm => FlipMetric::FirstForm,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn integration(a: &SolverArgs) -> IntegrationOptions {
    IntegrationOptions {
        tolerance: a.tol,
        cotangent: match a.cotangent {
            CotangentArg::FirstForm => CotangentMode::FirstForm,
            CotangentArg::Screen => CotangentMode::Screen,
        },
    }
}

fn blurred(nm: &NormalMap, sigma: f64) -> NormalMap {
    if sigma > 0.0 {
        gaussian_blur_normals(nm, sigma)
    } else {
        nm.clone()
    }
}

fn scene_kind(a: &SceneArgs) -> SceneKind {
    match a.scene {
        SceneArg::Plane => SceneKind::Plane {
            slope_u: a.slope_u,
            slope_v: a.slope_v,
        },
        SceneArg::Sphere => SceneKind::Sphere {
            radius: a.radius,
            center: None,
        },
        SceneArg::Cylinder => SceneKind::Cylinder {
            radius: a.radius,
            axis: if a.horizontal {
                CylinderAxis::Horizontal
            } else {
                CylinderAxis::Vertical
            },
        },
        SceneArg::Wedge => SceneKind::Wedge {
            left_slope: a.left_slope,
            right_slope: a.right_slope,
            crease: None,
        },
        SceneArg::Sinusoid => SceneKind::Sinusoid {
            amplitude: a.amplitude,
            period: a.period,
        },
    }
}

fn encoding(path: &Path) -> Result<NormalEncoding> {
    NormalEncoding::from_path(path).ok_or_else(|| {
        CliError::Usage(format!(
            "{}: normal maps must end in .png or .pfm",
            path.display()
        ))
    })
}

fn load_normals(path: &Path) -> Result<NormalMap> {
    let (nm, report) = load_normal_map(path, encoding(path)?)?;
    if report.dropped() > 0 {
        eprintln!(
            "dropped {} foreground pixel(s): {} zero-length, {} grazing",
            report.dropped(),
            report.zero_length,
            report.grazing
        );
    }
    Ok(nm)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn synth(a: &SynthArgs) -> Result<()> {
    let cam = camera(&a.camera)?;
    let scene = SyntheticScene::new(scene_kind(&a.scene), a.width, a.height, cam);
    let (mut nm, depth) = scene.render()?;
    if a.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        for y in 0..nm.height() {
            for x in 0..nm.width() {
                if let Some(n) = nm.normal(x, y) {
                    let jitter = Vector3::from_fn(|_, _| rng.random_range(-a.noise..=a.noise));
                    nm.set(
                        x,
                        y,
                        (n + jitter).try_normalize(1e-12).filter(|m| m.z > 0.0),
                    );
                }
            }
        }
    }
    save_normal_map(&nm, &a.out_normals, encoding(&a.out_normals)?)?;
    if let Some(path) = &a.out_depth {
        save_depth_map(&depth, path)?;
    }
    println!("{} foreground pixels", nm.foreground_count());
    Ok(())
}

fn curvature(a: &CurvatureArgs) -> Result<()> {
    let cam = camera(&a.camera)?;
    let nm = blurred(&load_normals(&a.normals)?, a.blur_sigma);
    let cf = curvature_field(&nm, &cam);
    let map = DepthMap::from_fn(cf.width(), cf.height(), |x, y| cf.get(x, y));
    save_depth_map(&map, &a.out_pfm)?;
    let max = cf.values().iter().fold(0.0f64, |m, &k| m.max(k));
    println!(
        "max |kappa| {max}, {} degenerate pixel(s)",
        cf.degenerate_count()
    );
    Ok(())
}

fn debug_observer(dir: Option<&Path>) -> Result<impl FnMut(&IterationReport, &ScreenMesh)> {
    if let Some(d) = dir {
        create_dir(d)?;
    }
    let dir = dir.map(Path::to_path_buf);
    Ok(move |r: &IterationReport, m: &ScreenMesh| {
        eprintln!(
            "iteration {}: {} splits, {} collapses, {} flips, {} vertices",
            r.iteration, r.splits, r.collapses, r.flips, r.vertices
        );
        if let Some(d) = &dir {
            let path = d.join(format!("iteration_{:02}.obj", r.iteration));
            if let Err(e) = write_text(&path, &screen_mesh_to_obj(m)) {
                eprintln!("warning: {e}");
            }
        }
    })
}

fn mesh(a: &MeshArgs) -> Result<()> {
    let cam = camera(&a.camera)?;
    let cfg = sizing(&a.sizing, &cam)?;
    let nm = blurred(&load_normals(&a.normals)?, a.sizing.blur_sigma);
    let cf = curvature_field(&nm, &cam);
    let m = refine_observed(
        &nm,
        &cf,
        &cam,
        &cfg,
        debug_observer(a.debug_dir.as_deref())?,
    )?;
    write_text(&a.out_obj, &screen_mesh_to_obj(&m))?;
    println!("{} vertices, {} faces", m.vertex_count(), m.face_count());
    Ok(())
}

fn integrate_dense(a: &IntegrateArgs) -> Result<()> {
    let cam = camera(&a.camera)?;
    let nm = load_normals(&a.normals)?;
    let grid = dense_mesh(&nm, &cam)?;
    let (surface, info) = integrate(&grid, &cam, &integration(&a.solver))?;
    if let Some(path) = &a.out_obj {
        write_surface(&surface, path)?;
    }
    if let Some(path) = &a.out_pfm {
        save_depth_map(
            &surface_depth_map(&surface, nm.width(), nm.height(), nm.mask()),
            path,
        )?;
    }
    println!(
        "{} vertices, {} iterations, relative residual {:e}",
        grid.vertex_count(),
        info.iterations,
        info.relative_residual
    );
    Ok(())
}

fn pipeline(a: &PipelineArgs) -> Result<()> {
    let cam = camera(&a.camera)?;
    let nm = load_normals(&a.normals)?;
    let truth = a.ground_truth.as_deref().map(load_depth_map).transpose()?;
    let cfg = PipelineConfig {
        sizing: sizing(&a.sizing, &cam)?,
        blur_sigma: (a.sizing.blur_sigma > 0.0).then_some(a.sizing.blur_sigma),
        integration: integration(&a.solver),
        dense_baseline: a.dense_baseline,
    };
    let out = run_pipeline(
        &nm,
        &cam,
        &cfg,
        truth.as_ref(),
        debug_observer(a.debug_dir.as_deref())?,
    )?;
    if let Some(path) = &a.out_obj {
        write_surface(&out.surface, path)?;
    }
    if let Some(path) = &a.out_pfm {
        save_depth_map(
            &surface_depth_map(&out.surface, nm.width(), nm.height(), nm.mask()),
            path,
        )?;
    }
    if let Some(path) = &a.report_csv {
        write_text(path, &out.report.to_csv())?;
    }
    print!("{}", out.report.summary());
    let t = out.timings;
    println!("blur              {:.3} s", t.blur.as_secs_f64());
    println!("curvature         {:.3} s", t.curvature.as_secs_f64());
    println!("meshing           {:.3} s", t.meshing.as_secs_f64());
    println!("assembly          {:.3} s", t.assembly.as_secs_f64());
    println!("solve             {:.3} s", t.solve.as_secs_f64());
    if let Some(d) = t.dense_baseline {
        println!("dense baseline    {:.3} s", d.as_secs_f64());
    }
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let pred = load_depth_map(&a.prediction)?;
    let gt = load_depth_map(&a.ground_truth)?;
    if (pred.width(), pred.height()) != (gt.width(), gt.height()) {
        return Err(CliError::Usage("depth maps differ in size".into()));
    }
    let mut pairs = Vec::new();
    let mut missing = 0usize;
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            match (pred.get(x, y), gt.get(x, y)) {
                (Some(p), Some(t)) => pairs.push((p, t)),
                (None, Some(_)) => missing += 1,
                _ => {}
            }
        }
    }
    let rmse = aligned_rmse(&pairs, a.scale)?;
    println!("rmse {rmse}");
    println!("pixels {}, uncovered {missing}", pairs.len());
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let rows = scaling_study(
        scene_kind(&a.scene),
        a.base_resolution,
        &a.resolutions,
        a.epsilon,
        a.dense_baseline,
    )?;
    let csv = scaling_csv(&rows);
    if let Some(path) = &a.report_csv {
        write_text(path, &csv)?;
    }
    print!("{csv}");
    Ok(())
}
