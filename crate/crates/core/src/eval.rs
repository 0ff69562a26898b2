//! Accuracy and mesh-quality metrics, and the end-to-end pipeline.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::{Matrix2, Vector2};

use crate::camera::CameraModel;
use crate::diffgeo::{curvature_field, CurvatureField};
use crate::error::{Error, Result};
use crate::halfedge::ScreenMesh;
use crate::image_io::{gaussian_blur_normals, DepthMap, NormalMap, DEFAULT_BLUR_SIGMA};
use crate::integrate::{
    assemble, dense_mesh, lift, solve, IntegratedSurface, IntegrationOptions, SolveInfo,
};
use crate::remesh::{
    interpolate_at_pixels, rasterize, refine_observed, IterationReport, SizingConfig,
};
use crate::synthetic::{SceneKind, SyntheticScene};

/// Alignment-corrected depth error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseResult {
    pub rmse: f64,
    /// Pixels that entered the error.
    pub pixels: usize,
    /// Selected ground-truth pixels the mesh does not cover.
    pub uncovered: usize,
}

/// Depth of the surface at every pixel center covered by its mesh.
pub fn depth_at_pixels(
    surface: &IntegratedSurface,
    width: usize,
    height: usize,
    mask: &[bool],
) -> Vec<Option<f64>> {
    let coverage = rasterize(&surface.mesh, width, height, mask);
    interpolate_at_pixels(&surface.mesh, &coverage, |v| surface.depth(v))
}

/// RMSE between predicted and true depth over the ground-truth foreground,
/// after removing the gauge: the mean offset for orthographic cameras, the
/// least-squares scale for perspective ones.
pub fn rmse_aligned(
    pred: &IntegratedSurface,
    gt: &DepthMap,
    cam: &CameraModel,
) -> Result<RmseResult> {
    rmse_aligned_where(pred, gt, cam, |_, _| true)
}

/// [`rmse_aligned`] restricted to pixels where `select(x, y)` holds.
pub fn rmse_aligned_where<F>(
    pred: &IntegratedSurface,
    gt: &DepthMap,
    cam: &CameraModel,
    select: F,
) -> Result<RmseResult>
where
    F: Fn(usize, usize) -> bool,
{
    let (w, h) = (gt.width(), gt.height());
    let mask: Vec<bool> = (0..w * h)
        .map(|i| gt.mask()[i] && select(i % w, i / w))
        .collect();
    let predicted = depth_at_pixels(pred, w, h, &mask);
    let mut pairs = Vec::new();
    let mut uncovered = 0;
    for i in 0..w * h {
        if !mask[i] {
            continue;
        }
        match predicted[i] {
            Some(p) => pairs.push((p, gt.get(i % w, i / w).expect("masked pixel has depth"))),
            None => uncovered += 1,
        }
    }
    let rmse = aligned_rmse(&pairs, cam.is_perspective())?;
    Ok(RmseResult {
        rmse,
        pixels: pairs.len(),
        uncovered,
    })
}

/// RMSE of `(prediction, truth)` pairs after optimal offset or scale.
pub fn aligned_rmse(pairs: &[(f64, f64)], scale: bool) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let n = pairs.len() as f64;
    let residuals: Box<dyn Iterator<Item = f64>> = if scale {
        let num: f64 = pairs.iter().map(|(p, t)| p * t).sum();
        let den: f64 = pairs.iter().map(|(p, _)| p * p).sum();
        let s = if den > 0.0 { num / den } else { 1.0 };
        Box::new(pairs.iter().map(move |(p, t)| s * p - t))
    } else {
        let offset = pairs.iter().map(|(p, t)| t - p).sum::<f64>() / n;
        Box::new(pairs.iter().map(move |(p, t)| p + offset - t))
    };
    Ok((residuals.map(|r| r * r).sum::<f64>() / n).sqrt())
}

/// Highest aligned predicted depth above the highest true depth, as a
/// fraction of the true depth range. Negative when the prediction stays
/// below the true maximum.
pub fn peak_overshoot(pred: &IntegratedSurface, gt: &DepthMap, cam: &CameraModel) -> Result<f64> {
    let (w, h) = (gt.width(), gt.height());
    let predicted = depth_at_pixels(pred, w, h, gt.mask());
    let pairs: Vec<(f64, f64)> = (0..w * h)
        .filter_map(|i| Some((predicted[i]?, gt.get(i % w, i / w)?)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let aligned: Vec<(f64, f64)> = if cam.is_perspective() {
        let s = pairs.iter().map(|(p, t)| p * t).sum::<f64>()
            / pairs.iter().map(|(p, _)| p * p).sum::<f64>();
        pairs.iter().map(|&(p, t)| (s * p, t)).collect()
    } else {
        let offset = pairs.iter().map(|(p, t)| t - p).sum::<f64>() / pairs.len() as f64;
        pairs.iter().map(|&(p, t)| (p + offset, t)).collect()
    };
    let max_pred = aligned
        .iter()
        .map(|a| a.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_true = aligned
        .iter()
        .map(|a| a.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_true = aligned.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
    let range = max_true - min_true;
    if !(range > 0.0) {
        return Err(Error::InvalidParameter(
            "ground truth has no depth range".into(),
        ));
    }
    Ok((max_pred - max_true) / range)
}

/// How triangle angles are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleMetric {
    Screen,
    /// With each face's first fundamental form.
    FirstForm,
}

/// All interior angles of all faces, in degrees.
pub fn triangle_angles(mesh: &ScreenMesh, metric: AngleMetric) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.face_count() * 3);
    for f in mesh.faces() {
        let p = mesh.face_positions(f);
        let m = match metric {
            AngleMetric::Screen => Matrix2::identity(),
            AngleMetric::FirstForm => mesh.face(f).first_form,
        };
        for k in 0..3 {
            let a: Vector2<f64> = p[(k + 1) % 3] - p[k];
            let b: Vector2<f64> = p[(k + 2) % 3] - p[k];
            let ab = a.dot(&(m * b));
            let cross = (a.dot(&(m * a)) * b.dot(&(m * b)) - ab * ab)
                .max(0.0)
                .sqrt();
            out.push(cross.atan2(ab).to_degrees());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// Share of angles within `[20°, 120°]`.
    pub fraction_in_range: f64,
}

impl AngleStats {
    pub fn of(angles: &[f64]) -> Self {
        if angles.is_empty() {
            return AngleStats {
                min: f64::NAN,
                median: f64::NAN,
                max: f64::NAN,
                fraction_in_range: f64::NAN,
            };
        }
        let mut sorted = angles.to_vec();
        sorted.sort_by(f64::total_cmp);
        let inside = sorted
            .iter()
            .filter(|&&a| (20.0..=120.0).contains(&a))
            .count();
        AngleStats {
            min: sorted[0],
            median: sorted[sorted.len() / 2],
            max: sorted[sorted.len() - 1],
            fraction_in_range: inside as f64 / sorted.len() as f64,
        }
    }
}

pub fn compression_rate(vertices: usize, foreground_pixels: usize) -> f64 {
    1.0 - vertices as f64 / foreground_pixels as f64
}

/// Wall-clock time per pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub blur: Duration,
    pub curvature: Duration,
    pub meshing: Duration,
    pub assembly: Duration,
    pub solve: Duration,
    pub dense_baseline: Option<Duration>,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.blur + self.curvature + self.meshing + self.assembly + self.solve
    }
}

/// Deterministic outcome of a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub vertex_count: usize,
    pub face_count: usize,
    pub foreground_pixel_count: usize,
    pub compression_rate: f64,
    /// Physical units; present when ground truth was supplied.
    pub rmse: Option<f64>,
    pub dense_rmse: Option<f64>,
    /// Degrees, measured with each face's first fundamental form.
    pub min_angle: f64,
    pub median_angle: f64,
    pub solver_iterations: usize,
}

impl EvalReport {
    const COLUMNS: &'static str = "vertex_count,face_count,foreground_pixel_count,compression_rate,rmse,dense_rmse,min_angle,median_angle,solver_iterations";

    /// Header plus one data row. Missing values are empty fields.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut s = String::new();
        writeln!(s, "{}", Self::COLUMNS).unwrap();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            self.vertex_count,
            self.face_count,
            self.foreground_pixel_count,
            self.compression_rate,
            opt(self.rmse),
            opt(self.dense_rmse),
            self.min_angle,
            self.median_angle,
            self.solver_iterations
        )
        .unwrap();
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(s, "vertices          {}", self.vertex_count).unwrap();
        writeln!(s, "faces             {}", self.face_count).unwrap();
        writeln!(s, "foreground pixels {}", self.foreground_pixel_count).unwrap();
        writeln!(s, "compression       {:.4}", self.compression_rate).unwrap();
        if let Some(r) = self.rmse {
            writeln!(s, "rmse              {r:.6}").unwrap();
        }
        if let Some(r) = self.dense_rmse {
            writeln!(s, "dense rmse        {r:.6}").unwrap();
        }
        writeln!(s, "min angle         {:.2}", self.min_angle).unwrap();
        writeln!(s, "median angle      {:.2}", self.median_angle).unwrap();
        writeln!(s, "solver iterations {}", self.solver_iterations).unwrap();
        s
    }
}

/// Settings for [`run_pipeline`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub sizing: SizingConfig,
    /// Gaussian blur applied to the normals before anything else; `None`
    /// disables it.
    pub blur_sigma: Option<f64>,
    pub integration: IntegrationOptions,
    /// Also integrate on the pixel grid for comparison.
    pub dense_baseline: bool,
}

impl PipelineConfig {
    pub fn new(sizing: SizingConfig) -> Self {
        PipelineConfig {
            sizing,
            blur_sigma: Some(DEFAULT_BLUR_SIGMA),
            integration: IntegrationOptions::default(),
            dense_baseline: false,
        }
    }
}

pub struct PipelineOutput {
    pub surface: IntegratedSurface,
    pub dense: Option<IntegratedSurface>,
    pub curvature: CurvatureField,
    pub report: EvalReport,
    pub timings: StageTimings,
    pub solve_info: SolveInfo,
}

/// Blur, curvature, refinement, assembly, solve and lift. With `truth`,
/// the report carries the aligned RMSE. `observer` sees every refinement
/// iteration.
pub fn run_pipeline<F>(
    nm: &NormalMap,
    cam: &CameraModel,
    cfg: &PipelineConfig,
    truth: Option<&DepthMap>,
    observer: F,
) -> Result<PipelineOutput>
where
    F: FnMut(&IterationReport, &ScreenMesh),
{
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let blurred = match cfg.blur_sigma {
        Some(sigma) if sigma > 0.0 => gaussian_blur_normals(nm, sigma),
        _ => nm.clone(),
    };
    timings.blur = t.elapsed();

    let t = Instant::now();
    let cf = curvature_field(&blurred, cam);
    timings.curvature = t.elapsed();

    let t = Instant::now();
    let mesh = refine_observed(&blurred, &cf, cam, &cfg.sizing, observer)?;
    timings.meshing = t.elapsed();

    let t = Instant::now();
    let sys = assemble(&mesh, cam, cfg.integration.cotangent);
    timings.assembly = t.elapsed();

    let t = Instant::now();
    let (z, solve_info) = solve(&sys, cfg.integration.tolerance)?;
    timings.solve = t.elapsed();
    let surface = lift(&mesh, &z, cam);

    let dense = if cfg.dense_baseline {
        let t = Instant::now();
        let grid = dense_mesh(&blurred, cam)?;
        let sys = assemble(&grid, cam, cfg.integration.cotangent);
        let (z, _) = solve(&sys, cfg.integration.tolerance)?;
        timings.dense_baseline = Some(t.elapsed());
        Some(lift(&grid, &z, cam))
    } else {
        None
    };

    let rmse = truth
        .map(|gt| rmse_aligned(&surface, gt, cam).map(|r| r.rmse))
        .transpose()?;
    let dense_rmse = match (truth, &dense) {
        (Some(gt), Some(d)) => Some(rmse_aligned(d, gt, cam)?.rmse),
        _ => None,
    };
    let angles = AngleStats::of(&triangle_angles(&mesh, AngleMetric::FirstForm));
    let report = EvalReport {
        vertex_count: mesh.vertex_count(),
        face_count: mesh.face_count(),
        foreground_pixel_count: nm.foreground_count(),
        compression_rate: compression_rate(mesh.vertex_count(), nm.foreground_count()),
        rmse,
        dense_rmse,
        min_angle: angles.min,
        median_angle: angles.median,
        solver_iterations: solve_info.iterations,
    };
    Ok(PipelineOutput {
        surface,
        dense,
        curvature: cf,
        report,
        timings,
        solve_info,
    })
}

/// One resolution of a [`scaling_study`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub resolution: usize,
    pub foreground_pixels: usize,
    pub vertices: usize,
    /// Meshing plus integration.
    pub adaptive_seconds: f64,
    pub dense_seconds: Option<f64>,
}

/// Render `kind`, defined in pixels at `base_resolution`, at each of
/// `resolutions` with the pixel pitch shrunk so the physical scene stays
/// fixed, and run the pipeline with the physical `epsilon`.
pub fn scaling_study(
    kind: SceneKind,
    base_resolution: usize,
    resolutions: &[usize],
    epsilon: f64,
    dense_baseline: bool,
) -> Result<Vec<ScalingRow>> {
    if resolutions.len() < 2 {
        return Err(Error::InvalidParameter(
            "a scaling study needs at least two resolutions".into(),
        ));
    }
    let mut rows = Vec::with_capacity(resolutions.len());
    for &res in resolutions {
        let factor = res as f64 / base_resolution as f64;
        let cam = CameraModel::orthographic(1.0 / factor)?;
        let scene = SyntheticScene::new(kind.scaled(factor), res, res, cam);
        let (nm, _) = scene.render()?;
        let mut cfg = PipelineConfig::new(SizingConfig::from_physical(epsilon, &cam));
        cfg.dense_baseline = dense_baseline;
        let out = run_pipeline(&nm, &cam, &cfg, None, |_, _| {})?;
        let t = out.timings;
        rows.push(ScalingRow {
            resolution: res,
            foreground_pixels: nm.foreground_count(),
            vertices: out.report.vertex_count,
            adaptive_seconds: (t.total() - t.blur).as_secs_f64(),
            dense_seconds: t.dense_baseline.map(|d| d.as_secs_f64()),
        });
    }
    Ok(rows)
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut s =
        String::from("resolution,foreground_pixels,vertices,adaptive_seconds,dense_seconds\n");
    for r in rows {
        let dense = r.dense_seconds.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{}",
            r.resolution, r.foreground_pixels, r.vertices, r.adaptive_seconds, dense
        )
        .unwrap();
    }
    s
}
