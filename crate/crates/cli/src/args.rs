use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "screenmesh",
    version,
    about = "Adaptive screen-space meshing and normal integration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render an analytic scene to a normal map and a depth map.
    Synth(SynthArgs),
    /// Write the per-pixel maximum absolute principal curvature.
    Curvature(CurvatureArgs),
    /// Build the adaptive screen-space mesh.
    Mesh(MeshArgs),
    /// Integrate on the full pixel grid.
    Integrate(IntegrateArgs),
    /// Mesh, integrate, export and report.
    Pipeline(PipelineArgs),
    /// Aligned RMSE between two depth maps.
    Eval(EvalArgs),
    /// Vertex counts and timings of a synthetic scene across resolutions.
    Bench(BenchArgs),
}

/// A length in pixels or physical units: `0.5`, `0.5px` or `0.5mm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Length {
    Pixels(f64),
    Physical(f64),
}

impl FromStr for Length {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (number, make): (&str, fn(f64) -> Length) = if let Some(n) = s.strip_suffix("mm") {
            (n, Length::Physical)
        } else if let Some(n) = s.strip_suffix("px") {
            (n, Length::Pixels)
        } else {
            (s, Length::Pixels)
        };
        let v: f64 = number
            .trim()
            .parse()
            .map_err(|_| format!("expected a length like 0.5, 0.5px or 0.5mm, got `{s}`"))?;
        Ok(make(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CameraKind {
    Ortho,
    Persp,
}

#[derive(Debug, Clone, Args)]
pub struct CameraArgs {
    #[arg(long, value_enum, default_value = "ortho")]
    pub camera: CameraKind,
    /// Physical size of one pixel (orthographic cameras).
    #[arg(long, default_value_t = 1.0)]
    pub pixel_pitch: f64,
    /// Focal lengths and principal point in pixels.
    #[arg(long, num_args = 4, value_names = ["FX", "FY", "CX", "CY"], allow_negative_numbers = true)]
    pub intrinsics: Option<Vec<f64>>,
    /// Mean camera-to-object distance (perspective cameras).
    #[arg(long)]
    pub mean_depth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlipMetricArg {
    Screen,
    FirstForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CotangentArg {
    FirstForm,
    Screen,
}

#[derive(Debug, Clone, Args)]
pub struct SizingArgs {
    /// Admissible approximation error: pixels by default, `mm` for physical units.
    #[arg(long, default_value = "0.5")]
    pub epsilon: Length,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub smoothing_iterations: usize,
    /// Shortest target edge length in pixels.
    #[arg(long, default_value_t = 1.0)]
    pub lmin: f64,
    /// Longest target edge length in pixels.
    #[arg(long, default_value_t = 100.0)]
    pub lmax: f64,
    /// Metric of the Delaunay flip test.
    #[arg(long, value_enum, default_value = "first-form")]
    pub flip_metric: FlipMetricArg,
    /// Gaussian blur applied to the normals; 0 disables it.
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub blur_sigma: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative residual of the linear solve.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Angles of the cotangent weights.
    #[arg(long, value_enum, default_value = "first-form")]
    pub cotangent: CotangentArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SceneArg {
    Plane,
    Sphere,
    Cylinder,
    Wedge,
    Sinusoid,
}

#[derive(Debug, Clone, Args)]
pub struct SceneArgs {
    #[arg(long, value_enum, default_value = "sphere")]
    pub scene: SceneArg,
    /// Sphere or cylinder radius in pixels.
    #[arg(long, default_value_t = 100.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub slope_u: f64,
    #[arg(long, default_value_t = -0.2, allow_negative_numbers = true)]
    pub slope_v: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub left_slope: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub right_slope: f64,
    #[arg(long, default_value_t = 8.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 64.0)]
    pub period: f64,
    /// Cylinder axis runs along image rows.
    #[arg(long)]
    pub horizontal: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Uniform per-component noise added to the normals before renormalizing.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Normal map output; `.png` for 16-bit PNG, `.pfm` for float.
    #[arg(long)]
    pub out_normals: PathBuf,
    /// Ground-truth depth as PFM.
    #[arg(long)]
    pub out_depth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CurvatureArgs {
    /// Normal map: 16-bit PNG or three-channel PFM.
    pub normals: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub blur_sigma: f64,
    /// Curvature as a single-channel PFM.
    #[arg(long)]
    pub out_pfm: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    /// Normal map: 16-bit PNG or three-channel PFM.
    pub normals: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub sizing: SizingArgs,
    /// Screen-space mesh at z = 0.
    #[arg(long)]
    pub out_obj: PathBuf,
    /// Directory receiving the screen mesh after every iteration.
    #[arg(long)]
    pub debug_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct IntegrateArgs {
    /// Normal map: 16-bit PNG or three-channel PFM.
    pub normals: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out_obj: Option<PathBuf>,
    #[arg(long)]
    pub out_pfm: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Normal map: 16-bit PNG or three-channel PFM.
    pub normals: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub sizing: SizingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Ground-truth depth PFM for the RMSE.
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    /// Surface as OBJ, or PLY with a `.ply` extension.
    #[arg(long)]
    pub out_obj: Option<PathBuf>,
    /// Reconstructed depth at pixel centers.
    #[arg(long)]
    pub out_pfm: Option<PathBuf>,
    /// Report as a CSV header and row.
    #[arg(long)]
    pub report_csv: Option<PathBuf>,
    /// Also integrate on the full pixel grid.
    #[arg(long)]
    pub dense_baseline: bool,
    /// Directory receiving the screen mesh after every iteration.
    #[arg(long)]
    pub debug_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Predicted depth PFM.
    pub prediction: PathBuf,
    /// Ground-truth depth PFM.
    pub ground_truth: PathBuf,
    /// Align by scale instead of offset.
    #[arg(long)]
    pub scale: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Resolution the scene parameters refer to.
    #[arg(long, default_value_t = 256)]
    pub base_resolution: usize,
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024")]
    pub resolutions: Vec<usize>,
    /// Physical epsilon; the pixel pitch at the base resolution is 1.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long)]
    pub dense_baseline: bool,
    /// Report as a CSV header and row.
    #[arg(long)]
    pub report_csv: Option<PathBuf>,
}
