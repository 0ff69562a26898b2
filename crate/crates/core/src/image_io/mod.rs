//! Normal maps, depth maps and their on-disk encodings.
//!
//! Pixel `(x, y)` covers the screen square `[x, x+1) × [y, y+1)`; its center
//! sits at `(x + 0.5, y + 0.5)`. Images are stored row-major.

mod pfm;
mod png16;

use std::path::Path;

use nalgebra::{Vector2, Vector3};

use crate::error::Result;

pub use pfm::{read_pfm, write_pfm, PfmImage};
pub use png16::{decode_component, encode_component};

/// Normals whose z-component does not exceed this value are dropped from the
/// foreground when a map is built or loaded.
pub const MIN_NORMAL_Z: f64 = 1e-3;

/// Vectors shorter than this cannot be normalized and are treated as missing.
const MIN_NORMAL_LENGTH: f64 = 1e-12;

/// Default blur applied to normals before curvature estimation.
pub const DEFAULT_BLUR_SIGMA: f64 = std::f64::consts::SQRT_2;

/// Per-pixel unit normals plus the foreground mask.
///
/// Background pixels always hold the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    normals: Vec<Vector3<f64>>,
    mask: Vec<bool>,
}

/// Counts of pixels dropped while building a normal map.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Foreground pixels whose stored vector had (near) zero length.
    pub zero_length: usize,
    /// Foreground pixels whose normal pointed away from or grazed the camera.
    pub grazing: usize,
}

impl LoadReport {
    pub fn dropped(&self) -> usize {
        self.zero_length + self.grazing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalEncoding {
    /// 16-bit RGB or RGBA PNG, `n = 2 v / 65535 - 1` per channel.
    Png16,
    /// Three-channel Portable Float Map.
    Pfm,
}

impl NormalEncoding {
    /// Guess the encoding from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "png" => Some(NormalEncoding::Png16),
            "pfm" => Some(NormalEncoding::Pfm),
            _ => None,
        }
    }
}

impl NormalMap {
    /// An all-background map.
    pub fn empty(width: usize, height: usize) -> Self {
        NormalMap {
            width,
            height,
            normals: vec![Vector3::zeros(); width * height],
            mask: vec![false; width * height],
        }
    }

    /// Build a map from a per-pixel generator. Returned vectors are
    /// normalized; `None`, zero-length and non-camera-facing vectors become
    /// background and are tallied in the report.
    pub fn from_fn<F>(width: usize, height: usize, mut f: F) -> (Self, LoadReport)
    where
        F: FnMut(usize, usize) -> Option<Vector3<f64>>,
    {
        let mut map = NormalMap::empty(width, height);
        let mut report = LoadReport::default();
        for y in 0..height {
            for x in 0..width {
                if let Some(raw) = f(x, y) {
                    match classify(raw) {
                        Ok(n) => map.set(x, y, Some(n)),
                        Err(Dropped::ZeroLength) => report.zero_length += 1,
                        Err(Dropped::Grazing) => report.grazing += 1,
                    }
                }
            }
        }
        (map, report)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.mask[self.index(x, y)]
    }

    /// Foreground test that accepts out-of-range signed coordinates.
    #[inline]
    pub fn is_foreground_at(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.mask[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn normal(&self, x: usize, y: usize) -> Option<Vector3<f64>> {
        let i = self.index(x, y);
        self.mask[i].then(|| self.normals[i])
    }

    /// Raw normal storage; background entries are zero.
    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Store a normal (assumed unit length) or clear the pixel.
    pub fn set(&mut self, x: usize, y: usize, n: Option<Vector3<f64>>) {
        let i = self.index(x, y);
        match n {
            Some(n) => {
                self.normals[i] = n;
                self.mask[i] = true;
            }
            None => {
                self.normals[i] = Vector3::zeros();
                self.mask[i] = false;
            }
        }
    }

    /// Left-right mirror image. The x-component of every normal flips sign so
    /// the result is the normal map of the mirrored surface.
    pub fn mirrored(&self) -> Self {
        let mut out = NormalMap::empty(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                if let Some(n) = self.normal(x, y) {
                    out.set(self.width - 1 - x, y, Some(Vector3::new(-n.x, n.y, n.z)));
                }
            }
        }
        out
    }

    /// Bilinear interpolation between foreground pixel centers around the
    /// continuous screen point `p`, renormalized. Falls back to the nearest
    /// foreground pixel and finally to the viewing direction.
    pub fn sample_bilinear(&self, p: Vector2<f64>) -> Vector3<f64> {
        let fx = p.x - 0.5;
        let fy = p.y - 0.5;
        let x0 = fx.floor();
        let y0 = fy.floor();
        let tx = fx - x0;
        let ty = fy - y0;
        let (x0, y0) = (x0 as isize, y0 as isize);
        let taps = [
            (x0, y0, (1.0 - tx) * (1.0 - ty)),
            (x0 + 1, y0, tx * (1.0 - ty)),
            (x0, y0 + 1, (1.0 - tx) * ty),
            (x0 + 1, y0 + 1, tx * ty),
        ];
        let mut sum = Vector3::zeros();
        for &(x, y, w) in &taps {
            if w > 0.0 && self.is_foreground_at(x, y) {
                sum += self.normals[y as usize * self.width + x as usize] * w;
            }
        }
        if sum.norm() > MIN_NORMAL_LENGTH {
            return sum.normalize();
        }
        let cx = (p.x.floor() as isize).clamp(0, self.width as isize - 1);
        let cy = (p.y.floor() as isize).clamp(0, self.height as isize - 1);
        if self.is_foreground_at(cx, cy) {
            return self.normals[cy as usize * self.width + cx as usize];
        }
        Vector3::z()
    }
}

enum Dropped {
    ZeroLength,
    Grazing,
}

fn classify(raw: Vector3<f64>) -> Result<Vector3<f64>, Dropped> {
    let len = raw.norm();
    if !len.is_finite() || len < MIN_NORMAL_LENGTH {
        return Err(Dropped::ZeroLength);
    }
    let n = raw / len;
    if n.z <= MIN_NORMAL_Z {
        return Err(Dropped::Grazing);
    }
    Ok(n)
}

/// Per-pixel scalar depth with a foreground mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    depth: Vec<f64>,
    mask: Vec<bool>,
}

impl DepthMap {
    pub fn empty(width: usize, height: usize) -> Self {
        DepthMap {
            width,
            height,
            depth: vec![f64::NAN; width * height],
            mask: vec![false; width * height],
        }
    }

    pub fn from_fn<F>(width: usize, height: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> Option<f64>,
    {
        let mut map = DepthMap::empty(width, height);
        for y in 0..height {
            for x in 0..width {
                map.set(x, y, f(x, y).filter(|d| d.is_finite()));
            }
        }
        map
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.depth[i])
    }

    pub fn set(&mut self, x: usize, y: usize, d: Option<f64>) {
        let i = y * self.width + x;
        match d {
            Some(d) => {
                self.depth[i] = d;
                self.mask[i] = true;
            }
            None => {
                self.depth[i] = f64::NAN;
                self.mask[i] = false;
            }
        }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Load a normal map. Dropped pixels are reported rather than treated as
/// errors.
pub fn load_normal_map(path: &Path, encoding: NormalEncoding) -> Result<(NormalMap, LoadReport)> {
    match encoding {
        NormalEncoding::Png16 => png16::load(path),
        NormalEncoding::Pfm => {
            let img = read_pfm(path)?;
            if img.channels != 3 {
                return Err(crate::Error::Pfm(format!(
                    "expected a 3-channel normal map, found {} channel(s)",
                    img.channels
                )));
            }
            Ok(NormalMap::from_fn(img.width, img.height, |x, y| {
                let px = img.pixel(x, y);
                let v = Vector3::new(px[0] as f64, px[1] as f64, px[2] as f64);
                // NaN marks background in files written by this crate.
                (!v.iter().any(|c| c.is_nan())).then_some(v)
            }))
        }
    }
}

/// Save a normal map; background pixels get alpha 0 (PNG) or NaN (PFM).
pub fn save_normal_map(nm: &NormalMap, path: &Path, encoding: NormalEncoding) -> Result<()> {
    match encoding {
        NormalEncoding::Png16 => png16::save(nm, path),
        NormalEncoding::Pfm => {
            let mut data = Vec::with_capacity(nm.width * nm.height * 3);
            for (n, &fg) in nm.normals.iter().zip(&nm.mask) {
                if fg {
                    data.extend([n.x as f32, n.y as f32, n.z as f32]);
                } else {
                    data.extend([f32::NAN; 3]);
                }
            }
            write_pfm(path, &PfmImage::new(nm.width, nm.height, 3, data))
        }
    }
}

/// Write a single-channel little-endian PFM; background pixels become NaN.
pub fn save_depth_map(depth: &DepthMap, path: &Path) -> Result<()> {
    let data = depth
        .depth
        .iter()
        .zip(&depth.mask)
        .map(|(&d, &fg)| if fg { d as f32 } else { f32::NAN })
        .collect();
    write_pfm(path, &PfmImage::new(depth.width, depth.height, 1, data))
}

/// Read a single-channel PFM; NaN and infinite pixels become background.
pub fn load_depth_map(path: &Path) -> Result<DepthMap> {
    let img = read_pfm(path)?;
    if img.channels != 1 {
        return Err(crate::Error::Pfm(format!(
            "expected a 1-channel depth map, found {} channels",
            img.channels
        )));
    }
    Ok(DepthMap::from_fn(img.width, img.height, |x, y| {
        Some(img.pixel(x, y)[0] as f64)
    }))
}

/// Mask-aware separable Gaussian blur of a normal map.
///
/// Each pass only uses foreground taps and renormalizes the kernel weights
/// over the taps it used, so background never bleeds into the rim. Results are
/// renormalized to unit length; the mask is unchanged.
pub fn gaussian_blur_normals(nm: &NormalMap, sigma: f64) -> NormalMap {
    assert!(sigma > 0.0, "blur sigma must be positive");
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();

    let (w, h) = (nm.width as isize, nm.height as isize);
    let mut horizontal = vec![Vector3::zeros(); nm.normals.len()];
    for y in 0..h {
        for x in 0..w {
            if !nm.is_foreground_at(x, y) {
                continue;
            }
            let mut sum = Vector3::zeros();
            let mut weight = 0.0;
            for (k, &kw) in (-radius..=radius).zip(&kernel) {
                if nm.is_foreground_at(x + k, y) {
                    sum += nm.normals[(y * w + x + k) as usize] * kw;
                    weight += kw;
                }
            }
            horizontal[(y * w + x) as usize] = sum / weight;
        }
    }

    let mut out = nm.clone();
    for y in 0..h {
        for x in 0..w {
            if !nm.is_foreground_at(x, y) {
                continue;
            }
            let mut sum = Vector3::zeros();
            let mut weight = 0.0;
            for (k, &kw) in (-radius..=radius).zip(&kernel) {
                if nm.is_foreground_at(x, y + k) {
                    sum += horizontal[((y + k) * w + x) as usize] * kw;
                    weight += kw;
                }
            }
            let v = sum / weight;
            let len = v.norm();
            if len > MIN_NORMAL_LENGTH {
                out.normals[(y * w + x) as usize] = v / len;
            }
        }
    }
    out
}
