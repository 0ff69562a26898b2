//! 16-bit PNG normal maps.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use nalgebra::Vector3;

use super::{LoadReport, NormalMap};
use crate::error::{Error, Result};

/// Alpha values above this mark foreground.
const ALPHA_THRESHOLD: u16 = 32767;

/// `v ↦ 2 v / 65535 − 1`.
#[inline]
pub fn decode_component(v: u16) -> f64 {
    2.0 * v as f64 / 65535.0 - 1.0
}

/// Inverse of [`decode_component`], rounding to the nearest code.
#[inline]
pub fn encode_component(n: f64) -> u16 {
    ((n.clamp(-1.0, 1.0) + 1.0) * 0.5 * 65535.0).round() as u16
}

pub(super) fn load(path: &Path) -> Result<(NormalMap, LoadReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;

    if info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::UnsupportedImage(format!(
            "normal maps must use 16-bit channels, found {:?}",
            info.bit_depth
        )));
    }
    let channels = match info.color_type {
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => {
            return Err(Error::UnsupportedImage(format!(
                "normal maps must be RGB or RGBA, found {other:?}"
            )))
        }
    };

    let (width, height) = (info.width as usize, info.height as usize);
    let stride = info.line_size;
    let sample = |x: usize, y: usize, c: usize| -> u16 {
        let i = y * stride + (x * channels + c) * 2;
        u16::from_be_bytes([buf[i], buf[i + 1]])
    };
    Ok(NormalMap::from_fn(width, height, |x, y| {
        if channels == 4 && sample(x, y, 3) <= ALPHA_THRESHOLD {
            return None;
        }
        Some(Vector3::new(
            decode_component(sample(x, y, 0)),
            decode_component(sample(x, y, 1)),
            decode_component(sample(x, y, 2)),
        ))
    }))
}

pub(super) fn save(nm: &NormalMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder =
        png::Encoder::new(BufWriter::new(file), nm.width() as u32, nm.height() as u32);
    encoder.set_color(png::ColorType::Rgba);
    encoder.set_depth(png::BitDepth::Sixteen);

    let mut data = Vec::with_capacity(nm.width() * nm.height() * 8);
    for (n, &fg) in nm.normals().iter().zip(nm.mask()) {
        let rgba = if fg {
            [
                encode_component(n.x),
                encode_component(n.y),
                encode_component(n.z),
                u16::MAX,
            ]
        } else {
            [32767, 32767, 32767, 0]
        };
        for c in rgba {
            data.extend(c.to_be_bytes());
        }
    }
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Png(e.to_string()))?;
    writer
        .write_image_data(&data)
        .map_err(|e| Error::Png(e.to_string()))?;
    writer.finish().map_err(|e| Error::Png(e.to_string()))
}
