//! Portable Float Map reader/writer.
//!
//! Files are written little-endian (scale `-1.0`) with scanlines stored bottom
//! to top as the format prescribes. In memory, row 0 is the top row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Row-major, top row first, channels interleaved.
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height * channels);
        PfmImage {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }
}

pub fn write_pfm(path: &Path, img: &PfmImage) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode(&mut w, img)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn encode<W: Write>(w: &mut W, img: &PfmImage) -> std::io::Result<()> {
    let tag = match img.channels {
        1 => "Pf",
        3 => "PF",
        c => {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("PFM supports 1 or 3 channels, got {c}"),
            ))
        }
    };
    write!(w, "{tag}\n{} {}\n-1.0\n", img.width, img.height)?;
    let row_len = img.width * img.channels;
    for y in (0..img.height).rev() {
        for v in &img.data[y * row_len..(y + 1) * row_len] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<PfmImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode(&mut BufReader::new(file))
}

fn next_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut token = Vec::new();
    loop {
        let mut byte = [0u8];
        let n = r
            .read(&mut byte)
            .map_err(|e| Error::Pfm(format!("truncated header: {e}")))?;
        if n == 0 {
            break;
        }
        if byte[0].is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(byte[0]);
    }
    if token.is_empty() {
        return Err(Error::Pfm("truncated header".into()));
    }
    String::from_utf8(token).map_err(|_| Error::Pfm("non-ASCII header".into()))
}

fn decode<R: BufRead>(r: &mut R) -> Result<PfmImage> {
    let channels = match next_token(r)?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::Pfm(format!("unknown magic {other:?}"))),
    };
    let parse = |s: String| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Pfm(format!("bad dimension {s:?}")))
    };
    let width = parse(next_token(r)?)?;
    let height = parse(next_token(r)?)?;
    let scale: f32 = next_token(r)?
        .parse()
        .map_err(|_| Error::Pfm("bad scale field".into()))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Pfm("scale field must be non-zero".into()));
    }
    let little_endian = scale < 0.0;

    let row_len = width * channels;
    let mut raw = vec![0u8; row_len * height * 4];
    r.read_exact(&mut raw)
        .map_err(|_| Error::Pfm("truncated pixel data".into()))?;
    let mut data = vec![0f32; row_len * height];
    for (file_row, chunk) in raw.chunks_exact(row_len * 4).enumerate() {
        let y = height - 1 - file_row;
        for (i, b) in chunk.chunks_exact(4).enumerate() {
            let bytes = [b[0], b[1], b[2], b[3]];
            data[y * row_len + i] = if little_endian {
                f32::from_le_bytes(bytes)
            } else {
                f32::from_be_bytes(bytes)
            };
        }
    }
    Ok(PfmImage::new(width, height, channels, data))
}
