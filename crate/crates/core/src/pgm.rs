//! Grayscale images and Netpbm PGM (`P2` ASCII and `P5` binary) I/O.

use std::path::Path;

use crate::error::{Error, Result};
use crate::shape::CubeShape;

/// Row-major grayscale image with intensities on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidShape(format!("image of {width}x{height} pixels")));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: format!("{} pixels for {width}x{height}", width * height),
                actual: format!("{} pixels", pixels.len()),
            });
        }
        if let Some(bad) = pixels.iter().find(|p| !p.is_finite()) {
            return Err(Error::Config(format!("pixel value {bad} is not finite")));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * self.width + col] = value;
    }

    /// Grid shape `[height, width]`, matching the row-major layout.
    pub fn shape(&self) -> CubeShape {
        CubeShape::new(vec![self.height, self.width]).expect("image extents are positive")
    }

    pub fn nonzero_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0.0).count()
    }

    pub fn nonzero_fraction(&self) -> f64 {
        self.nonzero_count() as f64 / self.pixels.len() as f64
    }

    pub fn max_abs_diff(&self, other: &GrayImage) -> f64 {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Pgm {
            offset: self.pos,
            message: message.into(),
        }
    }

    /// Skips whitespace and `#` comments that run to the end of the line.
    fn skip_blank(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_blank();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Pgm {
                offset: start,
                message: format!("{what} is too large"),
            })
    }
}

/// Decodes a PGM image, scaling samples by `1 / maxval`.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = Cursor { bytes, pos: 0 };
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(cur.err("expected magic number P2 or P5")),
    };
    cur.pos = 2;
    if !bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(cur.err("expected whitespace after the magic number"));
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maximum value")?;
    if width == 0 || height == 0 {
        return Err(cur.err(format!("image of {width}x{height} pixels")));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(cur.err(format!("maximum value {maxval} outside 1..=65535")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| cur.err("pixel count overflows"))?;
    let scale = 1.0 / maxval as f64;
    let mut pixels = Vec::with_capacity(count.min(1 << 26));

    if binary {
        if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(cur.err("expected one whitespace byte before the raster"));
        }
        cur.pos += 1;
        let wide = maxval > 255;
        let sample_bytes = if wide { 2 } else { 1 };
        let need = count
            .checked_mul(sample_bytes)
            .ok_or_else(|| cur.err("raster size overflows"))?;
        let raster = bytes.get(cur.pos..cur.pos + need).ok_or_else(|| {
            cur.err(format!(
                "raster truncated: need {need} bytes, have {}",
                bytes.len() - cur.pos
            ))
        })?;
        for (i, chunk) in raster.chunks_exact(sample_bytes).enumerate() {
            let v = if wide {
                u16::from_be_bytes([chunk[0], chunk[1]]) as usize
            } else {
                chunk[0] as usize
            };
            if v > maxval {
                return Err(Error::Pgm {
                    offset: cur.pos + i * sample_bytes,
                    message: format!("sample {v} exceeds maximum value {maxval}"),
                });
            }
            pixels.push(v as f64 * scale);
        }
    } else {
        for _ in 0..count {
            cur.skip_blank();
            let at = cur.pos;
            let v = cur.number("pixel value")?;
            if v > maxval {
                return Err(Error::Pgm {
                    offset: at,
                    message: format!("sample {v} exceeds maximum value {maxval}"),
                });
            }
            pixels.push(v as f64 * scale);
        }
    }
    GrayImage::new(width, height, pixels)
}

/// Encodes as binary `P5`, 8-bit when `maxval <= 255` and 16-bit otherwise.
/// Intensities are clamped to `[0, 1]` and rounded.
pub fn encode_pgm(img: &GrayImage, maxval: u16) -> Vec<u8> {
    let maxval = maxval.max(1);
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, maxval).into_bytes();
    for &p in &img.pixels {
        let v = (p.clamp(0.0, 1.0) * maxval as f64).round() as u16;
        if maxval > 255 {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.push(v as u8);
        }
    }
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn write_pgm(img: &GrayImage, maxval: u16, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(img, maxval)).map_err(|e| Error::io(path, e))
}
