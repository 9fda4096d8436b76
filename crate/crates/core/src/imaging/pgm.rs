//! Strict binary PGM (P5, maxval 255) reading and writing.

use std::fs;
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

/// Encodes an image as a P5 file with a minimal header.
pub fn encode(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}

/// Decodes a P5 file. Comments are not accepted and maxval must be 255.
pub fn decode(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("not a binary PGM (magic must be P5)".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (k, name) in ["width", "height", "maxval"].iter().enumerate() {
        let start_ws = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos == start_ws {
            return Err(format!("expected whitespace before {name}"));
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(format!("missing {name}"));
        }
        if pos - start > 9 {
            return Err(format!("{name} is too large"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        fields[k] = text.parse().map_err(|_| format!("bad {name}"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("header must end with a single whitespace byte".into());
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(format!("maxval must be 255, found {maxval}"));
    }
    if width == 0 || height == 0 {
        return Err("image dimensions must be positive".into());
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| "image dimensions overflow".to_string())?;
    let data = &bytes[pos..];
    if data.len() != n {
        return Err(format!(
            "raster has {} bytes, expected {n} for {width}x{height}",
            data.len()
        ));
    }
    GrayImage::from_pixels(width, height, data.to_vec()).map_err(|e| e.to_string())
}

pub fn read(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|m| Error::format(path, m))
}

pub fn write(path: &Path, img: &GrayImage) -> Result<()> {
    fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}
