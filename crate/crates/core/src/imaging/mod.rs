//! Frames, binarization, component extraction, moments and sequence files.

mod components;
mod moments;
pub mod pgm;
pub mod sequence;

pub use components::{component_pixels, connected_components};
pub use moments::{central_moment, hu_distance, hu_features, HuFeature, Moments, HU_PEAK};

use crate::error::{Error, Result};

/// Default binarization threshold.
pub const DEFAULT_THRESHOLD: u8 = 5;

/// An 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} pixels do not fill a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from a per-pixel function of `(x, y)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn max(&self) -> u8 {
        self.pixels.iter().copied().max().unwrap_or(0)
    }

    /// Copies the region covered by `b`, which must lie inside the image.
    pub fn crop(&self, b: &BoundingBox) -> GrayImage {
        let (x0, y0) = (b.x as usize, b.y as usize);
        let (w, h) = (b.w as usize, b.h as usize);
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            pixels.extend_from_slice(&self.row(y)[x0..x0 + w]);
        }
        GrayImage {
            width: w,
            height: h,
            pixels,
        }
    }

    /// Rotates by 90 degrees clockwise.
    pub fn rotate90(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        GrayImage::from_fn(h, w, |x, y| self.get(y, h - 1 - x))
    }

    pub fn transpose(&self) -> GrayImage {
        GrayImage::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    pub fn flip_horizontal(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            self.get(self.width - 1 - x, y)
        })
    }

    /// Places this image at `(ox, oy)` inside a black canvas.
    pub fn embed(&self, width: usize, height: usize, ox: usize, oy: usize) -> GrayImage {
        assert!(ox + self.width <= width && oy + self.height <= height);
        let mut out = GrayImage::new(width, height);
        for y in 0..self.height {
            let dst = (oy + y) * width + ox;
            out.pixels[dst..dst + self.width].copy_from_slice(self.row(y));
        }
        out
    }
}

/// One camera image with its position in the sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: u64,
    pub timestamp_s: f64,
    pub image: GrayImage,
}

impl Frame {
    pub fn new(index: u64, timestamp_s: f64, image: GrayImage) -> Self {
        Frame {
            index,
            timestamp_s,
            image,
        }
    }

    pub fn width(&self) -> usize {
        self.image.width
    }

    pub fn height(&self) -> usize {
        self.image.height
    }
}

/// Axis-aligned pixel box; `(x, y)` is the top-left pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.w && y < self.y + self.h
    }

    /// Grows the box by `margin` on every side, clamped to a `width`x`height` frame.
    pub fn expand(&self, margin: u32, width: usize, height: usize) -> BoundingBox {
        let x0 = self.x.saturating_sub(margin);
        let y0 = self.y.saturating_sub(margin);
        let x1 = (self.x + self.w + margin).min(width as u32);
        let y1 = (self.y + self.h + margin).min(height as u32);
        BoundingBox {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        }
    }
}

/// A 0/1 raster produced by [`binarize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryImage {
    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width * height || bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument(
                "binary image needs width*height values of 0 or 1".into(),
            ));
        }
        Ok(BinaryImage {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.bits[y * self.width + x]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// The binary image as a grayscale image with ones mapped to 255.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.bits.iter().map(|&b| b * 255).collect(),
        }
    }
}

/// Sets pixels at or above `threshold` to 1 and the rest to 0.
pub fn binarize(image: &GrayImage, threshold: u8) -> BinaryImage {
    BinaryImage {
        width: image.width,
        height: image.height,
        bits: image
            .pixels
            .iter()
            .map(|&p| (p >= threshold) as u8)
            .collect(),
    }
}
