//! Supersampled rendering of beacon symbols and clutter blobs.

use crate::imaging::GrayImage;

/// Supersampling factor per axis.
pub const SUPERSAMPLE: usize = 4;

/// Length-to-width ratio of the diagonal symbol bar.
pub const BAR_ASPECT: f64 = 5.0;

/// A shape that can be rasterized by point sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Diagonal bar inscribed in a square of side `size` px. Bit 1 runs from
    /// top-left to bottom-right in image coordinates (y down), bit 0 from
    /// bottom-left to top-right.
    Symbol { size: f64, bit: u8 },
    /// Filled disk.
    Disk { radius: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Symbol { size, bit } => {
                let half = size / 2.0;
                if x.abs() > half || y.abs() > half {
                    return false;
                }
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let (dx, dy) = if bit == 1 { (r, r) } else { (r, -r) };
                let len = size * std::f64::consts::SQRT_2;
                let along = x * dx + y * dy;
                let across = -x * dy + y * dx;
                along.abs() <= len / 2.0 && across.abs() <= len / BAR_ASPECT / 2.0
            }
            Shape::Disk { radius } => x * x + y * y <= radius * radius,
        }
    }

    /// Half extent of the shape's bounding square in px.
    fn half_extent(&self) -> f64 {
        match *self {
            Shape::Symbol { size, .. } => size / 2.0,
            Shape::Disk { radius } => radius,
        }
    }
}

/// A rendered emitter: floating-point intensities over a pixel window.
#[derive(Debug, Clone, PartialEq)]
pub struct Splat {
    pub x0: i64,
    pub y0: i64,
    pub w: usize,
    pub h: usize,
    pub values: Vec<f32>,
}

impl Splat {
    pub fn get(&self, x: i64, y: i64) -> f32 {
        if x < self.x0 || y < self.y0 {
            return 0.0;
        }
        let (i, j) = ((x - self.x0) as usize, (y - self.y0) as usize);
        if i >= self.w || j >= self.h {
            return 0.0;
        }
        self.values[j * self.w + i]
    }
}

/// Renders `shape` centered at `(cx, cy)` (pixel `k` spans `[k, k+1)`),
/// blurred by a Gaussian of `bloom` px and scaled so its brightest pixel
/// equals `peak`. Returns `None` if nothing is covered.
pub fn render_splat(shape: Shape, cx: f64, cy: f64, bloom: f64, peak: f64) -> Option<Splat> {
    let ss = SUPERSAMPLE;
    let margin = shape.half_extent() + 4.0 * bloom + 2.0;
    let x0 = (cx - margin).floor() as i64;
    let y0 = (cy - margin).floor() as i64;
    let w = ((cx + margin).ceil() as i64 - x0) as usize;
    let h = ((cy + margin).ceil() as i64 - y0) as usize;
    let (sw, sh) = (w * ss, h * ss);

    let mut cov = vec![0f32; sw * sh];
    let mut any = false;
    for j in 0..sh {
        let y = y0 as f64 + (j as f64 + 0.5) / ss as f64 - cy;
        for i in 0..sw {
            let x = x0 as f64 + (i as f64 + 0.5) / ss as f64 - cx;
            if shape.contains(x, y) {
                cov[j * sw + i] = 1.0;
                any = true;
            }
        }
    }
    if !any {
        return None;
    }
    if bloom > 0.0 {
        gaussian_blur(&mut cov, sw, sh, bloom * ss as f64);
    }

    let norm = 1.0 / (ss * ss) as f32;
    let mut values = vec![0f32; w * h];
    for j in 0..h {
        for i in 0..w {
            let mut s = 0.0;
            for sj in 0..ss {
                let row = (j * ss + sj) * sw + i * ss;
                s += cov[row..row + ss].iter().sum::<f32>();
            }
            values[j * w + i] = s * norm;
        }
    }
    let max = values.iter().cloned().fold(0f32, f32::max);
    if max <= 0.0 {
        return None;
    }
    let k = peak as f32 / max;
    values.iter_mut().for_each(|v| *v *= k);
    Some(Splat {
        x0,
        y0,
        w,
        h,
        values,
    })
}

/// Separable Gaussian blur with zero padding.
pub fn gaussian_blur(data: &mut [f32], w: usize, h: usize, sigma: f64) {
    let radius = (3.5 * sigma).ceil() as isize;
    let kernel: Vec<f32> = {
        let raw: Vec<f64> = (-radius..=radius)
            .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|v| (v / s) as f32).collect()
    };
    let mut tmp = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sx = x as isize + k as isize - radius;
                if sx >= 0 && (sx as usize) < w {
                    acc += data[y * w + sx as usize] * kv;
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sy = y as isize + k as isize - radius;
                if sy >= 0 && (sy as usize) < h {
                    acc += tmp[sy as usize * w + x] * kv;
                }
            }
            data[y * w + x] = acc;
        }
    }
}

/// Noise-free `n`x`n` patch of a shape centered on the middle pixel, made
/// exactly point-symmetric so odd-order moments vanish.
pub fn centered_patch(shape: Shape, n: usize, bloom: f64, peak: f64) -> GrayImage {
    let c = n as f64 / 2.0;
    let splat = render_splat(shape, c, c, bloom, peak).expect("shape covers its center");
    let mut img = GrayImage::new(n, n);
    for y in 0..n {
        for x in 0..n {
            let a = splat.get(x as i64, y as i64);
            let b = splat.get((n - 1 - x) as i64, (n - 1 - y) as i64);
            let v = (0.5 * (a + b)).round().clamp(0.0, 255.0);
            img.set(x, y, v as u8);
        }
    }
    img
}
