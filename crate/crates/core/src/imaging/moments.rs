use super::GrayImage;
use crate::error::{Error, Result};

/// Peak intensity every patch is rescaled to before Hu invariants are taken.
///
/// Hu invariants of a grayscale patch scale with its brightness (c1 with the
/// inverse of the intensity factor, higher invariants with higher powers), so
/// faint distant beacons and saturated near ones would otherwise land in
/// different decades of the log transform. Pinning the peak removes the
/// brightness dependence; the value sets the operating point of the distance.
pub const HU_PEAK: f64 = 10.0;

/// Intensity-weighted moments of a grayscale patch up to order three.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// Total intensity.
    pub m00: f64,
    /// Centroid in patch coordinates, pixel centers at integer positions.
    pub cx: f64,
    pub cy: f64,
    pub mu20: f64,
    pub mu11: f64,
    pub mu02: f64,
    pub mu30: f64,
    pub mu21: f64,
    pub mu12: f64,
    pub mu03: f64,
    /// Brightest pixel value.
    pub peak: u8,
}

// Integer anchor plus fractional offset of the centroid. Both parts follow a
// translation exactly, so moments of an embedded patch are bit-identical.
struct Anchor {
    m00: u64,
    ax: i64,
    ay: i64,
    fx: f64,
    fy: f64,
}

fn anchor(img: &GrayImage) -> Result<Anchor> {
    let (mut m00, mut m10, mut m01) = (0u64, 0u64, 0u64);
    for y in 0..img.height() {
        let mut row_sum = 0u64;
        for (x, &p) in img.row(y).iter().enumerate() {
            row_sum += p as u64;
            m10 += x as u64 * p as u64;
        }
        m00 += row_sum;
        m01 += y as u64 * row_sum;
    }
    if m00 == 0 {
        return Err(Error::DegeneratePatch);
    }
    let ax = (m10 / m00) as i64;
    let ay = (m01 / m00) as i64;
    Ok(Anchor {
        m00,
        ax,
        ay,
        fx: (m10 - ax as u64 * m00) as f64 / m00 as f64,
        fy: (m01 - ay as u64 * m00) as f64 / m00 as f64,
    })
}

impl Moments {
    /// Computes centroid and central moments; fails on an all-zero patch.
    pub fn of(img: &GrayImage) -> Result<Moments> {
        let a = anchor(img)?;
        let mut m = Moments {
            m00: a.m00 as f64,
            cx: a.ax as f64 + a.fx,
            cy: a.ay as f64 + a.fy,
            mu20: 0.0,
            mu11: 0.0,
            mu02: 0.0,
            mu30: 0.0,
            mu21: 0.0,
            mu12: 0.0,
            mu03: 0.0,
            peak: 0,
        };
        for y in 0..img.height() {
            let dy = (y as i64 - a.ay) as f64 - a.fy;
            for (x, &p) in img.row(y).iter().enumerate() {
                if p == 0 {
                    continue;
                }
                m.peak = m.peak.max(p);
                let w = p as f64;
                let dx = (x as i64 - a.ax) as f64 - a.fx;
                let (dx2, dy2) = (dx * dx, dy * dy);
                m.mu20 += dx2 * w;
                m.mu11 += dx * dy * w;
                m.mu02 += dy2 * w;
                m.mu30 += dx2 * dx * w;
                m.mu21 += dx2 * dy * w;
                m.mu12 += dx * dy2 * w;
                m.mu03 += dy2 * dy * w;
            }
        }
        Ok(m)
    }

    /// Scale-normalized central moment of order `i + j` (2 or 3).
    pub fn eta(&self, i: u32, j: u32) -> f64 {
        let mu = match (i, j) {
            (2, 0) => self.mu20,
            (1, 1) => self.mu11,
            (0, 2) => self.mu02,
            (3, 0) => self.mu30,
            (2, 1) => self.mu21,
            (1, 2) => self.mu12,
            (0, 3) => self.mu03,
            _ => panic!("eta({i},{j}) is not stored"),
        };
        mu / self.m00.powf((i + j) as f64 / 2.0 + 1.0)
    }

    /// Principal-axis angle in image coordinates (y down), in (-pi/2, pi/2].
    pub fn orientation(&self) -> f64 {
        0.5 * (2.0 * self.mu11).atan2(self.mu20 - self.mu02)
    }

    /// Copy with every intensity multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Moments {
        Moments {
            m00: self.m00 * k,
            mu20: self.mu20 * k,
            mu11: self.mu11 * k,
            mu02: self.mu02 * k,
            mu30: self.mu30 * k,
            mu21: self.mu21 * k,
            mu12: self.mu12 * k,
            mu03: self.mu03 * k,
            ..*self
        }
    }
}

/// Central moment of arbitrary order `(i, j)` about the intensity centroid.
pub fn central_moment(img: &GrayImage, i: u32, j: u32) -> Result<f64> {
    let a = anchor(img)?;
    let mut s = 0.0;
    for y in 0..img.height() {
        let dy = (y as i64 - a.ay) as f64 - a.fy;
        for (x, &p) in img.row(y).iter().enumerate() {
            if p != 0 {
                let dx = (x as i64 - a.ax) as f64 - a.fx;
                s += dx.powi(i as i32) * dy.powi(j as i32) * p as f64;
            }
        }
    }
    Ok(s)
}

/// The seven Hu invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuFeature {
    pub c: [f64; 7],
}

impl HuFeature {
    /// Hu invariants of the given moments, taken as they are.
    pub fn from_moments(m: &Moments) -> HuFeature {
        let n20 = m.eta(2, 0);
        let n11 = m.eta(1, 1);
        let n02 = m.eta(0, 2);
        let n30 = m.eta(3, 0);
        let n21 = m.eta(2, 1);
        let n12 = m.eta(1, 2);
        let n03 = m.eta(0, 3);

        let a = n30 + n12;
        let b = n21 + n03;
        let c1 = n20 + n02;
        let c2 = (n20 - n02).powi(2) + 4.0 * n11 * n11;
        let c3 = (n30 - 3.0 * n12).powi(2) + (3.0 * n21 - n03).powi(2);
        let c4 = a * a + b * b;
        let c5 = (n30 - 3.0 * n12) * a * (a * a - 3.0 * b * b)
            + (3.0 * n21 - n03) * b * (3.0 * a * a - b * b);
        let c6 = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
        let c7 = (3.0 * n21 - n03) * a * (a * a - 3.0 * b * b)
            - (n30 - 3.0 * n12) * b * (3.0 * a * a - b * b);
        HuFeature {
            c: [c1, c2, c3, c4, c5, c6, c7],
        }
    }

    /// Hu invariants after rescaling the patch so its peak equals [`HU_PEAK`].
    pub fn normalized(m: &Moments) -> HuFeature {
        HuFeature::from_moments(&m.scaled(HU_PEAK / m.peak.max(1) as f64))
    }

    /// Reciprocal of the signed log magnitude, or `None` for a zero invariant.
    fn transformed(v: f64) -> Option<f64> {
        if v == 0.0 || !v.is_finite() {
            return None;
        }
        let m = v.signum() * v.abs().log10();
        if m == 0.0 {
            return None;
        }
        Some(1.0 / m)
    }

    /// Shape distance: the sum over invariants of the difference of the
    /// reciprocal signed logs, skipping invariants that are zero on either side.
    pub fn distance(&self, other: &HuFeature) -> f64 {
        self.c
            .iter()
            .zip(other.c.iter())
            .filter_map(
                |(&a, &b)| match (Self::transformed(a), Self::transformed(b)) {
                    (Some(ta), Some(tb)) => Some((ta - tb).abs()),
                    _ => None,
                },
            )
            .sum()
    }
}

/// Peak-normalized Hu invariants of a patch.
pub fn hu_features(patch: &GrayImage) -> Result<HuFeature> {
    Ok(HuFeature::normalized(&Moments::of(patch)?))
}

/// Hu-moment shape distance between two patches.
pub fn hu_distance(patch: &GrayImage, reference: &GrayImage) -> Result<f64> {
    Ok(hu_features(patch)?.distance(&hu_features(reference)?))
}
