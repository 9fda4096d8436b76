//! Synthetic band-pass camera: renders beacons transmitting their identifiers
//! under a standstill or driving motion profile, with ground truth.

pub mod config;
pub mod render;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::codebook::CODE_LEN;
use crate::error::Result;
use crate::imaging::sequence::{BeaconTruth, FrameRecord, SequenceWriter};
use crate::imaging::{Frame, GrayImage};
pub use config::{BeaconSpec, MotionProfile, SceneConfig};
use render::{render_splat, Shape, Splat};

/// Distance at which the peak pixel intensity is [`FAR_PEAK`].
pub const FAR_DISTANCE_M: f64 = 120.0;
/// Peak pixel intensity at [`FAR_DISTANCE_M`].
pub const FAR_PEAK: f64 = 10.0;

/// Beacons closer than this to the image plane are not drawn.
const NEAR_CLIP_M: f64 = 0.3;

/// Peak pixel intensity of a beacon at `distance` meters.
pub fn peak_intensity(distance: f64) -> f64 {
    (FAR_PEAK * (FAR_DISTANCE_M / distance).powi(2)).min(255.0)
}

/// Where a beacon lands in the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub x: f64,
    pub y: f64,
    pub size_px: f64,
    pub distance: f64,
}

/// Pinhole projection of a point given in camera coordinates (x right,
/// y down, z forward), with the principal point at the image center.
/// Returns `None` for points behind the near clip plane.
pub fn project(
    point_cam: [f64; 3],
    size_m: f64,
    focal_px: f64,
    width: usize,
    height: usize,
) -> Option<Projection> {
    let [x, y, z] = point_cam;
    if z <= NEAR_CLIP_M {
        return None;
    }
    let distance = (x * x + y * y + z * z).sqrt();
    Some(Projection {
        x: width as f64 / 2.0 + focal_px * x / z,
        y: height as f64 / 2.0 + focal_px * y / z,
        size_px: size_m * focal_px / distance,
        distance,
    })
}

/// Index of the identifier bit on display at time `t`.
pub fn bit_index(t: f64, phase_ms: f64, bit_period_ms: f64) -> usize {
    let k = ((t * 1000.0 + phase_ms) / bit_period_ms).floor() as i64;
    k.rem_euclid(CODE_LEN as i64) as usize
}

/// Renders frames of a scene one at a time.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SceneConfig,
    seed: u64,
    // Probability that a background pixel reads nonzero.
    p_nonzero: f64,
    // Standardized noise threshold for a nonzero background pixel.
    tail_start: f64,
}

impl Simulator {
    pub fn new(config: SceneConfig, seed: u64) -> Self {
        let sigma = config.camera.noise_floor;
        let (p_nonzero, tail_start) = if sigma > 0.0 {
            let a = 0.5 / sigma;
            (0.5 * libm::erfc(a / std::f64::consts::SQRT_2), a)
        } else {
            (0.0, f64::INFINITY)
        };
        Simulator {
            config,
            seed,
            p_nonzero,
            tail_start,
        }
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    pub fn frame_count(&self) -> u64 {
        self.config.frame_count()
    }

    pub fn timestamp(&self, index: u64) -> f64 {
        index as f64 / self.config.camera.frame_rate_hz
    }

    /// Projection of beacon `b` when the vehicle is at `position`.
    pub fn project_beacon(&self, b: &BeaconSpec, position: f64) -> Option<Projection> {
        let c = &self.config.camera;
        let cam = [b.position[0], -b.position[1], b.position[2] - position];
        project(cam, b.size, c.focal_px, c.width, c.height)
    }

    /// Ground truth of frame `index` without rendering it.
    pub fn record(&self, index: u64) -> FrameRecord {
        let t = self.timestamp(index);
        let position = self.config.motion.position(t);
        let (w, h) = (
            self.config.camera.width as f64,
            self.config.camera.height as f64,
        );
        let beacons = self
            .config
            .beacons
            .iter()
            .map(|b| {
                let bit =
                    b.id.bit(bit_index(t, b.phase_ms, self.config.bit_period_ms));
                match self.project_beacon(b, position) {
                    Some(p) => BeaconTruth {
                        beacon_id_bits: b.id.to_string(),
                        centroid_x: p.x - 0.5,
                        centroid_y: p.y - 0.5,
                        visible: p.x >= 0.0 && p.y >= 0.0 && p.x < w && p.y < h,
                        symbol_bit: bit,
                        distance_m: p.distance,
                    },
                    None => BeaconTruth {
                        beacon_id_bits: b.id.to_string(),
                        centroid_x: f64::NAN,
                        centroid_y: f64::NAN,
                        visible: false,
                        symbol_bit: bit,
                        distance_m: f64::NAN,
                    },
                }
            })
            .map(|mut b| {
                // JSON has no NaN; invisible beacons behind the camera get zeros.
                if !b.centroid_x.is_finite() {
                    b.centroid_x = 0.0;
                    b.centroid_y = 0.0;
                    b.distance_m = 0.0;
                }
                b
            })
            .collect();
        FrameRecord {
            frame_index: index,
            timestamp_s: t,
            vehicle_position_m: Some(position),
            beacons,
        }
    }

    /// Renders frame `index` with its ground truth.
    pub fn render(&self, index: u64) -> (Frame, FrameRecord) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let record = self.record(index);
        let cam = &self.config.camera;
        let bloom = self.config.noise.bloom_sigma_px;
        let position = record.vehicle_position_m.unwrap_or(0.0);

        let mut splats: Vec<Splat> = Vec::new();
        for (b, truth) in self.config.beacons.iter().zip(&record.beacons) {
            if !truth.visible {
                continue;
            }
            let Some(p) = self.project_beacon(b, position) else {
                continue;
            };
            let shape = Shape::Symbol {
                size: p.size_px,
                bit: truth.symbol_bit,
            };
            if let Some(s) = render_splat(shape, p.x, p.y, bloom, peak_intensity(p.distance)) {
                splats.push(s);
            }
        }
        let noise = &self.config.noise;
        if noise.clutter_rate > 0.0 {
            let n = Poisson::new(noise.clutter_rate)
                .map(|d| d.sample(&mut rng) as u64)
                .unwrap_or(0);
            for _ in 0..n {
                let x = rng.gen::<f64>() * cam.width as f64;
                let y = rng.gen::<f64>() * cam.height as f64;
                let radius = uniform(&mut rng, noise.clutter_radius_px);
                let peak = uniform(&mut rng, noise.clutter_intensity);
                if let Some(s) = render_splat(Shape::Disk { radius }, x, y, bloom, peak) {
                    splats.push(s);
                }
            }
        }

        let image = self.compose(&splats, &mut rng);
        (Frame::new(index, record.timestamp_s, image), record)
    }

    // Background pixels read round(max(0, N(0, sigma))); only the few nonzero
    // ones are drawn, by geometric skipping. Pixels under a splat get the
    // signal plus dense noise.
    fn compose(&self, splats: &[Splat], rng: &mut ChaCha8Rng) -> GrayImage {
        let cam = &self.config.camera;
        let sigma = cam.noise_floor;
        let (w, h) = (cam.width, cam.height);
        let mut img = GrayImage::new(w, h);
        let n = w * h;
        if self.p_nonzero > 0.0 {
            let log_q = (1.0 - self.p_nonzero).ln();
            let pix = img.pixels_mut();
            let mut i = 0usize;
            loop {
                let u: f64 = 1.0 - rng.gen::<f64>();
                let skip = (u.ln() / log_q).floor();
                if !(skip < (n - i) as f64) {
                    break;
                }
                i += skip as usize;
                let z = normal_tail(rng, self.tail_start);
                pix[i] = (z * sigma).round().min(255.0) as u8;
                i += 1;
                if i >= n {
                    break;
                }
            }
        }
        for (k, s) in splats.iter().enumerate() {
            for j in 0..s.h {
                let y = s.y0 + j as i64;
                if y < 0 || y >= h as i64 {
                    continue;
                }
                for i in 0..s.w {
                    let x = s.x0 + i as i64;
                    if x < 0 || x >= w as i64 {
                        continue;
                    }
                    // A pixel shared by several splats is drawn once, by the first.
                    if splats[..k].iter().any(|o| covers(o, x, y)) {
                        continue;
                    }
                    let signal: f32 = splats[k..].iter().map(|o| o.get(x, y)).sum();
                    let z: f64 = if sigma > 0.0 {
                        rng.sample::<f64, _>(StandardNormal) * sigma
                    } else {
                        0.0
                    };
                    let v = (signal as f64 + z).round().clamp(0.0, 255.0);
                    img.set(x as usize, y as usize, v as u8);
                }
            }
        }
        img
    }

    /// Renders every frame of the scene into `dir`.
    pub fn write_sequence(&self, dir: &Path) -> Result<u64> {
        let mut writer = SequenceWriter::create(dir)?;
        let n = self.frame_count();
        for i in 0..n {
            let (frame, record) = self.render(i);
            writer.push(&frame, &record)?;
        }
        writer.finish()?;
        Ok(n)
    }

    /// Iterator over rendered frames.
    pub fn frames(&self) -> impl Iterator<Item = (Frame, FrameRecord)> + '_ {
        (0..self.frame_count()).map(move |i| self.render(i))
    }
}

fn covers(s: &Splat, x: i64, y: i64) -> bool {
    x >= s.x0 && y >= s.y0 && x < s.x0 + s.w as i64 && y < s.y0 + s.h as i64
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

// Standard normal conditioned on z >= a, by exponential rejection (Robert 1995).
fn normal_tail(rng: &mut ChaCha8Rng, a: f64) -> f64 {
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let z = a - u.ln() / lambda;
        let accept = (-(z - lambda).powi(2) / 2.0).exp();
        if rng.gen::<f64>() <= accept {
            return z;
        }
    }
}

/// Renders a scene to disk.
pub fn simulate(config: &SceneConfig, seed: u64, dir: &Path) -> Result<u64> {
    Simulator::new(config.clone(), seed).write_sequence(dir)
}
