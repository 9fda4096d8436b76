//! Scene description and its `key = value` text format.
//!
//! ```text
//! # comment
//! camera.focal_px = 2000
//! motion.profile = accelerate_to_cruise
//! beacon = B2 010100100110 3.0 1.5 110.0 phase_ms=23
//! ```
//!
//! World coordinates: `x` to the right of the road, `y` up, `z` along the
//! road measured from the start position S. The camera sits at the vehicle
//! position on the road axis and looks along `+z`.

use std::fs;
use std::path::Path;

use crate::codebook::Codeword;
use crate::error::{Error, Result};

/// Phase offsets assigned to beacons without an explicit one, in ms.
pub const DEFAULT_PHASES_MS: [f64; 8] = [11.0, 23.0, 37.0, 53.0, 61.0, 71.0, 79.0, 5.0];

#[derive(Debug, Clone, PartialEq)]
pub struct BeaconSpec {
    pub name: String,
    pub id: Codeword,
    /// `(x, y, z)` in meters.
    pub position: [f64; 3],
    /// Side of the square emitter in meters.
    pub size: f64,
    pub phase_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraSpec {
    pub focal_px: f64,
    pub width: usize,
    pub height: usize,
    pub frame_rate_hz: f64,
    /// Standard deviation of the additive Gaussian noise, in grey levels.
    pub noise_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionProfile {
    Standstill,
    AccelerateToCruise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSpec {
    pub profile: MotionProfile,
    pub start_position: f64,
    pub cruise_speed: f64,
    pub acceleration: f64,
}

impl MotionSpec {
    /// Vehicle position along the road at time `t`.
    pub fn position(&self, t: f64) -> f64 {
        match self.profile {
            MotionProfile::Standstill => self.start_position,
            MotionProfile::AccelerateToCruise => {
                let t_ramp = self.cruise_speed / self.acceleration;
                if t <= t_ramp {
                    self.start_position + 0.5 * self.acceleration * t * t
                } else {
                    self.start_position
                        + 0.5 * self.acceleration * t_ramp * t_ramp
                        + self.cruise_speed * (t - t_ramp)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub bloom_sigma_px: f64,
    /// Expected clutter blobs per frame.
    pub clutter_rate: f64,
    pub clutter_intensity: (f64, f64),
    pub clutter_radius_px: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub beacons: Vec<BeaconSpec>,
    pub camera: CameraSpec,
    pub motion: MotionSpec,
    pub bit_period_ms: f64,
    pub noise: NoiseSpec,
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            beacons: Vec::new(),
            camera: CameraSpec {
                focal_px: 2000.0,
                width: 1600,
                height: 1200,
                frame_rate_hz: 100.0,
                noise_floor: 0.2,
            },
            motion: MotionSpec {
                profile: MotionProfile::Standstill,
                start_position: 0.0,
                cruise_speed: 8.3,
                acceleration: 2.0,
            },
            bit_period_ms: 70.0,
            noise: NoiseSpec {
                bloom_sigma_px: 0.7,
                clutter_rate: 0.2,
                clutter_intensity: (20.0, 200.0),
                clutter_radius_px: (2.0, 7.5),
            },
            duration_s: 22.7,
            seed: 1,
        }
    }
}

impl SceneConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|m| Error::format(path, m))
    }

    /// Parses the text format; unspecified keys keep their defaults.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut cfg = SceneConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| format!("line {}: {m}", n + 1);
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err("expected `key = value`".into()))?;
            cfg.apply(key, value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let num = |v: &str| -> std::result::Result<f64, String> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("{key}: {v:?} is not a number"))
        };
        let int = |v: &str| -> std::result::Result<usize, String> {
            v.parse::<usize>()
                .map_err(|_| format!("{key}: {v:?} is not a non-negative integer"))
        };
        let pair = |v: &str| -> std::result::Result<(f64, f64), String> {
            let parts: Vec<&str> = v.split_whitespace().collect();
            match parts.as_slice() {
                [a, b] => Ok((num(a)?, num(b)?)),
                _ => Err(format!("{key}: expected two numbers")),
            }
        };
        match key {
            "camera.focal_px" => self.camera.focal_px = num(value)?,
            "camera.width" => self.camera.width = int(value)?,
            "camera.height" => self.camera.height = int(value)?,
            "camera.frame_rate_hz" => self.camera.frame_rate_hz = num(value)?,
            "camera.noise_floor" => self.camera.noise_floor = num(value)?,
            "motion.profile" => {
                self.motion.profile = match value {
                    "standstill" => MotionProfile::Standstill,
                    "accelerate_to_cruise" => MotionProfile::AccelerateToCruise,
                    _ => return Err(format!("unknown motion profile {value:?}")),
                }
            }
            "motion.start_position" => self.motion.start_position = num(value)?,
            "motion.cruise_speed" => self.motion.cruise_speed = num(value)?,
            "motion.acceleration" => self.motion.acceleration = num(value)?,
            "timing.bit_period_ms" => self.bit_period_ms = num(value)?,
            "noise.bloom_sigma_px" => self.noise.bloom_sigma_px = num(value)?,
            "noise.clutter_rate" => self.noise.clutter_rate = num(value)?,
            "noise.clutter_intensity" => self.noise.clutter_intensity = pair(value)?,
            "noise.clutter_radius_px" => self.noise.clutter_radius_px = pair(value)?,
            "duration_s" => self.duration_s = num(value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| format!("seed: {value:?} is not an integer"))?
            }
            "beacon" => {
                let b = self.parse_beacon(value)?;
                self.beacons.push(b);
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    // `name bits x y z [size=..] [phase_ms=..]`
    fn parse_beacon(&self, value: &str) -> std::result::Result<BeaconSpec, String> {
        let parts: Vec<&str> = value.split_whitespace().collect();
        if parts.len() < 5 {
            return Err("beacon needs `name bits x y z`".into());
        }
        let id = Codeword::parse(parts[1]).map_err(|e| e.to_string())?;
        let coord = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("beacon coordinate {s:?} is not a number"))
        };
        let mut spec = BeaconSpec {
            name: parts[0].to_string(),
            id,
            position: [coord(parts[2])?, coord(parts[3])?, coord(parts[4])?],
            size: 0.06,
            phase_ms: DEFAULT_PHASES_MS[self.beacons.len() % DEFAULT_PHASES_MS.len()],
        };
        for opt in &parts[5..] {
            let (k, v) = opt
                .split_once('=')
                .ok_or_else(|| format!("beacon option {opt:?} must be key=value"))?;
            let v = coord(v)?;
            match k {
                "size" => spec.size = v,
                "phase_ms" => spec.phase_ms = v,
                _ => return Err(format!("unknown beacon option {k:?}")),
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let c = &self.camera;
        if !(c.focal_px > 0.0) {
            return Err("camera.focal_px must be positive".into());
        }
        if c.width == 0 || c.height == 0 {
            return Err("camera dimensions must be positive".into());
        }
        if !(c.frame_rate_hz > 0.0) || !(self.bit_period_ms > 0.0) {
            return Err("frame rate and bit period must be positive".into());
        }
        if c.noise_floor < 0.0 || self.noise.bloom_sigma_px < 0.0 || self.noise.clutter_rate < 0.0 {
            return Err("noise parameters must be non-negative".into());
        }
        if self.motion.profile == MotionProfile::AccelerateToCruise
            && !(self.motion.acceleration > 0.0 && self.motion.cruise_speed > 0.0)
        {
            return Err("acceleration and cruise speed must be positive".into());
        }
        if !(self.duration_s > 0.0) {
            return Err("duration_s must be positive".into());
        }
        if let Some(b) = self.beacons.iter().find(|b| !(b.size > 0.0)) {
            return Err(format!("beacon {} has non-positive size", b.name));
        }
        Ok(())
    }

    /// Number of frames covered by `duration_s`.
    pub fn frame_count(&self) -> u64 {
        (self.duration_s * self.camera.frame_rate_hz + 1e-9).floor() as u64
    }
}
