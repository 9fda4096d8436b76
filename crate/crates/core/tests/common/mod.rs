#![allow(dead_code)]

use beacon_core::codebook::Codeword;
use beacon_core::simulator::config::{BeaconSpec, MotionProfile};
use beacon_core::simulator::SceneConfig;

pub const B1: &str = "000100110010";
pub const B2: &str = "010100100110";
pub const B3: &str = "000101010100";

pub fn beacon(name: &str, bits: &str, position: [f64; 3], phase_ms: f64) -> BeaconSpec {
    BeaconSpec {
        name: name.into(),
        id: Codeword::parse(bits).unwrap(),
        position,
        size: 0.06,
        phase_ms,
    }
}

/// Vehicle parked `distance` m before B1, which stands 3 m right and 1.5 m up.
pub fn standstill(distance: f64, clutter: f64) -> SceneConfig {
    let mut cfg = SceneConfig::default();
    cfg.motion.profile = MotionProfile::Standstill;
    cfg.motion.start_position = 150.0 - distance;
    cfg.noise.clutter_rate = clutter;
    cfg.beacons.push(beacon("B1", B1, [3.0, 1.5, 150.0], 11.0));
    cfg
}
