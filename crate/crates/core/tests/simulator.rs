mod common;

use std::path::PathBuf;

use beacon_core::decoder::orientation_from_moments;
use beacon_core::detector::{detect, propose, DetectorParams, Reference};
use beacon_core::imaging::sequence::SIDECAR_NAME;
use beacon_core::simulator::config::MotionProfile;
use beacon_core::simulator::{bit_index, peak_intensity, project, SceneConfig, Simulator};
use common::{beacon, standstill, B1, B2};
use proptest::prelude::*;

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn pinhole_sizes() {
    let p = project([0.0, 0.0, 60.0], 0.06, 2000.0, 1600, 1200).unwrap();
    assert!((p.size_px - 2.0).abs() < 1e-12);
    let p = project([0.0, 0.0, 30.0], 0.06, 2000.0, 1600, 1200).unwrap();
    assert!((p.size_px - 4.0).abs() < 1e-12);
    assert_eq!((p.x, p.y), (800.0, 600.0));
    assert!(project([0.0, 0.0, -5.0], 0.06, 2000.0, 1600, 1200).is_none());
    let p = project([3.0, -1.5, 60.0], 0.06, 2000.0, 1600, 1200).unwrap();
    assert!((p.x - 900.0).abs() < 1e-9 && (p.y - 550.0).abs() < 1e-9);
}

#[test]
fn intensity_law() {
    assert!((peak_intensity(120.0) - 10.0).abs() < 1e-12);
    assert_eq!(peak_intensity(10.0), 255.0);
    assert!(peak_intensity(200.0) < 5.0);
    let mut last = f64::INFINITY;
    for d in 1..400 {
        let p = peak_intensity(d as f64);
        assert!(p <= last);
        last = p;
    }
}

#[test]
fn rendered_brightness_falls_with_distance() {
    let mut last = u8::MAX;
    for d in [10.0, 20.0, 40.0, 60.0, 80.0, 100.0, 120.0, 150.0, 200.0] {
        let mut cfg = standstill(d, 0.0);
        cfg.camera.noise_floor = 0.0;
        let (f, _) = Simulator::new(cfg, 1).render(0);
        assert!(f.image.max() <= last, "{d} m");
        last = f.image.max();
    }
}

#[test]
fn truth_bit_follows_schedule() {
    let mut cfg = standstill(60.0, 0.0);
    cfg.beacons.push(beacon("B2", B2, [-3.0, 1.5, 150.0], 23.0));
    let sim = Simulator::new(cfg.clone(), 1);
    for k in (0..2270).step_by(13) {
        let rec = sim.record(k);
        for (b, t) in cfg.beacons.iter().zip(&rec.beacons) {
            // Frame k is at k * 10 ms; integer arithmetic avoids rounding.
            let slot = ((k * 10 + b.phase_ms as u64) / 70) % 12;
            assert_eq!(t.symbol_bit, b.id.bit(slot as usize), "frame {k}");
        }
    }
}

#[test]
fn beacon_at_200m_is_invisible_to_detector() {
    let sim = Simulator::new(standstill(200.0, 0.0), 1);
    for k in [0, 100, 200] {
        let (f, rec) = sim.render(k);
        assert!(rec.beacons[0].visible);
        assert!(detect(&f, &Reference::canonical(), &DetectorParams::default()).is_empty());
    }
}

#[test]
fn two_beacons_give_two_components() {
    let mut cfg = standstill(60.0, 0.0);
    cfg.beacons[0].position = [-20.0, 1.5, 150.0];
    cfg.beacons.push(beacon("B2", B2, [20.0, 1.5, 150.0], 23.0));
    let (f, rec) = Simulator::new(cfg, 1).render(3);
    let boxes = propose(&f, &DetectorParams::default());
    assert_eq!(boxes.len(), 2);
    assert!(rec.beacons.iter().all(|b| b.visible));
    let (a, b) = (boxes[0], boxes[1]);
    assert!(a.x + a.w < b.x || b.x + b.w < a.x);
}

#[test]
fn near_symbol_orientation_matches_truth() {
    let sim = Simulator::new(standstill(40.0, 0.0), 1);
    for k in 0..84 {
        let (f, rec) = sim.render(k);
        let boxes = propose(&f, &DetectorParams::default());
        assert_eq!(boxes.len(), 1);
        let dets = detect(&f, &Reference::canonical(), &DetectorParams::default());
        let (bit, degenerate) = orientation_from_moments(&dets[0].moments);
        assert!(!degenerate);
        assert_eq!(bit, rec.beacons[0].symbol_bit, "frame {k}");
    }
}

#[test]
fn orientation_agreement_by_distance() {
    for d in [40.0, 60.0, 80.0, 100.0] {
        let sim = Simulator::new(standstill(d, 0.0), 2);
        let frames = 5 * 84;
        let agree = (0..frames)
            .filter(|&k| {
                let (f, rec) = sim.render(k);
                let dets = detect(&f, &Reference::canonical(), &DetectorParams::default());
                dets.len() == 1
                    && orientation_from_moments(&dets[0].moments).0 == rec.beacons[0].symbol_bit
            })
            .count();
        assert!(
            agree as f64 >= 0.99 * frames as f64,
            "{d} m: {agree}/{frames}"
        );
    }
}

#[test]
fn frame_counts_of_bundled_scenes() {
    let cfg = SceneConfig::load(&bundled("standstill_60m.conf")).unwrap();
    assert_eq!(cfg.frame_count(), 2270);
    assert_eq!(cfg.motion.profile, MotionProfile::Standstill);
    let cfg = SceneConfig::load(&bundled("driving_day.conf")).unwrap();
    assert_eq!(cfg.frame_count(), 2700);
    assert_eq!(cfg.beacons.len(), 3);
    let z: Vec<f64> = cfg.beacons.iter().map(|b| b.position[2]).collect();
    assert_eq!(z, vec![150.0, 110.0, 70.0]);
    for name in [
        "standstill_40m",
        "standstill_80m",
        "standstill_100m",
        "standstill_120m",
        "driving_night",
    ] {
        SceneConfig::load(&bundled(&format!("{name}.conf"))).unwrap();
    }
}

#[test]
fn config_text_errors() {
    assert!(SceneConfig::parse("camera.focal_px = -3\n").is_err());
    assert!(SceneConfig::parse("no_such_key = 1\n").is_err());
    assert!(SceneConfig::parse("beacon = B 001100110011 0 0 10\n").is_err());
    assert!(SceneConfig::parse("duration_s = abc\n").is_err());
    let cfg =
        SceneConfig::parse(&format!("# c\nseed = 9\nbeacon = X {B1} 1 2 3 size=0.1\n")).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.beacons[0].size, 0.1);
    assert_eq!(cfg.beacons[0].position, [1.0, 2.0, 3.0]);
}

#[test]
fn motion_profile() {
    let cfg = SceneConfig::load(&bundled("driving_day.conf")).unwrap();
    let m = &cfg.motion;
    assert_eq!(m.position(0.0), 0.0);
    assert!((m.position(1.0) - 1.0).abs() < 1e-12);
    let ramp = 8.3 / 2.0;
    let at_ramp = 0.5 * 2.0 * ramp * ramp;
    assert!((m.position(ramp + 2.0) - (at_ramp + 16.6)).abs() < 1e-9);
}

#[test]
fn rendering_is_deterministic() {
    let sim = Simulator::new(standstill(60.0, 2.0), 11);
    let (a, ra) = sim.render(123);
    let (b, rb) = sim.render(123);
    assert_eq!(a.image, b.image);
    assert_eq!(ra, rb);
    let (c, _) = Simulator::new(standstill(60.0, 2.0), 12).render(123);
    assert_ne!(a.image, c.image);
}

#[test]
fn written_sequences_are_byte_identical() {
    let mut cfg = standstill(60.0, 0.5);
    cfg.duration_s = 0.3;
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(
        Simulator::new(cfg.clone(), 4).write_sequence(&a).unwrap(),
        30
    );
    Simulator::new(cfg, 4).write_sequence(&b).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 31);
    for n in names {
        assert_eq!(
            std::fs::read(a.join(&n)).unwrap(),
            std::fs::read(b.join(&n)).unwrap()
        );
    }
    let sidecar = std::fs::read_to_string(a.join(SIDECAR_NAME)).unwrap();
    assert_eq!(sidecar.lines().count(), 30);
}

#[test]
fn noise_floor_statistics() {
    let mut cfg = SceneConfig::default();
    cfg.camera.noise_floor = 1.5;
    cfg.noise.clutter_rate = 0.0;
    let (f, _) = Simulator::new(cfg, 3).render(0);
    let n = f.image.pixels().len() as f64;
    let nonzero = f.image.pixels().iter().filter(|&&p| p > 0).count() as f64;
    // P(round(max(0, N(0, 1.5))) > 0) = P(z > 1/3).
    let expect = 0.5 * erfc_oracle((0.5 / 1.5) / std::f64::consts::SQRT_2);
    assert!(
        (nonzero / n - expect).abs() < 0.005,
        "{} vs {expect}",
        nonzero / n
    );
    let mean: f64 = f.image.pixels().iter().map(|&p| p as f64).sum::<f64>() / n;
    assert!(mean > 0.3 && mean < 0.8, "{mean}");
}

// Complementary error function by Simpson integration of the normal density.
fn erfc_oracle(x: f64) -> f64 {
    let steps = 20_000;
    let hi = 12.0;
    let h = (hi - x) / steps as f64;
    let f = |t: f64| (-t * t).exp();
    let mut s = f(x) + f(hi);
    for i in 1..steps {
        let t = x + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
    }
    s * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
}

proptest! {
    #[test]
    fn bit_index_matches_integer_schedule(ms in 0u64..1_000_000, phase in 0u64..70) {
        let k = bit_index(ms as f64 / 1000.0, phase as f64, 70.0);
        prop_assert_eq!(k as u64, ((ms + phase) / 70) % 12);
    }
}
