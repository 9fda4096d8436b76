use std::collections::VecDeque;

use beacon_core::detector::Reference;
use beacon_core::imaging::sequence::{
    frame_file_name, read_sidecar, BeaconTruth, FrameRecord, SequenceDir, SequenceWriter,
    SIDECAR_NAME,
};
use beacon_core::imaging::{
    binarize, central_moment, component_pixels, connected_components, hu_distance, hu_features,
    pgm, BinaryImage, BoundingBox, Frame, GrayImage, Moments,
};
use beacon_core::simulator::render::{centered_patch, gaussian_blur, render_splat, Shape};
use beacon_core::Error;
use proptest::prelude::*;

// Second route for components: dilate densely with a 3x3 element, label the
// dilated image by 8-connected flood fill, then take tight bounds of the
// original pixels of each label, ordered by their first pixel in scan order.
fn oracle_components(img: &BinaryImage) -> Vec<BoundingBox> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let on =
        |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && img.get(x as usize, y as usize) == 1;
    let mut dilated = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            dilated[(y * w + x) as usize] =
                (-1..=1).any(|dy| (-1..=1).any(|dx| on(x + dx, y + dy)));
        }
    }
    let mut label = vec![usize::MAX; (w * h) as usize];
    let mut next = 0;
    for start in 0..(w * h) as usize {
        if !dilated[start] || label[start] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        label[start] = next;
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i as i64 % w, i as i64 / w);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let j = (ny * w + nx) as usize;
                    if dilated[j] && label[j] == usize::MAX {
                        label[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
        next += 1;
    }
    let mut bounds: Vec<Option<(usize, i64, i64, i64, i64)>> = vec![None; next];
    for y in 0..h {
        for x in 0..w {
            if !on(x, y) {
                continue;
            }
            let i = (y * w + x) as usize;
            let b = bounds[label[i]].get_or_insert((i, x, y, x, y));
            b.1 = b.1.min(x);
            b.2 = b.2.min(y);
            b.3 = b.3.max(x);
            b.4 = b.4.max(y);
        }
    }
    let mut found: Vec<_> = bounds.into_iter().flatten().collect();
    found.sort_by_key(|b| b.0);
    found
        .into_iter()
        .map(|(_, x0, y0, x1, y1)| BoundingBox {
            x: x0 as u32,
            y: y0 as u32,
            w: (x1 - x0 + 1) as u32,
            h: (y1 - y0 + 1) as u32,
        })
        .collect()
}

fn binary(w: usize, h: usize, ones: &[(usize, usize)]) -> BinaryImage {
    let mut bits = vec![0; w * h];
    for &(x, y) in ones {
        bits[y * w + x] = 1;
    }
    BinaryImage::from_bits(w, h, bits).unwrap()
}

// Anti-aliased, optionally blurred and rotated square in a 21x21 patch.
fn rendered_square(side: f64, cx: f64, cy: f64, angle: f64, bloom: f64) -> GrayImage {
    let n = 21;
    let mut buf = vec![0f32; n * n];
    let (s, c) = angle.sin_cos();
    for y in 0..n {
        for x in 0..n {
            let mut hits = 0;
            for j in 0..4 {
                for i in 0..4 {
                    let px = x as f64 + (i as f64 + 0.5) / 4.0 - cx;
                    let py = y as f64 + (j as f64 + 0.5) / 4.0 - cy;
                    let (u, v) = (c * px + s * py, -s * px + c * py);
                    if u.abs() <= side / 2.0 && v.abs() <= side / 2.0 {
                        hits += 1;
                    }
                }
            }
            buf[y * n + x] = 255.0 * hits as f32 / 16.0;
        }
    }
    if bloom > 0.0 {
        gaussian_blur(&mut buf, n, n, bloom);
    }
    GrayImage::from_fn(n, n, |x, y| buf[y * n + x].round().min(255.0) as u8)
}

fn rendered_disk(radius: f64, cx: f64, cy: f64, bloom: f64) -> GrayImage {
    let s = render_splat(Shape::Disk { radius }, cx, cy, bloom, 255.0).unwrap();
    GrayImage::from_fn(21, 21, |x, y| {
        s.get(x as i64, y as i64).round().min(255.0) as u8
    })
}

fn diagonal_bar(n: usize) -> GrayImage {
    GrayImage::from_fn(n, n, |x, y| if x.abs_diff(y) <= 1 { 200 } else { 0 })
}

fn asymmetric_blob() -> GrayImage {
    GrayImage::from_fn(11, 9, |x, y| {
        let v = (x * 37 + y * 91 + x * y * 13) % 250;
        if (x + 2 * y) % 5 == 0 || v < 60 {
            v as u8 + 5
        } else {
            0
        }
    })
}

fn gray_strategy() -> impl Strategy<Value = GrayImage> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        proptest::collection::vec(prop_oneof![3 => Just(0u8), 1 => any::<u8>()], w * h)
            .prop_map(move |p| GrayImage::from_pixels(w, h, p).unwrap())
    })
}

fn binary_strategy() -> impl Strategy<Value = BinaryImage> {
    (1usize..40, 1usize..40, 0.0f64..0.3).prop_flat_map(|(w, h, density)| {
        proptest::collection::vec(proptest::bool::weighted(density), w * h).prop_map(move |b| {
            BinaryImage::from_bits(w, h, b.into_iter().map(u8::from).collect()).unwrap()
        })
    })
}

#[test]
fn binarize_examples() {
    let black = GrayImage::new(16, 9);
    assert_eq!(binarize(&black, 5).count_ones(), 0);
    let mut one = GrayImage::new(16, 9);
    one.set(3, 4, 200);
    let b = binarize(&one, 5);
    assert_eq!(b.count_ones(), 1);
    assert_eq!(b.get(3, 4), 1);
    let edge = GrayImage::from_pixels(2, 1, vec![4, 5]).unwrap();
    let b = binarize(&edge, 5);
    assert_eq!((b.get(0, 0), b.get(1, 0)), (0, 1));
}

#[test]
fn components_examples() {
    let far = binary(20, 5, &[(2, 2), (12, 2)]);
    assert_eq!(connected_components(&far).len(), 2);
    let diag = binary(6, 6, &[(2, 2), (3, 3)]);
    assert_eq!(
        connected_components(&diag),
        vec![BoundingBox {
            x: 2,
            y: 2,
            w: 2,
            h: 2
        }]
    );
    let l = binary(8, 8, &[(2, 2), (2, 3), (2, 4), (3, 4), (4, 4)]);
    assert_eq!(
        connected_components(&l),
        vec![BoundingBox {
            x: 2,
            y: 2,
            w: 3,
            h: 3
        }]
    );
    assert!(connected_components(&binary(10, 10, &[])).is_empty());
}

#[test]
fn components_merge_within_dilation_reach() {
    // Three columns apart the dilated pixels touch; four apart they do not.
    assert_eq!(
        connected_components(&binary(12, 3, &[(1, 1), (4, 1)])).len(),
        1
    );
    assert_eq!(
        connected_components(&binary(12, 3, &[(1, 1), (5, 1)])).len(),
        2
    );
    assert_eq!(
        connected_components(&binary(12, 12, &[(1, 1), (4, 4)])).len(),
        1
    );
    assert_eq!(
        connected_components(&binary(12, 12, &[(1, 1), (5, 4)])).len(),
        2
    );
}

#[test]
fn ring_and_far_center_give_nested_boxes() {
    let mut ones = Vec::new();
    for i in 0..13 {
        ones.extend([(i, 0), (i, 12), (0, i), (12, i)]);
    }
    ones.push((6, 6));
    let boxes = connected_components(&binary(13, 13, &ones));
    assert_eq!(
        boxes,
        vec![
            BoundingBox {
                x: 0,
                y: 0,
                w: 13,
                h: 13
            },
            BoundingBox {
                x: 6,
                y: 6,
                w: 1,
                h: 1
            },
        ]
    );
}

#[test]
fn central_moment_examples() {
    let mut single = GrayImage::new(5, 5);
    single.set(2, 3, 77);
    let m = Moments::of(&single).unwrap();
    assert_eq!((m.mu11, m.mu20, m.mu02), (0.0, 0.0, 0.0));
    assert_eq!((m.cx, m.cy), (2.0, 3.0));

    let square = GrayImage::from_fn(2, 2, |_, _| 100);
    assert_eq!(central_moment(&square, 2, 0).unwrap(), 100.0);
    assert_eq!(central_moment(&square, 0, 2).unwrap(), 100.0);
    assert_eq!(central_moment(&square, 1, 1).unwrap(), 0.0);

    assert!(matches!(
        Moments::of(&GrayImage::new(3, 3)),
        Err(Error::DegeneratePatch)
    ));
}

#[test]
fn mirror_negates_mu11() {
    let p = asymmetric_blob();
    let a = Moments::of(&p).unwrap();
    let b = Moments::of(&p.flip_horizontal()).unwrap();
    assert!(a.mu11.abs() > 1.0);
    assert!((a.mu11 + b.mu11).abs() <= 1e-9 * a.mu11.abs());
    assert!((a.mu20 - b.mu20).abs() <= 1e-9 * a.mu20);
    assert!((a.mu02 - b.mu02).abs() <= 1e-9 * a.mu02);
}

#[test]
fn hu_rotation_invariance() {
    for p in [
        asymmetric_blob(),
        diagonal_bar(9),
        Reference::canonical().patch().clone(),
    ] {
        let h = hu_features(&p).unwrap();
        let mut r = p.clone();
        for _ in 0..3 {
            r = r.rotate90();
            let hr = hu_features(&r).unwrap();
            for (a, b) in h.c.iter().zip(hr.c.iter()) {
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-300), "{a} vs {b}");
            }
            assert!(hu_distance(&p, &r).unwrap() < 1e-3);
        }
    }
}

#[test]
fn hu_scale_by_two() {
    let bar = diagonal_bar(9);
    let up = GrayImage::from_fn(18, 18, |x, y| bar.get(x / 2, y / 2));
    let c1 = hu_features(&bar).unwrap().c[0];
    let c1_up = hu_features(&up).unwrap().c[0];
    assert!((c1 - c1_up).abs() <= 0.05 * c1, "{c1} vs {c1_up}");
}

#[test]
fn hu_uniform_disk_has_no_second_invariant() {
    let disk = GrayImage::from_fn(21, 21, |x, y| {
        let (dx, dy) = (x as f64 - 10.0, y as f64 - 10.0);
        if dx * dx + dy * dy <= 49.0 {
            180
        } else {
            0
        }
    });
    let h = hu_features(&disk).unwrap();
    assert!(h.c[1].abs() <= 1e-12 * h.c[0] * h.c[0]);
}

#[test]
fn hu_distance_identity_and_symmetry() {
    let a = asymmetric_blob();
    let b = diagonal_bar(7);
    assert_eq!(hu_distance(&a, &a).unwrap(), 0.0);
    assert_eq!(hu_distance(&a, &b).unwrap(), hu_distance(&b, &a).unwrap());
    assert!(hu_distance(&GrayImage::new(2, 2), &a).is_err());
}

#[test]
fn both_symbols_match_the_reference() {
    let r = Reference::canonical();
    for size in [2.0, 2.5, 4.0, 8.0, 12.0] {
        let s1 = centered_patch(Shape::Symbol { size, bit: 1 }, 21, 0.7, 255.0);
        let s0 = centered_patch(Shape::Symbol { size, bit: 0 }, 21, 0.7, 255.0);
        assert!(hu_distance(&s1, &s0).unwrap() < 0.2);
        assert!(hu_distance(&s1, r.patch()).unwrap() < 0.2, "size {size}");
        assert!(hu_distance(&s0, r.patch()).unwrap() < 0.2, "size {size}");
    }
}

#[test]
fn rendered_squares_and_disks_are_rejected() {
    let r = Reference::canonical();
    for (side, angle) in [(6.0, 0.0), (10.0, 0.0), (10.0, 0.2), (14.0, 0.0)] {
        let d = hu_distance(&rendered_square(side, 10.8, 10.3, angle, 0.7), r.patch()).unwrap();
        assert!(d > 0.2, "square {side} at {angle}: {d}");
    }
    for radius in [5.0, 7.5] {
        let d = hu_distance(&rendered_disk(radius, 10.3, 10.7, 0.7), r.patch()).unwrap();
        assert!(d > 0.2, "disk {radius}: {d}");
    }
}

// With every invariant past the second exactly zero, a perfectly centered
// square or disk is compared on c1 alone and lands near 0.1.
#[test]
fn exactly_symmetric_blobs_fall_inside_the_gate() {
    let r = Reference::canonical();
    let square = rendered_square(10.0, 10.5, 10.5, 0.0, 0.0);
    let disk = centered_patch(Shape::Disk { radius: 5.0 }, 21, 0.7, 255.0);
    for p in [square, disk] {
        let h = hu_features(&p).unwrap();
        assert!(h.c[1..].iter().all(|&c| c == 0.0));
        let d = hu_distance(&p, r.patch()).unwrap();
        assert!((0.09..0.11).contains(&d), "{d}");
    }
}

#[test]
fn reference_patch_shape() {
    let r = Reference::canonical();
    assert_eq!((r.patch().width(), r.patch().height()), (21, 21));
    assert_eq!(r.patch().max(), 255);
    let h = r.features();
    assert!(h.c.iter().all(|c| c.is_finite()));
}

#[test]
fn pgm_round_trip_and_strictness() {
    let img = asymmetric_blob();
    let bytes = pgm::encode(&img);
    assert!(bytes.starts_with(b"P5\n11 9\n255\n"));
    assert_eq!(pgm::decode(&bytes).unwrap(), img);

    let mut bad = bytes.clone();
    bad[1] = b'2';
    assert!(pgm::decode(&bad).is_err());
    assert!(pgm::decode(b"P5\n2 1\n254\n\x01\x02").is_err());
    assert!(pgm::decode(b"P5\n2 1\n255\n\x01").is_err());
    assert!(pgm::decode(b"P5\n2 1\n255\n\x01\x02\x03").is_err());
    assert!(pgm::decode(b"P5\n# note\n2 1\n255\n\x01\x02").is_err());
    assert!(pgm::decode(b"P5 2 1 255 \x01\x02").is_ok());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.pgm");
    pgm::write(&path, &img).unwrap();
    assert_eq!(pgm::read(&path).unwrap(), img);
    assert!(matches!(
        pgm::read(&dir.path().join("none.pgm")),
        Err(Error::Io { .. })
    ));
}

fn record(i: u64) -> FrameRecord {
    FrameRecord {
        frame_index: i,
        timestamp_s: i as f64 * 0.01,
        vehicle_position_m: Some(0.5 * i as f64),
        beacons: vec![BeaconTruth {
            beacon_id_bits: "000100110010".into(),
            centroid_x: 812.25,
            centroid_y: 554.5,
            visible: true,
            symbol_bit: (i % 2) as u8,
            distance_m: 60.075,
        }],
    }
}

#[test]
fn sequence_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    let mut w = SequenceWriter::create(&seq).unwrap();
    for i in 0..5 {
        let img = GrayImage::from_fn(8, 6, |x, y| ((x + y + i as usize) * 10) as u8);
        w.push(&Frame::new(i, i as f64 * 0.01, img), &record(i))
            .unwrap();
    }
    w.finish().unwrap();

    assert!(seq.join(frame_file_name(4)).exists());
    assert_eq!(frame_file_name(12), "frame_000012.pgm");
    let truth = read_sidecar(&seq.join(SIDECAR_NAME)).unwrap();
    assert_eq!(truth, (0..5).map(record).collect::<Vec<_>>());

    let d = SequenceDir::open(&seq).unwrap();
    assert_eq!(d.len(), 5);
    assert!(d.has_ground_truth());
    assert_eq!(d.first_missing(), None);
    let f = d.load(3).unwrap();
    assert_eq!((f.index, f.image.get(1, 1)), (3, 50));

    std::fs::remove_file(seq.join(frame_file_name(2))).unwrap();
    let d = SequenceDir::open(&seq).unwrap();
    assert_eq!(d.first_missing(), Some(2));
    assert!(matches!(
        d.load(2),
        Err(Error::MissingFrame { index: 2, .. })
    ));
}

#[test]
fn sidecar_rejects_non_increasing_time() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(SIDECAR_NAME);
    let mut a = record(0);
    let mut b = record(1);
    b.timestamp_s = a.timestamp_s;
    a.vehicle_position_m = None;
    let text = format!(
        "{}\n{}\n",
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    std::fs::write(&path, text).unwrap();
    assert!(matches!(read_sidecar(&path), Err(Error::Format { .. })));
}

#[test]
fn sequence_without_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    for i in [0u64, 1, 2] {
        pgm::write(&dir.path().join(frame_file_name(i)), &GrayImage::new(4, 4)).unwrap();
    }
    let d = SequenceDir::open(dir.path()).unwrap();
    assert_eq!(d.len(), 3);
    assert!(!d.has_ground_truth());
    pgm::write(&dir.path().join(frame_file_name(4)), &GrayImage::new(4, 4)).unwrap();
    assert!(matches!(
        SequenceDir::open(dir.path()),
        Err(Error::MissingFrame { index: 3, .. })
    ));
}

proptest! {
    #[test]
    fn components_match_dense_oracle(img in binary_strategy()) {
        prop_assert_eq!(connected_components(&img), oracle_components(&img));
    }

    #[test]
    fn components_partition_foreground(img in binary_strategy()) {
        let groups = component_pixels(&img);
        let boxes = connected_components(&img);
        prop_assert_eq!(groups.len(), boxes.len());
        let mut owner = vec![usize::MAX; img.width() * img.height()];
        for (k, (g, b)) in groups.iter().zip(&boxes).enumerate() {
            for &(x, y) in g {
                let i = y as usize * img.width() + x as usize;
                prop_assert_eq!(img.get(x as usize, y as usize), 1);
                prop_assert_eq!(owner[i], usize::MAX);
                owner[i] = k;
                prop_assert!(b.contains(x, y));
            }
            prop_assert!(b.w >= 1 && b.h >= 1);
            prop_assert!((b.x + b.w) as usize <= img.width() && (b.y + b.h) as usize <= img.height());
        }
        for (i, &b) in img.bits().iter().enumerate() {
            prop_assert_eq!(b == 1, owner[i] != usize::MAX);
        }
    }

    #[test]
    fn binarize_is_idempotent(img in gray_strategy(), t in 1u8..=255) {
        let once = binarize(&img, t);
        prop_assert_eq!(binarize(&once.to_gray(), t), once);
    }

    #[test]
    fn hu_translation_is_exact(img in gray_strategy(), ox in 0usize..30, oy in 0usize..30) {
        prop_assume!(img.max() > 0);
        let big = img.embed(img.width() + 40, img.height() + 40, ox, oy);
        prop_assert_eq!(hu_features(&img).unwrap(), hu_features(&big).unwrap());
    }

    #[test]
    fn hu_distance_is_symmetric(a in gray_strategy(), b in gray_strategy()) {
        prop_assume!(a.max() > 0 && b.max() > 0);
        let ab = hu_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, hu_distance(&b, &a).unwrap());
        prop_assert_eq!(hu_distance(&a, &a).unwrap(), 0.0);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn hu_features_finite(img in gray_strategy()) {
        prop_assume!(img.max() > 0);
        prop_assert!(hu_features(&img).unwrap().c.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn pgm_round_trip(img in gray_strategy()) {
        prop_assert_eq!(pgm::decode(&pgm::encode(&img)).unwrap(), img);
    }
}
