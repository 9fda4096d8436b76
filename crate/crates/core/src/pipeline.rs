//! Frame-by-frame recognition and its evaluation against ground truth.

use std::collections::BTreeSet;

use crate::codebook::{parse_bits, Codebook, Codeword};
use crate::decoder::{count_identifier_bits, match_bits, DecodeResult};
use crate::detector::{detect, DetectorParams, Reference};
use crate::imaging::sequence::FrameRecord;
use crate::imaging::Frame;
use crate::tracker::{Track, Tracker, TrackerParams};

/// Largest distance, in px beyond the symbol's half size, between a detection
/// and a ground-truth centroid for the detection to count as that beacon.
pub const TRUTH_GATE_PX: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineParams {
    pub detector: DetectorParams,
    pub tracker: TrackerParams,
}

/// Decode summary of one track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackReport {
    pub track_id: u64,
    pub first_frame: u64,
    pub last_frame: u64,
    pub samples: usize,
    pub decode: DecodeResult,
}

impl TrackReport {
    pub fn from_track(t: &Track, codebook: &Codebook) -> Self {
        TrackReport {
            track_id: t.track_id,
            first_frame: t.first_frame(),
            last_frame: t.last_matched_frame,
            samples: t.history.len(),
            decode: match_bits(t.decoder.bits(), t.decoder.emit_frames(), codebook),
        }
    }
}

/// Per-beacon results.
#[derive(Debug, Clone, PartialEq)]
pub struct BeaconMetrics {
    pub id: Codeword,
    /// Frames in which the beacon was inside the image.
    pub frames_visible: Option<u64>,
    /// Frames with a detection on the beacon.
    pub detections: Option<u64>,
    /// Distinct tracks fed by detections of the beacon.
    pub tracks_on_beacon: Option<u64>,
    /// Tracks whose decoded identifier is this beacon's.
    pub tracks_matching: u64,
    /// 12-bit windows matching the identifier, summed over matching tracks.
    pub occurrences: u64,
    pub first_recognition_m: Option<f64>,
    pub last_recognition_m: Option<f64>,
    pub bits_decoded: u64,
    pub error_bits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub frames: u64,
    pub detections: u64,
    pub tracks: u64,
    pub beacons: Vec<BeaconMetrics>,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub metrics: RunMetrics,
    pub tracks: Vec<TrackReport>,
}

#[derive(Debug, Clone, Default)]
struct TruthHits {
    frames_visible: u64,
    detections: u64,
    tracks: BTreeSet<u64>,
}

/// Streaming recognizer for one sequence.
pub struct Pipeline<'a> {
    params: PipelineParams,
    reference: Reference,
    codebook: &'a Codebook,
    tracker: Tracker,
    frames: u64,
    detections: u64,
    truth: Vec<FrameRecord>,
    beacon_ids: Vec<Codeword>,
    hits: Vec<TruthHits>,
}

impl<'a> Pipeline<'a> {
    pub fn new(params: PipelineParams, reference: Reference, codebook: &'a Codebook) -> Self {
        Pipeline {
            params,
            reference,
            codebook,
            tracker: Tracker::new(params.tracker),
            frames: 0,
            detections: 0,
            truth: Vec::new(),
            beacon_ids: Vec::new(),
            hits: Vec::new(),
        }
    }

    /// Processes the next frame; `truth` is its ground truth, if known.
    pub fn process(&mut self, frame: &Frame, truth: Option<&FrameRecord>) {
        let dets = detect(frame, &self.reference, &self.params.detector);
        let joined = self.tracker.update(frame.index, &dets);
        self.frames += 1;
        self.detections += dets.len() as u64;

        let Some(rec) = truth else { return };
        for b in &rec.beacons {
            if let Ok(v) = parse_bits(&b.beacon_id_bits) {
                if let Ok(c) = Codeword::new(v) {
                    if !self.beacon_ids.contains(&c) {
                        self.beacon_ids.push(c);
                        self.hits.push(TruthHits::default());
                    }
                }
            }
        }
        for b in rec.beacons.iter().filter(|b| b.visible) {
            let Some(k) = self.beacon_index(&b.beacon_id_bits) else {
                continue;
            };
            self.hits[k].frames_visible += 1;
            let gate = TRUTH_GATE_PX + truth_half_size(b.distance_m);
            let nearest = dets
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    (
                        i,
                        (d.centroid.0 - b.centroid_x).hypot(d.centroid.1 - b.centroid_y),
                    )
                })
                .filter(|&(_, dist)| dist <= gate)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((i, _)) = nearest {
                self.hits[k].detections += 1;
                self.hits[k].tracks.insert(joined[i]);
            }
        }
        self.truth.push(rec.clone());
    }

    fn beacon_index(&self, bits: &str) -> Option<usize> {
        let v = parse_bits(bits).ok()?;
        self.beacon_ids.iter().position(|c| c.id_value() == v)
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    /// Finalizes all tracks and computes the metrics.
    pub fn finish(self) -> RunReport {
        let created = self.tracker.created();
        let tracks: Vec<TrackReport> = self
            .tracker
            .finish()
            .iter()
            .map(|t| TrackReport::from_track(t, self.codebook))
            .collect();
        let mut beacons = evaluate(&tracks, &self.truth);
        for (m, h) in beacons.iter_mut().zip(&self.hits) {
            m.frames_visible = Some(h.frames_visible);
            m.detections = Some(h.detections);
            m.tracks_on_beacon = Some(h.tracks.len() as u64);
        }
        RunReport {
            metrics: RunMetrics {
                frames: self.frames,
                detections: self.detections,
                tracks: created,
                beacons,
            },
            tracks,
        }
    }
}

// Rough half size in px of a beacon at `distance`, for ground-truth gating.
fn truth_half_size(distance: f64) -> f64 {
    if distance > 0.0 {
        0.5 * 0.06 * 2000.0 / distance
    } else {
        0.0
    }
}

/// Joins track decode results with ground truth: per beacon (in order of
/// first appearance in the records), the tracks that decoded its identifier,
/// their error bits against the transmitted identifier, and the vehicle
/// position at the first and last completed identifier.
pub fn evaluate(tracks: &[TrackReport], truth: &[FrameRecord]) -> Vec<BeaconMetrics> {
    let mut ids: Vec<Codeword> = Vec::new();
    for rec in truth {
        for b in &rec.beacons {
            if let Some(c) = parse_bits(&b.beacon_id_bits)
                .ok()
                .and_then(|v| Codeword::new(v).ok())
            {
                if !ids.contains(&c) {
                    ids.push(c);
                }
            }
        }
    }
    let position_at = |frame: u64| -> Option<f64> {
        let k = truth.partition_point(|r| r.frame_index < frame);
        truth
            .get(k)
            .filter(|r| r.frame_index == frame)
            .and_then(|r| r.vehicle_position_m)
    };
    ids.iter()
        .map(|id| {
            let mut m = BeaconMetrics {
                id: *id,
                frames_visible: None,
                detections: None,
                tracks_on_beacon: None,
                tracks_matching: 0,
                occurrences: 0,
                first_recognition_m: None,
                last_recognition_m: None,
                bits_decoded: 0,
                error_bits: 0,
            };
            for t in tracks {
                let Some(matched) = t.decode.matched_id else {
                    continue;
                };
                if !matched.is_rotation_of(id) {
                    continue;
                }
                m.tracks_matching += 1;
                m.occurrences += t.decode.occurrences as u64;
                m.bits_decoded += t.decode.bits.len() as u64;
                m.error_bits += count_identifier_bits(&t.decode.bits, id).error as u64;
                if let Some(p) = t.decode.first_match_frame.and_then(position_at) {
                    m.first_recognition_m = Some(m.first_recognition_m.map_or(p, |q| q.min(p)));
                }
                if let Some(p) = t.decode.last_match_frame.and_then(position_at) {
                    m.last_recognition_m = Some(m.last_recognition_m.map_or(p, |q| q.max(p)));
                }
            }
            m
        })
        .collect()
}

/// Runs the pipeline over in-memory frames.
pub fn run_frames<I>(frames: I, params: PipelineParams, codebook: &Codebook) -> RunReport
where
    I: IntoIterator<Item = (Frame, Option<FrameRecord>)>,
{
    let mut p = Pipeline::new(params, Reference::canonical(), codebook);
    for (frame, rec) in frames {
        p.process(&frame, rec.as_ref());
    }
    p.finish()
}
