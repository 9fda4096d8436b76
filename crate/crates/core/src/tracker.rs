//! Greedy nearest-centroid association of detections to persistent tracks.

use crate::decoder::{orientation_from_moments, DecoderParams, DecoderState};
use crate::detector::Detection;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams {
    /// Largest centroid distance, in px, at which a detection can join a track.
    pub max_dist: f64,
    /// A track is dropped once it has gone unmatched for more than this many frames.
    pub max_unmatched: u32,
    pub decoder: DecoderParams,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            max_dist: 50.0,
            max_unmatched: 30,
            decoder: DecoderParams::default(),
        }
    }
}

/// One associated detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub frame_index: u64,
    pub centroid: (f64, f64),
    pub orientation: u8,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u64,
    pub last_centroid: (f64, f64),
    pub last_matched_frame: u64,
    pub age_unmatched: u32,
    pub history: Vec<Sample>,
    pub decoder: DecoderState,
}

impl Track {
    fn new(track_id: u64, det: &Detection, params: DecoderParams) -> Self {
        let mut t = Track {
            track_id,
            last_centroid: det.centroid,
            last_matched_frame: det.frame_index,
            age_unmatched: 0,
            history: Vec::new(),
            decoder: DecoderState::new(params),
        };
        t.absorb(det);
        t
    }

    fn absorb(&mut self, det: &Detection) {
        let (bit, degenerate) = orientation_from_moments(&det.moments);
        self.last_centroid = det.centroid;
        self.last_matched_frame = det.frame_index;
        self.age_unmatched = 0;
        self.history.push(Sample {
            frame_index: det.frame_index,
            centroid: det.centroid,
            orientation: bit,
            degenerate,
        });
        self.decoder.step(bit, det.frame_index);
    }

    pub fn first_frame(&self) -> u64 {
        self.history.first().map_or(0, |s| s.frame_index)
    }

    /// `(frame_index, orientation)` pairs of the history.
    pub fn orientation_samples(&self) -> Vec<(u64, u8)> {
        self.history
            .iter()
            .map(|s| (s.frame_index, s.orientation))
            .collect()
    }
}

/// Result of greedy association.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    /// `(track index, detection index)` pairs in the order they were taken.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// Takes (track, detection) pairs in ascending centroid distance, using each
/// side at most once and never pairing beyond `max_dist`. Equal distances go
/// to the lower track id, then the lower detection index.
pub fn associate(
    tracks: &[(u64, (f64, f64))],
    detections: &[(f64, f64)],
    max_dist: f64,
) -> Assignment {
    let mut edges: Vec<(f64, u64, usize, usize)> = Vec::new();
    for (ti, &(id, (tx, ty))) in tracks.iter().enumerate() {
        for (di, &(dx, dy)) in detections.iter().enumerate() {
            let d = ((tx - dx).powi(2) + (ty - dy).powi(2)).sqrt();
            if d <= max_dist {
                edges.push((d, id, di, ti));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut track_used = vec![false; tracks.len()];
    let mut det_used = vec![false; detections.len()];
    let mut pairs = Vec::new();
    for (_, _, di, ti) in edges {
        if !track_used[ti] && !det_used[di] {
            track_used[ti] = true;
            det_used[di] = true;
            pairs.push((ti, di));
        }
    }
    Assignment {
        pairs,
        unmatched_tracks: (0..tracks.len()).filter(|&i| !track_used[i]).collect(),
        unmatched_detections: (0..detections.len()).filter(|&i| !det_used[i]).collect(),
    }
}

/// Owns the live tracks of one sequence.
#[derive(Debug, Clone)]
pub struct Tracker {
    params: TrackerParams,
    tracks: Vec<Track>,
    finished: Vec<Track>,
    next_id: u64,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Tracker {
            params,
            tracks: Vec::new(),
            finished: Vec::new(),
            next_id: 1,
        }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn finished(&self) -> &[Track] {
        &self.finished
    }

    /// Number of tracks created so far.
    pub fn created(&self) -> u64 {
        self.next_id - 1
    }

    /// Associates one frame's detections, spawns tracks for the leftovers
    /// and retires stale tracks. Returns the track id each detection joined.
    pub fn update(&mut self, frame_index: u64, detections: &[Detection]) -> Vec<u64> {
        let anchors: Vec<(u64, (f64, f64))> = self
            .tracks
            .iter()
            .map(|t| (t.track_id, t.last_centroid))
            .collect();
        let centroids: Vec<(f64, f64)> = detections.iter().map(|d| d.centroid).collect();
        let a = associate(&anchors, &centroids, self.params.max_dist);

        let mut joined = vec![0u64; detections.len()];
        for &(ti, di) in &a.pairs {
            self.tracks[ti].absorb(&detections[di]);
            joined[di] = self.tracks[ti].track_id;
        }
        for &ti in &a.unmatched_tracks {
            self.tracks[ti].age_unmatched += 1;
        }
        for &di in &a.unmatched_detections {
            let t = Track::new(self.next_id, &detections[di], self.params.decoder);
            joined[di] = t.track_id;
            self.next_id += 1;
            self.tracks.push(t);
        }
        self.prune(frame_index);
        joined
    }

    /// Retires tracks unmatched for more than `max_unmatched` frames.
    pub fn prune(&mut self, _current_frame: u64) {
        let limit = self.params.max_unmatched;
        let (keep, gone): (Vec<Track>, Vec<Track>) = std::mem::take(&mut self.tracks)
            .into_iter()
            .partition(|t| t.age_unmatched <= limit);
        self.tracks = keep;
        self.finished.extend(gone);
    }

    /// Retires every live track and returns all tracks ordered by id.
    pub fn finish(mut self) -> Vec<Track> {
        self.finished.append(&mut self.tracks);
        self.finished.sort_by_key(|t| t.track_id);
        self.finished
    }
}
