//! Orientation samples to bits: a 7-sample sliding sum feeds a Schmitt
//! trigger, and a held level is re-emitted once per bit period.

use crate::codebook::{Codebook, Codeword, CODE_LEN};
use crate::error::{Error, Result};
use crate::imaging::{GrayImage, Moments};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderParams {
    pub window: usize,
    /// Lower trigger threshold: fall when the sum is below it.
    pub k1: usize,
    /// Upper trigger threshold: rise when the sum exceeds it.
    pub k2: usize,
    /// Frames per transmitted bit.
    pub bit_frames: u64,
    /// Extra frames a held level waits before it is re-emitted, so the
    /// repeated bit is read once the window covers the next bit period.
    pub repeat_guard: u64,
}

impl Default for DecoderParams {
    fn default() -> Self {
        DecoderParams {
            window: 7,
            k1: 2,
            k2: 4,
            bit_frames: 7,
            repeat_guard: 2,
        }
    }
}

/// Orientation of a patch: 1 when the principal axis angle is positive
/// (a `\` bar in image coordinates). The flag marks patches whose angle is
/// undefined; they read as 0.
pub fn orientation_bit(patch: &GrayImage) -> Result<(u8, bool)> {
    Ok(orientation_from_moments(&Moments::of(patch)?))
}

pub fn orientation_from_moments(m: &Moments) -> (u8, bool) {
    let scale = m.mu20.abs().max(m.mu02.abs()).max(f64::MIN_POSITIVE);
    let degenerate = m.mu11.abs() <= 1e-12 * scale && (m.mu20 - m.mu02).abs() <= 1e-12 * scale;
    if degenerate {
        return (0, true);
    }
    ((m.orientation() > 0.0) as u8, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerLevel {
    Undefined,
    Low,
    High,
}

/// Streaming decoder of one track.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    params: DecoderParams,
    window: Vec<u8>,
    head: usize,
    level: TriggerLevel,
    last_emit_frame: Option<u64>,
    bits: Vec<u8>,
    emit_frames: Vec<u64>,
    transition_frames: Vec<u64>,
}

impl Default for DecoderState {
    fn default() -> Self {
        DecoderState::new(DecoderParams::default())
    }
}

impl DecoderState {
    pub fn new(params: DecoderParams) -> Self {
        DecoderState {
            params,
            window: Vec::with_capacity(params.window),
            head: 0,
            level: TriggerLevel::Undefined,
            last_emit_frame: None,
            bits: Vec::new(),
            emit_frames: Vec::new(),
            transition_frames: Vec::new(),
        }
    }

    pub fn level(&self) -> TriggerLevel {
        self.level
    }

    /// Number of ones in the window.
    pub fn window_sum(&self) -> usize {
        self.window.iter().filter(|&&b| b == 1).count()
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Frame at which each bit was emitted.
    pub fn emit_frames(&self) -> &[u64] {
        &self.emit_frames
    }

    pub fn transition_frames(&self) -> &[u64] {
        &self.transition_frames
    }

    pub fn last_emit_frame(&self) -> Option<u64> {
        self.last_emit_frame
    }

    /// Feeds one orientation sample; returns the bit emitted at this frame.
    ///
    /// While the window is still filling, unseen samples count against a
    /// crossing: a rise needs more than `k2` ones and a fall needs fewer
    /// than `k1` ones even if every unseen sample were a one. On a full
    /// window these are the plain comparisons `n > k2` and `n < k1`.
    pub fn step(&mut self, orientation: u8, frame_index: u64) -> Option<u8> {
        let p = self.params;
        let bit = (orientation != 0) as u8;
        if self.window.len() < p.window {
            self.window.push(bit);
        } else {
            self.window[self.head] = bit;
            self.head = (self.head + 1) % p.window;
        }
        let ones = self.window_sum();
        let unseen = p.window - self.window.len();

        if ones > p.k2 && self.level != TriggerLevel::High {
            self.level = TriggerLevel::High;
            return Some(self.transition(1, frame_index));
        }
        if ones + unseen < p.k1 && self.level != TriggerLevel::Low {
            self.level = TriggerLevel::Low;
            return Some(self.transition(0, frame_index));
        }
        let held = match self.level {
            TriggerLevel::High => 1,
            TriggerLevel::Low => 0,
            TriggerLevel::Undefined => return None,
        };
        let last = self.last_emit_frame.expect("a defined level has emitted");
        if frame_index >= last + p.bit_frames + p.repeat_guard {
            let next = last + p.bit_frames;
            self.last_emit_frame = Some(next);
            self.bits.push(held);
            self.emit_frames.push(frame_index);
            return Some(held);
        }
        None
    }

    fn transition(&mut self, bit: u8, frame_index: u64) -> u8 {
        self.last_emit_frame = Some(frame_index);
        self.transition_frames.push(frame_index);
        self.bits.push(bit);
        self.emit_frames.push(frame_index);
        bit
    }
}

/// Outcome of [`count_identifier_bits`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdentifierCount {
    pub correct: usize,
    pub error: usize,
    /// Start positions of the counted occurrences.
    pub occurrences: Vec<usize>,
}

/// Counts bits explained by occurrences of `id`.
///
/// Occurrences are taken greedily from the left without overlap. Bits before
/// the first occurrence are correct if they form a suffix of `id`, bits after
/// the last one if they form a prefix of `id`; every other leftover bit is an
/// error. Without any occurrence nothing is counted.
pub fn count_identifier_bits(bits: &[u8], id: &Codeword) -> IdentifierCount {
    let word = id.bits();
    let mut occurrences = Vec::new();
    let mut i = 0;
    while i + CODE_LEN <= bits.len() {
        if bits[i..i + CODE_LEN] == word {
            occurrences.push(i);
            i += CODE_LEN;
        } else {
            i += 1;
        }
    }
    let (Some(&first), Some(&last)) = (occurrences.first(), occurrences.last()) else {
        return IdentifierCount::default();
    };
    let lead = &bits[..first];
    let tail = &bits[last + CODE_LEN..];
    let mut error = 0;
    if !word.ends_with(lead) {
        error += lead.len();
    }
    if !word.starts_with(tail) {
        error += tail.len();
    }
    for w in occurrences.windows(2) {
        error += w[1] - (w[0] + CODE_LEN);
    }
    IdentifierCount {
        correct: bits.len() - error,
        error,
        occurrences,
    }
}

/// Decoded bits of a track matched against a codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    pub matched_id: Option<Codeword>,
    /// Windows of 12 bits that are a rotation of the matched codeword.
    pub occurrences: usize,
    pub correct_bits: usize,
    pub error_bits: usize,
    /// Frames at which the first and last such window was completed.
    pub first_match_frame: Option<u64>,
    pub last_match_frame: Option<u64>,
}

/// Matches emitted bits against every rotation of every codebook entry and
/// keeps the entry with the most windows; ties go to the lowest id value.
pub fn match_bits(bits: &[u8], emit_frames: &[u64], codebook: &Codebook) -> DecodeResult {
    let mut counts = vec![0usize; codebook.len()];
    let mut spans: Vec<(usize, usize)> = vec![(usize::MAX, 0); codebook.len()];
    let mut first_seen = vec![0u16; codebook.len()];
    if bits.len() >= CODE_LEN {
        for start in 0..=bits.len() - CODE_LEN {
            let pattern = bits[start..start + CODE_LEN]
                .iter()
                .fold(0u16, |v, &b| (v << 1) | b as u16);
            if let Some(k) = codebook.index_of_rotation(pattern) {
                if counts[k] == 0 {
                    first_seen[k] = pattern;
                }
                counts[k] += 1;
                let end = start + CODE_LEN - 1;
                spans[k].0 = spans[k].0.min(end);
                spans[k].1 = spans[k].1.max(end);
            }
        }
    }
    let best = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k);
    match best {
        None => DecodeResult {
            bits: bits.to_vec(),
            matched_id: None,
            occurrences: 0,
            correct_bits: 0,
            error_bits: 0,
            first_match_frame: None,
            last_match_frame: None,
        },
        Some(k) => {
            let id = codebook.entries()[k];
            // Bits are counted against the rotation the stream started with,
            // so the first matching window is always an occurrence.
            let seen = Codeword::new(first_seen[k]).expect("rotation of an entry");
            let count = count_identifier_bits(bits, &seen);
            DecodeResult {
                bits: bits.to_vec(),
                matched_id: Some(id),
                occurrences: counts[k],
                correct_bits: count.correct,
                error_bits: count.error,
                first_match_frame: emit_frames.get(spans[k].0).copied(),
                last_match_frame: emit_frames.get(spans[k].1).copied(),
            }
        }
    }
}

/// Replays a sample history `(frame_index, orientation)` through a fresh
/// decoder and matches the result.
pub fn decode_samples(
    samples: &[(u64, u8)],
    codebook: &Codebook,
    params: DecoderParams,
) -> Result<DecodeResult> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("track history is empty".into()));
    }
    let mut state = DecoderState::new(params);
    for &(frame, bit) in samples {
        state.step(bit, frame);
    }
    Ok(match_bits(state.bits(), state.emit_frames(), codebook))
}

/// Samples of an ideal orientation stream: `id` repeated at `bit_frames`
/// samples per bit, starting `phase` samples into the first period.
pub fn ideal_stream(id: &Codeword, bit_frames: usize, phase: usize, len: usize) -> Vec<u8> {
    let period = bit_frames * CODE_LEN;
    (0..len)
        .map(|i| id.bit(((i + phase) % period) / bit_frames))
        .collect()
}
