//! Frame sequences on disk: `frame_%06d.pgm` files plus a `sequence.jsonl`
//! sidecar with one JSON record per frame.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{pgm, Frame};
use crate::error::{Error, Result};

pub const SIDECAR_NAME: &str = "sequence.jsonl";

/// Nominal frame spacing assumed when a sequence has no sidecar.
pub const NOMINAL_FRAME_PERIOD_S: f64 = 0.01;

/// Ground truth for one beacon in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconTruth {
    pub beacon_id_bits: String,
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub visible: bool,
    pub symbol_bit: u8,
    pub distance_m: f64,
}

/// Metadata of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub timestamp_s: f64,
    /// Distance travelled from the start position, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle_position_m: Option<f64>,
    #[serde(default)]
    pub beacons: Vec<BeaconTruth>,
}

pub fn frame_file_name(index: u64) -> String {
    format!("frame_{index:06}.pgm")
}

fn parse_frame_file_name(name: &str) -> Option<u64> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".pgm")?;
    if digits.len() < 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Streams frames and sidecar records into a directory.
pub struct SequenceWriter {
    dir: PathBuf,
    sidecar: BufWriter<File>,
}

impl SequenceWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(SIDECAR_NAME);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(SequenceWriter {
            dir: dir.to_path_buf(),
            sidecar: BufWriter::new(file),
        })
    }

    pub fn push(&mut self, frame: &Frame, record: &FrameRecord) -> Result<()> {
        let path = self.dir.join(frame_file_name(frame.index));
        pgm::write(&path, &frame.image)?;
        let line = serde_json::to_string(record).expect("records serialize");
        let sidecar = self.dir.join(SIDECAR_NAME);
        writeln!(self.sidecar, "{line}").map_err(|e| Error::io(&sidecar, e))
    }

    pub fn finish(mut self) -> Result<()> {
        let sidecar = self.dir.join(SIDECAR_NAME);
        self.sidecar.flush().map_err(|e| Error::io(&sidecar, e))
    }
}

/// Reads a `sequence.jsonl` sidecar.
pub fn read_sidecar(path: &Path) -> Result<Vec<FrameRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FrameRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?;
        out.push(rec);
    }
    for w in out.windows(2) {
        if w[1].frame_index <= w[0].frame_index || w[1].timestamp_s <= w[0].timestamp_s {
            return Err(Error::format(
                path,
                format!(
                    "frame {} does not strictly follow frame {}",
                    w[1].frame_index, w[0].frame_index
                ),
            ));
        }
    }
    Ok(out)
}

/// A sequence directory opened for reading.
#[derive(Debug, Clone)]
pub struct SequenceDir {
    dir: PathBuf,
    records: Vec<FrameRecord>,
    has_sidecar: bool,
}

impl SequenceDir {
    /// Opens a directory. Without a sidecar, frames are discovered by name
    /// and must be numbered contiguously from 0.
    pub fn open(dir: &Path) -> Result<Self> {
        let sidecar = dir.join(SIDECAR_NAME);
        if sidecar.exists() {
            let records = read_sidecar(&sidecar)?;
            return Ok(SequenceDir {
                dir: dir.to_path_buf(),
                records,
                has_sidecar: true,
            });
        }
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut indices = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            if let Some(i) = entry.file_name().to_str().and_then(parse_frame_file_name) {
                indices.push(i);
            }
        }
        indices.sort_unstable();
        for (expected, &i) in indices.iter().enumerate() {
            if i != expected as u64 {
                return Err(Error::MissingFrame {
                    dir: dir.to_path_buf(),
                    index: expected as u64,
                });
            }
        }
        let records = indices
            .into_iter()
            .map(|i| FrameRecord {
                frame_index: i,
                timestamp_s: i as f64 * NOMINAL_FRAME_PERIOD_S,
                vehicle_position_m: None,
                beacons: Vec::new(),
            })
            .collect();
        Ok(SequenceDir {
            dir: dir.to_path_buf(),
            records,
            has_sidecar: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records(&self) -> &[FrameRecord] {
        &self.records
    }

    pub fn has_ground_truth(&self) -> bool {
        self.has_sidecar
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Loads the frame described by record `k`.
    pub fn load(&self, k: usize) -> Result<Frame> {
        let rec = &self.records[k];
        let path = self.dir.join(frame_file_name(rec.frame_index));
        if !path.exists() {
            return Err(Error::MissingFrame {
                dir: self.dir.clone(),
                index: rec.frame_index,
            });
        }
        let image = pgm::read(&path)?;
        Ok(Frame::new(rec.frame_index, rec.timestamp_s, image))
    }

    /// Index of the first frame file that the sidecar lists but is absent.
    pub fn first_missing(&self) -> Option<u64> {
        self.records
            .iter()
            .map(|r| r.frame_index)
            .find(|&i| !self.dir.join(frame_file_name(i)).exists())
    }
}
