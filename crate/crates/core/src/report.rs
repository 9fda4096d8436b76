//! Plain-text run reports: an aligned table for people and `kind key=value`
//! records for machines.

use std::fmt::Write as _;

use crate::codebook::Codeword;
use crate::decoder::DecodeResult;
use crate::pipeline::{BeaconMetrics, RunMetrics, RunReport, TrackReport};

fn opt_u64(v: Option<u64>) -> String {
    v.map_or("-".into(), |x| x.to_string())
}

fn opt_m(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.2}"))
}

fn bits_string(bits: &[u8]) -> String {
    if bits.is_empty() {
        "-".into()
    } else {
        bits.iter()
            .map(|&b| if b == 1 { '1' } else { '0' })
            .collect()
    }
}

/// Aligned table of the run totals and per-beacon rows.
pub fn format_table(m: &RunMetrics) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<24}{:>14}", "Frames", m.frames);
    let _ = writeln!(s, "{:<24}{:>14}", "Detections", m.detections);
    let _ = writeln!(s, "{:<24}{:>14}", "Tracks", m.tracks);
    if !m.beacons.is_empty() {
        s.push('\n');
        s.push_str(&format_beacon_table(&m.beacons));
    }
    s
}

type Row = (&'static str, fn(&BeaconMetrics) -> String);

/// One column per beacon, rows named after the published tables.
pub fn format_beacon_table(beacons: &[BeaconMetrics]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<24}", "Beacon");
    for b in beacons {
        let _ = write!(s, "{:>14}", b.id.to_string());
    }
    s.push('\n');
    let rows: [Row; 9] = [
        ("Frames visible", |b| opt_u64(b.frames_visible)),
        ("Detections", |b| opt_u64(b.detections)),
        ("Tracks on beacon", |b| opt_u64(b.tracks_on_beacon)),
        ("Tracks matching", |b| b.tracks_matching.to_string()),
        ("Identifiers found", |b| b.occurrences.to_string()),
        ("First recognition [m]", |b| opt_m(b.first_recognition_m)),
        ("Last recognition [m]", |b| opt_m(b.last_recognition_m)),
        ("Bits decoded", |b| b.bits_decoded.to_string()),
        ("Error bits", |b| b.error_bits.to_string()),
    ];
    for (name, f) in rows {
        let _ = write!(s, "{name:<24}");
        for b in beacons {
            let _ = write!(s, "{:>14}", f(b));
        }
        s.push('\n');
    }
    s
}

/// Aligned table of tracks that decoded an identifier.
pub fn format_track_table(tracks: &[TrackReport]) -> String {
    let mut s = format!(
        "{:>6} {:>8} {:>8} {:>8} {:>14} {:>6} {:>6} {:>6} {:>8} {:>8}\n",
        "track",
        "first",
        "last",
        "samples",
        "identifier",
        "found",
        "bits",
        "errors",
        "first_id",
        "last_id"
    );
    for t in tracks.iter().filter(|t| t.decode.matched_id.is_some()) {
        let d = &t.decode;
        let _ = writeln!(
            s,
            "{:>6} {:>8} {:>8} {:>8} {:>14} {:>6} {:>6} {:>6} {:>8} {:>8}",
            t.track_id,
            t.first_frame,
            t.last_frame,
            t.samples,
            d.matched_id.map_or("-".into(), |c| c.to_string()),
            d.occurrences,
            d.bits.len(),
            d.error_bits,
            opt_u64(d.first_match_frame),
            opt_u64(d.last_match_frame),
        );
    }
    s
}

/// Line records: one `run` line, one `track` line per track and one
/// `beacon` line per beacon with ground truth.
pub fn format_records(r: &RunReport) -> String {
    let m = &r.metrics;
    let mut s = format!(
        "run frames={} detections={} tracks={}\n",
        m.frames, m.detections, m.tracks
    );
    for t in &r.tracks {
        s.push_str(&track_record(t));
        s.push('\n');
    }
    for b in &m.beacons {
        s.push_str(&beacon_record(b));
        s.push('\n');
    }
    s
}

pub fn track_record(t: &TrackReport) -> String {
    let d = &t.decode;
    format!(
        "track id={} first_frame={} last_frame={} samples={} matched={} occurrences={} correct={} error={} first_match={} last_match={} bits={}",
        t.track_id,
        t.first_frame,
        t.last_frame,
        t.samples,
        d.matched_id.map_or("-".into(), |c| c.to_string()),
        d.occurrences,
        d.correct_bits,
        d.error_bits,
        opt_u64(d.first_match_frame),
        opt_u64(d.last_match_frame),
        bits_string(&d.bits),
    )
}

pub fn beacon_record(b: &BeaconMetrics) -> String {
    format!(
        "beacon id={} frames_visible={} detections={} tracks_on_beacon={} tracks_matching={} occurrences={} first_recognition_m={} last_recognition_m={} bits_decoded={} error_bits={}",
        b.id,
        opt_u64(b.frames_visible),
        opt_u64(b.detections),
        opt_u64(b.tracks_on_beacon),
        b.tracks_matching,
        b.occurrences,
        opt_m(b.first_recognition_m),
        opt_m(b.last_recognition_m),
        b.bits_decoded,
        b.error_bits,
    )
}

/// The parts of a records file that evaluation needs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedRecords {
    pub frames: Option<u64>,
    pub detections: Option<u64>,
    pub tracks_created: Option<u64>,
    pub tracks: Vec<TrackReport>,
}

// Record kind and its key=value pairs.
type Fields<'a> = (&'a str, Vec<(&'a str, &'a str)>);

fn fields(line: &str) -> Result<Fields<'_>, String> {
    let mut parts = line.split_whitespace();
    let kind = parts.next().ok_or("empty record")?;
    let kv = parts
        .map(|p| {
            p.split_once('=')
                .ok_or_else(|| format!("field {p:?} is not key=value"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((kind, kv))
}

fn get<'a>(kv: &[(&'a str, &'a str)], key: &str) -> Result<&'a str, String> {
    kv.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| format!("missing field {key}"))
}

fn num(kv: &[(&str, &str)], key: &str) -> Result<u64, String> {
    let v = get(kv, key)?;
    v.parse()
        .map_err(|_| format!("{key}={v} is not an integer"))
}

fn opt_num(kv: &[(&str, &str)], key: &str) -> Result<Option<u64>, String> {
    match get(kv, key)? {
        "-" => Ok(None),
        v => v
            .parse()
            .map(Some)
            .map_err(|_| format!("{key}={v} is not an integer")),
    }
}

/// Parses records written by [`format_records`]; `beacon` lines are ignored.
pub fn parse_records(text: &str) -> Result<ParsedRecords, String> {
    let mut out = ParsedRecords::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |e: String| format!("line {}: {e}", n + 1);
        let (kind, kv) = fields(line).map_err(at)?;
        match kind {
            "run" => {
                out.frames = Some(num(&kv, "frames").map_err(at)?);
                out.detections = Some(num(&kv, "detections").map_err(at)?);
                out.tracks_created = Some(num(&kv, "tracks").map_err(at)?);
            }
            "track" => out.tracks.push(parse_track(&kv).map_err(at)?),
            "beacon" => {}
            other => return Err(at(format!("unknown record kind {other:?}"))),
        }
    }
    Ok(out)
}

fn parse_track(kv: &[(&str, &str)]) -> Result<TrackReport, String> {
    let matched = match get(kv, "matched")? {
        "-" => None,
        v => Some(Codeword::parse(v).map_err(|e| e.to_string())?),
    };
    let bits = match get(kv, "bits")? {
        "-" => Vec::new(),
        v => v
            .bytes()
            .map(|c| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(format!("bad bit {:?}", c as char)),
            })
            .collect::<Result<Vec<u8>, _>>()?,
    };
    Ok(TrackReport {
        track_id: num(kv, "id")?,
        first_frame: num(kv, "first_frame")?,
        last_frame: num(kv, "last_frame")?,
        samples: num(kv, "samples")? as usize,
        decode: DecodeResult {
            bits,
            matched_id: matched,
            occurrences: num(kv, "occurrences")? as usize,
            correct_bits: num(kv, "correct")? as usize,
            error_bits: num(kv, "error")? as usize,
            first_match_frame: opt_num(kv, "first_match")?,
            last_match_frame: opt_num(kv, "last_match")?,
        },
    })
}
