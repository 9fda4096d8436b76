use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use beacon_core::codebook::{generate_codebook, Codebook};
use beacon_core::decoder::{orientation_from_moments, DecoderParams};
use beacon_core::detector::{detect, DetectorParams, Reference};
use beacon_core::imaging::sequence::{read_sidecar, SequenceDir, SIDECAR_NAME};
use beacon_core::imaging::{pgm, Frame};
use beacon_core::pipeline::{evaluate, Pipeline, PipelineParams};
use beacon_core::report;
use beacon_core::simulator::{SceneConfig, Simulator};
use beacon_core::tracker::TrackerParams;

const BENCH_SCENE: &str = include_str!("../../../configs/driving_day.conf");

#[derive(Parser)]
#[command(name = "irbeacon", version, about = "Infrared beacon recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the identifier codebook.
    Codebook {
        /// Output file; standard output when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Render a synthetic sequence from a scene file.
    Simulate {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Overrides the scene's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scene's duration in seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Detect, track and decode every frame of a sequence.
    Run {
        #[arg(long, short)]
        sequence: PathBuf,
        /// Codebook file; the generated codebook when omitted.
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Also write machine-readable records to this file.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Score the records of a run against ground truth.
    Eval {
        /// Records written by `run`.
        #[arg(long, short)]
        records: PathBuf,
        /// Sequence directory or sidecar file holding the ground truth.
        #[arg(long, short)]
        truth: Option<PathBuf>,
    },
    /// List the detections of a single frame.
    Detect {
        /// PGM frame.
        frame: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Measure pipeline throughput on synthetic full-size frames.
    Bench {
        /// Number of distinct frames rendered for the benchmark.
        #[arg(long, default_value_t = 300)]
        frames: u64,
        /// Passes over the rendered frames.
        #[arg(long, default_value_t = 3)]
        passes: u32,
        /// Scene file; a built-in driving scene when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Exit with status 3 when throughput falls below this rate.
        #[arg(long)]
        min_fps: Option<f64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Records,
    Both,
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Binarization threshold.
    #[arg(long, default_value_t = 5)]
    threshold: u8,
    /// Smallest accepted box area in px.
    #[arg(long, default_value_t = 3)]
    min_area: u64,
    /// Largest accepted box area in px.
    #[arg(long, default_value_t = 400)]
    max_area: u64,
    /// Hu-moment distance threshold.
    #[arg(long, default_value_t = 0.2)]
    hu_threshold: f64,
    /// Association distance in px.
    #[arg(long, default_value_t = 50.0)]
    max_dist: f64,
    /// Frames a track may go unmatched before it is dropped.
    #[arg(long, default_value_t = 30)]
    max_unmatched: u32,
    /// Sliding window length.
    #[arg(long, default_value_t = 7)]
    window: usize,
    /// Lower trigger threshold.
    #[arg(long, default_value_t = 2)]
    k1: usize,
    /// Upper trigger threshold.
    #[arg(long, default_value_t = 4)]
    k2: usize,
}

impl ParamArgs {
    fn to_params(&self) -> Result<PipelineParams> {
        if self.min_area > self.max_area || !(self.hu_threshold > 0.0) || !(self.max_dist > 0.0) {
            return Err(usage("area bounds, Hu threshold and association distance must be consistent and positive"));
        }
        if self.window == 0 || self.k1 > self.k2 || self.k2 >= self.window {
            return Err(usage("trigger thresholds must satisfy k1 <= k2 < window"));
        }
        Ok(PipelineParams {
            detector: DetectorParams {
                threshold: self.threshold,
                min_area: self.min_area,
                max_area: self.max_area,
                hu_threshold: self.hu_threshold,
                ..DetectorParams::default()
            },
            tracker: TrackerParams {
                max_dist: self.max_dist,
                max_unmatched: self.max_unmatched,
                decoder: DecoderParams {
                    window: self.window,
                    k1: self.k1,
                    k2: self.k2,
                    ..DecoderParams::default()
                },
            },
        })
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: &str) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<beacon_core::Error>() {
            return match err {
                beacon_core::Error::InvalidArgument(_) => 1,
                beacon_core::Error::Io { .. } => 2,
                _ => 3,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 2;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Codebook { out } => cmd_codebook(out.as_deref()),
        Command::Simulate {
            config,
            out,
            seed,
            duration,
        } => cmd_simulate(&config, &out, seed, duration),
        Command::Run {
            sequence,
            codebook,
            records,
            format,
            params,
        } => cmd_run(
            &sequence,
            codebook.as_deref(),
            records.as_deref(),
            format,
            &params,
        ),
        Command::Eval { records, truth } => cmd_eval(&records, truth.as_deref()),
        Command::Detect { frame, params } => cmd_detect(&frame, &params),
        Command::Bench {
            frames,
            passes,
            config,
            min_fps,
        } => cmd_bench(frames, passes, config.as_deref(), min_fps),
    }
}

fn cmd_codebook(out: Option<&Path>) -> Result<()> {
    let cb = generate_codebook();
    match out {
        Some(path) => {
            cb.write(path)?;
            eprintln!("wrote {} identifiers to {}", cb.len(), path.display());
        }
        None => io::stdout().write_all(cb.to_text().as_bytes())?,
    }
    Ok(())
}

fn cmd_simulate(config: &Path, out: &Path, seed: Option<u64>, duration: Option<f64>) -> Result<()> {
    let mut cfg = SceneConfig::load(config)?;
    if let Some(d) = duration {
        if !(d > 0.0) {
            return Err(usage("--duration must be positive"));
        }
        cfg.duration_s = d;
    }
    let seed = seed.unwrap_or(cfg.seed);
    let sim = Simulator::new(cfg, seed);
    let n = sim.write_sequence(out)?;
    eprintln!("wrote {n} frames to {}", out.display());
    Ok(())
}

fn load_codebook(path: Option<&Path>) -> Result<Codebook> {
    Ok(match path {
        Some(p) => Codebook::read(p)?,
        None => generate_codebook(),
    })
}

fn cmd_run(
    sequence: &Path,
    codebook: Option<&Path>,
    records: Option<&Path>,
    format: Format,
    params: &ParamArgs,
) -> Result<()> {
    let params = params.to_params()?;
    let codebook = load_codebook(codebook)?;
    let seq = SequenceDir::open(sequence)?;
    if let Some(index) = seq.first_missing() {
        return Err(beacon_core::Error::MissingFrame {
            dir: sequence.to_path_buf(),
            index,
        }
        .into());
    }
    let mut pipeline = Pipeline::new(params, Reference::canonical(), &codebook);
    let with_truth = seq.has_ground_truth();
    for (k, rec) in seq.records().iter().enumerate() {
        let frame = seq.load(k)?;
        pipeline.process(&frame, with_truth.then_some(rec));
    }
    let report = pipeline.finish();
    let lines = report::format_records(&report);
    if let Some(path) = records {
        fs::write(path, &lines).map_err(|e| beacon_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    let mut stdout = io::stdout().lock();
    if matches!(format, Format::Table | Format::Both) {
        write!(stdout, "{}", report::format_table(&report.metrics))?;
        writeln!(stdout)?;
        write!(stdout, "{}", report::format_track_table(&report.tracks))?;
    }
    if matches!(format, Format::Records | Format::Both) {
        write!(stdout, "{lines}")?;
    }
    Ok(())
}

fn cmd_eval(records: &Path, truth: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(records).map_err(|e| beacon_core::Error::Io {
        path: records.to_path_buf(),
        source: e,
    })?;
    let parsed = report::parse_records(&text).map_err(|m| beacon_core::Error::Format {
        path: records.to_path_buf(),
        message: m,
    })?;
    let truth = match truth {
        None => Vec::new(),
        Some(p) if p.is_dir() => read_sidecar(&p.join(SIDECAR_NAME))?,
        Some(p) => read_sidecar(p)?,
    };
    let beacons = evaluate(&parsed.tracks, &truth);
    let mut out = io::stdout().lock();
    if !beacons.is_empty() {
        write!(out, "{}", report::format_beacon_table(&beacons))?;
    }
    // Tracks that decoded an identifier no beacon transmits, or that were
    // long enough to hold one but decoded none.
    let unmatched: Vec<_> = parsed
        .tracks
        .iter()
        .filter(|t| match t.decode.matched_id {
            Some(id) => !beacons.iter().any(|b| b.id.is_rotation_of(&id)),
            None => t.decode.bits.len() >= beacon_core::codebook::CODE_LEN,
        })
        .collect();
    for t in &unmatched {
        writeln!(
            out,
            "unmatched track id={} matched={} bits={}",
            t.track_id,
            t.decode.matched_id.map_or("-".into(), |c| c.to_string()),
            t.decode.bits.len()
        )?;
    }
    for b in &beacons {
        writeln!(out, "{}", report::beacon_record(b))?;
    }
    Ok(())
}

fn cmd_detect(frame_path: &Path, params: &ParamArgs) -> Result<()> {
    let params = params.to_params()?;
    let image = pgm::read(frame_path)?;
    let index = frame_path
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix("frame_"))
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let frame = Frame::new(index, 0.0, image);
    let reference = Reference::canonical();
    let mut out = io::stdout().lock();
    for d in detect(&frame, &reference, &params.detector) {
        let (bit, degenerate) = orientation_from_moments(&d.moments);
        writeln!(
            out,
            "detection frame_index={} x={} y={} w={} h={} hu_dist={:.4} cx={:.2} cy={:.2} bit={}{}",
            d.frame_index,
            d.bbox.x,
            d.bbox.y,
            d.bbox.w,
            d.bbox.h,
            d.hu_dist,
            d.centroid.0,
            d.centroid.1,
            bit,
            if degenerate { " degenerate" } else { "" }
        )?;
    }
    Ok(())
}

fn cmd_bench(frames: u64, passes: u32, config: Option<&Path>, min_fps: Option<f64>) -> Result<()> {
    if frames == 0 || passes == 0 {
        return Err(usage("--frames and --passes must be positive"));
    }
    let cfg = match config {
        Some(p) => SceneConfig::load(p)?,
        None => SceneConfig::parse(BENCH_SCENE).map_err(|m| anyhow!(m))?,
    };
    let (w, h) = (cfg.camera.width, cfg.camera.height);
    let sim = Simulator::new(cfg.clone(), cfg.seed);
    // Frames are spread over the whole scene and kept as encoded files so the
    // timed loop includes decoding them.
    let total = sim.frame_count().max(1);
    let encoded: Vec<Vec<u8>> = (0..frames)
        .map(|k| pgm::encode(&sim.render(k * total / frames).0.image))
        .collect();
    let codebook = generate_codebook();
    let params = PipelineParams::default();
    let start = Instant::now();
    let mut processed = 0u64;
    let mut detections = 0u64;
    for _ in 0..passes {
        let mut pipeline = Pipeline::new(params, Reference::canonical(), &codebook);
        for (i, bytes) in encoded.iter().enumerate() {
            let image = pgm::decode(bytes).map_err(|m| anyhow!(m))?;
            let frame = Frame::new(i as u64, i as f64 * 0.01, image);
            pipeline.process(&frame, None);
            processed += 1;
        }
        detections += pipeline.finish().metrics.detections;
    }
    let secs = start.elapsed().as_secs_f64();
    let fps = processed as f64 / secs;
    println!("frame_size={w}x{h} frames={processed} detections={detections} seconds={secs:.3} fps={fps:.1}");
    if let Some(min) = min_fps {
        if fps < min {
            return Err(anyhow!("throughput {fps:.1} fps is below {min} fps"));
        }
    }
    Ok(())
}
