//! Camera-trap orchestration: picks the day or night pipeline from the sun,
//! gates recording on motion, and persists sequences.
//!
//! | mode      | trigger          | stereo               | camera   | IR lamp | projector |
//! |-----------|------------------|----------------------|----------|---------|-----------|
//! | Daytime   | image diff + GMM | active (dot pattern) | colour   | off     | on        |
//! | Nighttime | PIR              | passive              | infrared | on      | off       |
//!
//! The pipeline runs as three stages joined by bounded channels: the frame
//! source, detection and segmentation, and persistence (the only stage that
//! writes files).

mod persist;
mod report;
mod source;

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::mpsc::sync_channel;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::imaging::read_pgm;
use crate::imaging::BinaryMask;
use crate::motion::{DiffConfig, GmmConfig, MotionDetector, MotionEvent, PirTrigger, RoiMask, Trigger};
use crate::solar::{mode_at, GeoLocation, TrapMode};
use crate::stereo::StereoConfig;

pub use persist::{capture_depth, load_sequence_record, persist_sequence, FrameRecord, PendingSequence, SequenceRecord};
pub use report::{compare_reports, emit_report, ComparisonRow};
pub use source::{Crossing, DirectorySource, Frame, SyntheticSource, SyntheticStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionSource {
    ImageBased,
    Pir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StereoVariant {
    /// dot pattern projected before matching
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageSensor {
    Color,
    /// left IR camera of the stereo head
    Infrared,
}

/// Hardware and detector selection for one trap mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModePipeline {
    pub mode: TrapMode,
    pub motion: MotionSource,
    pub stereo: StereoVariant,
    pub camera: ImageSensor,
    pub ir_lamp: bool,
    pub projector: bool,
}

impl ModePipeline {
    pub fn for_mode(mode: TrapMode) -> Self {
        match mode {
            TrapMode::Daytime => Self {
                mode,
                motion: MotionSource::ImageBased,
                stereo: StereoVariant::Active,
                camera: ImageSensor::Color,
                ir_lamp: false,
                projector: true,
            },
            TrapMode::Nighttime => Self {
                mode,
                motion: MotionSource::Pir,
                stereo: StereoVariant::Passive,
                camera: ImageSensor::Infrared,
                ir_lamp: true,
                projector: false,
            },
        }
    }
}

/// Simulated stereo head: geometry, matcher and projector pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StereoRig {
    /// metres
    pub baseline: f64,
    pub focal_px: f64,
    pub matcher: StereoConfig,
    pub pattern_seed: u64,
    pub pattern_density: f64,
    /// 0–255 scale
    pub pattern_amplitude: f64,
}

impl Default for StereoRig {
    fn default() -> Self {
        Self {
            baseline: 0.2,
            focal_px: 171.6,
            matcher: StereoConfig {
                max_disparity: 32,
                ..StereoConfig::default()
            },
            pattern_seed: 7,
            pattern_density: 0.05,
            pattern_amplitude: 80.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Synthetic(SyntheticStream),
    Directory { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub location: GeoLocation,
    pub source: SourceSpec,
    #[serde(default)]
    pub diff: DiffConfig,
    #[serde(default)]
    pub gmm: GmmConfig,
    #[serde(default)]
    pub stereo: StereoRig,
    /// PGM whose non-zero pixels are watched; everything is watched when absent.
    #[serde(default)]
    pub roi: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "default_pre_roll")]
    pub pre_roll: usize,
    #[serde(default = "default_timeout")]
    pub post_event_timeout: f64,
}

fn default_pre_roll() -> usize {
    5
}

fn default_timeout() -> f64 {
    10.0
}

impl TrapConfig {
    pub fn new(location: GeoLocation, source: SourceSpec, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            location,
            source,
            diff: DiffConfig::default(),
            gmm: GmmConfig::default(),
            stereo: StereoRig::default(),
            roi: None,
            output_dir: output_dir.into(),
            pre_roll: default_pre_roll(),
            post_event_timeout: default_timeout(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).at(path)?;
        let mut cfg: TrapConfig = serde_json::from_str(&text)?;
        // relative paths are taken from the config file's directory
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.output_dir);
        if let Some(roi) = cfg.roi.as_mut() {
            rebase(roi);
        }
        if let SourceSpec::Directory { path } = &mut cfg.source {
            rebase(path);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.diff.validate()?;
        self.gmm.validate()?;
        self.stereo.matcher.validate()?;
        if !(self.post_event_timeout > 0.0) {
            return Err(Error::InvalidArgument("post_event_timeout must be positive".into()));
        }
        if !(self.stereo.baseline > 0.0 && self.stereo.focal_px > 0.0) {
            return Err(Error::InvalidArgument("stereo baseline and focal length must be positive".into()));
        }
        if let Some(roi) = &self.roi {
            if !roi.exists() {
                return Err(Error::InvalidArgument(format!("ROI mask {} not found", roi.display())));
            }
        }
        if let SourceSpec::Directory { path } = &self.source {
            if !path.is_dir() {
                return Err(Error::InvalidArgument(format!("frame directory {} not found", path.display())));
            }
        }
        Ok(())
    }

    fn frames(&self) -> Result<Box<dyn Iterator<Item = Result<Frame>> + Send>> {
        Ok(match &self.source {
            SourceSpec::Synthetic(s) => Box::new(s.iter()?),
            SourceSpec::Directory { path } => Box::new(DirectorySource::open(path)?),
        })
    }

    fn roi_mask(&self, dims: (usize, usize)) -> Result<RoiMask> {
        match &self.roi {
            None => Ok(RoiMask::full(dims.0, dims.1)),
            Some(path) => {
                let pgm = read_pgm(path)?;
                let mask = BinaryMask::new(pgm.width, pgm.height, pgm.data.iter().map(|&v| v > 0).collect())?;
                let roi = RoiMask::new(mask);
                roi.check(dims)?;
                Ok(roi)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub frames: u64,
    pub daytime_frames: u64,
    pub nighttime_frames: u64,
    pub events: Vec<MotionEvent>,
    pub sequences: Vec<SequenceRecord>,
}

struct Open {
    frames: Vec<Frame>,
    trigger: Trigger,
    last_event: DateTime<Utc>,
}

struct Segmenter<'a> {
    cfg: &'a TrapConfig,
    roi: Option<RoiMask>,
    motion: Option<MotionDetector>,
    pir: PirTrigger,
    mode: Option<TrapMode>,
    pre_roll: VecDeque<Frame>,
    open: Option<Open>,
    next_id: usize,
    summary: PipelineSummary,
}

impl<'a> Segmenter<'a> {
    fn new(cfg: &'a TrapConfig) -> Self {
        Self {
            cfg,
            roi: None,
            motion: None,
            pir: PirTrigger::new(),
            mode: None,
            pre_roll: VecDeque::new(),
            open: None,
            next_id: 0,
            summary: PipelineSummary {
                frames: 0,
                daytime_frames: 0,
                nighttime_frames: 0,
                events: Vec::new(),
                sequences: Vec::new(),
            },
        }
    }

    fn close(&mut self) -> Option<PendingSequence> {
        let open = self.open.take()?;
        let id = format!("seq_{:05}", self.next_id);
        self.next_id += 1;
        Some(PendingSequence {
            id,
            pipeline: ModePipeline::for_mode(self.mode.expect("mode set while recording")),
            trigger: open.trigger,
            frames: open.frames,
        })
    }

    fn detect(&mut self, frame: &Frame, mode: TrapMode) -> Result<Option<MotionEvent>> {
        match ModePipeline::for_mode(mode).motion {
            MotionSource::Pir => Ok(self.pir.step(frame.index, frame.timestamp, frame.pir)),
            MotionSource::ImageBased => {
                let dims = frame.intensity.dims();
                if self.roi.is_none() {
                    self.roi = Some(self.cfg.roi_mask(dims)?);
                }
                if self.motion.is_none() {
                    self.motion = Some(MotionDetector::new(dims.0, dims.1, self.cfg.diff, self.cfg.gmm)?);
                }
                let roi = self.roi.as_ref().unwrap();
                self.motion.as_mut().unwrap().step(&frame.intensity, frame.timestamp, roi)
            }
        }
    }

    /// Feeds one frame; returns sequences closed by it.
    fn push(&mut self, frame: Frame) -> Result<Vec<PendingSequence>> {
        let mut closed = Vec::new();
        let mode = mode_at(&self.cfg.location, frame.timestamp);
        self.summary.frames += 1;
        match mode {
            TrapMode::Daytime => self.summary.daytime_frames += 1,
            TrapMode::Nighttime => self.summary.nighttime_frames += 1,
        }
        if self.mode != Some(mode) {
            closed.extend(self.close());
            log::info!("{}: switching to {mode:?}", frame.timestamp);
            self.pre_roll.clear();
            if let Some(m) = self.motion.as_mut() {
                m.reset();
            }
            self.pir.reset();
            self.mode = Some(mode);
        }
        let event = self.detect(&frame, mode)?;
        if let Some(e) = &event {
            log::debug!("frame {}: {:?} event", frame.index, e.trigger);
            self.summary.events.push(e.clone());
        }
        let timeout = chrono::Duration::microseconds((self.cfg.post_event_timeout * 1e6).round() as i64);
        // a PIR that stays high keeps the sequence alive after its rising edge
        let active = event.is_some() || (ModePipeline::for_mode(mode).motion == MotionSource::Pir && frame.pir);
        if let Some(open) = self.open.as_mut() {
            if active || frame.timestamp - open.last_event <= timeout {
                if active {
                    open.last_event = frame.timestamp;
                }
                open.frames.push(frame);
                return Ok(closed);
            }
            closed.extend(self.close());
        }
        match event {
            Some(e) => {
                let mut frames: Vec<Frame> = self.pre_roll.drain(..).collect();
                frames.push(frame);
                self.open = Some(Open {
                    frames,
                    trigger: e.trigger,
                    last_event: e.timestamp,
                });
            }
            None => {
                if self.cfg.pre_roll > 0 {
                    if self.pre_roll.len() == self.cfg.pre_roll {
                        self.pre_roll.pop_front();
                    }
                    self.pre_roll.push_back(frame);
                }
            }
        }
        Ok(closed)
    }
}

/// Runs source → detection → persistence until the source is exhausted.
pub fn run_pipeline(cfg: &TrapConfig) -> Result<PipelineSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir).at(&cfg.output_dir)?;
    let frames = cfg.frames()?;
    let (frame_tx, frame_rx) = sync_channel::<Result<Frame>>(8);
    let (seq_tx, seq_rx) = sync_channel::<PendingSequence>(2);
    std::thread::scope(|scope| {
        scope.spawn(move || {
            for frame in frames {
                let stop = frame.is_err();
                if frame_tx.send(frame).is_err() || stop {
                    break;
                }
            }
        });
        let persister = scope.spawn(move || -> Result<Vec<SequenceRecord>> {
            let mut records = Vec::new();
            for seq in seq_rx {
                let record = persist_sequence(&seq, &cfg.stereo, &cfg.output_dir)?;
                log::info!(
                    "{}: {:?} {} frames, {:?} trigger",
                    record.id,
                    record.mode,
                    record.frame_count,
                    record.trigger
                );
                records.push(record);
            }
            Ok(records)
        });
        let mut seg = Segmenter::new(cfg);
        let detect = (|| -> Result<()> {
            for frame in frame_rx {
                for seq in seg.push(frame?)? {
                    if seq_tx.send(seq).is_err() {
                        return Ok(());
                    }
                }
            }
            if let Some(seq) = seg.close() {
                let _ = seq_tx.send(seq);
            }
            Ok(())
        })();
        drop(seq_tx);
        let records = persister.join().expect("persist stage panicked");
        detect?;
        let mut summary = seg.summary;
        summary.sequences = records?;
        Ok(summary)
    })
}
