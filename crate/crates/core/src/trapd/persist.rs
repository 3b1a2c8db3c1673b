use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::source::Frame;
use super::{ModePipeline, StereoRig, StereoVariant};
use crate::error::{Error, IoContext, Result};
use crate::imaging::{write_pgm_depth, write_pgm_intensity, DepthMap};
use crate::motion::Trigger;
use crate::solar::TrapMode;
use crate::stereo::{block_match, disparity_to_depth, project_dot_pattern, synthesize_right_view, RectifiedPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    /// position within the sequence, also the file stem
    pub index: usize,
    pub source_index: u64,
    pub timestamp: DateTime<Utc>,
    pub intensity: String,
    pub depth: String,
    pub pattern_applied: bool,
    pub valid_depth_pixels: usize,
}

/// `<seq_id>/meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub mode: TrapMode,
    pub pipeline: ModePipeline,
    pub trigger: Trigger,
    pub frame_count: usize,
    pub frames: Vec<FrameRecord>,
}

/// A closed sequence waiting to be written.
#[derive(Debug, Clone)]
pub struct PendingSequence {
    pub id: String,
    pub pipeline: ModePipeline,
    pub trigger: Trigger,
    pub frames: Vec<Frame>,
}

/// Depth from the simulated stereo pair of one frame. Active stereo projects
/// the dot pattern onto the left view before the right view is synthesised.
pub fn capture_depth(frame: &Frame, variant: StereoVariant, rig: &StereoRig) -> Result<DepthMap> {
    let left = match variant {
        StereoVariant::Active => {
            project_dot_pattern(&frame.intensity, rig.pattern_seed, rig.pattern_density, rig.pattern_amplitude)
        }
        StereoVariant::Passive => frame.intensity.clone(),
    };
    let right = synthesize_right_view(&left, &frame.scene_depth, rig.baseline, rig.focal_px);
    let pair = RectifiedPair::new(left, right, rig.baseline, rig.focal_px)?;
    let disparity = block_match(&pair, &rig.matcher)?;
    Ok(disparity_to_depth(&disparity, rig.baseline, rig.focal_px))
}

/// Computes depth for every frame, writes `<id>/<i>.int.pgm`,
/// `<id>/<i>.dep.pgm` and `<id>/meta.json`, and returns the record.
pub fn persist_sequence(seq: &PendingSequence, rig: &StereoRig, out_dir: &Path) -> Result<SequenceRecord> {
    let (first, last) = match (seq.frames.first(), seq.frames.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::InvalidArgument(format!("sequence {} has no frames", seq.id))),
    };
    let dir = out_dir.join(&seq.id);
    std::fs::create_dir_all(&dir).at(&dir)?;
    let mut frames = Vec::with_capacity(seq.frames.len());
    for (i, frame) in seq.frames.iter().enumerate() {
        let depth = capture_depth(frame, seq.pipeline.stereo, rig)?;
        let (int_name, dep_name) = (format!("{i}.int.pgm"), format!("{i}.dep.pgm"));
        write_pgm_intensity(&dir.join(&int_name), &frame.intensity)?;
        write_pgm_depth(&dir.join(&dep_name), &depth)?;
        frames.push(FrameRecord {
            index: i,
            source_index: frame.index,
            timestamp: frame.timestamp,
            intensity: int_name,
            depth: dep_name,
            pattern_applied: seq.pipeline.stereo == StereoVariant::Active,
            valid_depth_pixels: depth.depths().iter().filter(|&&d| d > 0).count(),
        });
    }
    let record = SequenceRecord {
        id: seq.id.clone(),
        start: first.timestamp,
        end: last.timestamp,
        mode: seq.pipeline.mode,
        pipeline: seq.pipeline,
        trigger: seq.trigger,
        frame_count: frames.len(),
        frames,
    };
    let meta = dir.join("meta.json");
    std::fs::write(&meta, serde_json::to_vec_pretty(&record)?).at(&meta)?;
    Ok(record)
}

pub fn load_sequence_record(path: &Path) -> Result<SequenceRecord> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path).at(path)?)?)
}
