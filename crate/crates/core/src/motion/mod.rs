//! Daytime motion detection and the nighttime PIR trigger.
//!
//! Two image-based detectors run on every frame: a difference-image detector
//! thresholding the mean absolute luminance change, and an adaptive Gaussian
//! mixture background model thresholding the foreground ratio. Both only look
//! at pixels inside the [`RoiMask`]; visitor areas are cleared from it. The
//! [`MotionDetector`] ORs the two.

mod diff;
mod gmm;
mod pir;

pub use diff::{diff_detect, DiffConfig, DiffStats};
pub use gmm::{gmm_step, GmmConfig, GmmOutput, GmmState};
pub use pir::{pir_source, PirSource, PirTrigger};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, IntensityImage};

/// Pixels considered by the detectors (visitor areas cleared).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiMask(BinaryMask);

impl RoiMask {
    pub fn new(mask: BinaryMask) -> Self {
        Self(mask)
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self(BinaryMask::full(width, height))
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub(crate) fn check(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: dims,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trigger {
    Diff,
    Gmm,
    Both,
    Pir,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionEvent {
    pub frame_index: u64,
    pub timestamp: DateTime<Utc>,
    pub trigger: Trigger,
    pub mean_abs_diff: f64,
    pub foreground_ratio: f64,
}

/// Difference-image and GMM detectors combined with OR.
#[derive(Debug, Clone)]
pub struct MotionDetector {
    pub diff: DiffConfig,
    pub gmm: GmmConfig,
    state: GmmState,
    prev: Option<IntensityImage>,
    frame_index: u64,
}

impl MotionDetector {
    pub fn new(width: usize, height: usize, diff: DiffConfig, gmm: GmmConfig) -> Result<Self> {
        diff.validate()?;
        gmm.validate()?;
        Ok(Self {
            diff,
            state: GmmState::new(width, height, gmm.max_components),
            gmm,
            prev: None,
            frame_index: 0,
        })
    }

    /// Number of frames consumed so far.
    pub fn frames_seen(&self) -> u64 {
        self.frame_index
    }

    /// Forgets the previous frame and the background model.
    pub fn reset(&mut self) {
        let (w, h) = self.state.dims();
        self.state = GmmState::new(w, h, self.gmm.max_components);
        self.prev = None;
    }

    /// Feeds one frame; returns an event when either detector fires.
    pub fn step(
        &mut self,
        frame: &IntensityImage,
        timestamp: DateTime<Utc>,
        roi: &RoiMask,
    ) -> Result<Option<MotionEvent>> {
        roi.check(frame.dims())?;
        let diff = match &self.prev {
            Some(prev) => diff_detect(prev, frame, roi, &self.diff)?,
            None => DiffStats {
                mean_abs_diff: 0.0,
                fired: false,
            },
        };
        let gmm = gmm_step(&mut self.state, frame, roi, &self.gmm)?;
        let index = self.frame_index;
        self.frame_index += 1;
        self.prev = Some(frame.clone());
        let trigger = match (diff.fired, gmm.fired) {
            (true, true) => Trigger::Both,
            (true, false) => Trigger::Diff,
            (false, true) => Trigger::Gmm,
            (false, false) => return Ok(None),
        };
        Ok(Some(MotionEvent {
            frame_index: index,
            timestamp,
            trigger,
            mean_abs_diff: diff.mean_abs_diff,
            foreground_ratio: gmm.foreground_ratio,
        }))
    }
}

/// Single-step form of [`MotionDetector::step`].
pub fn combined_motion_step(
    detector: &mut MotionDetector,
    frame: &IntensityImage,
    timestamp: DateTime<Utc>,
    roi: &RoiMask,
) -> Result<Option<MotionEvent>> {
    detector.step(frame, timestamp, roi)
}
