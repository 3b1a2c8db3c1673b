use serde::{Deserialize, Serialize};

use super::RoiMask;
use crate::error::{Error, Result};
use crate::imaging::{IntensityImage, LUMA_SCALE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffConfig {
    /// Mean absolute change, 0–255 luminance scale.
    pub mean_change_threshold: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            mean_change_threshold: 4.0,
        }
    }
}

impl DiffConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_change_threshold > 0.0) {
            return Err(Error::InvalidArgument("mean_change_threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffStats {
    pub mean_abs_diff: f64,
    pub fired: bool,
}

/// Mean absolute luminance change over ROI pixels.
pub fn diff_detect(
    prev: &IntensityImage,
    curr: &IntensityImage,
    roi: &RoiMask,
    cfg: &DiffConfig,
) -> Result<DiffStats> {
    if prev.dims() != curr.dims() {
        return Err(Error::DimensionMismatch {
            expected: prev.dims(),
            actual: curr.dims(),
        });
    }
    roi.check(curr.dims())?;
    let mut sum = 0u64;
    let mut n = 0u64;
    for ((&a, &b), &inside) in prev.pixels().iter().zip(curr.pixels()).zip(roi.mask().bits()) {
        if inside {
            sum += u64::from(a.abs_diff(b));
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyRoi);
    }
    let mean_abs_diff = sum as f64 / n as f64 / LUMA_SCALE;
    Ok(DiffStats {
        mean_abs_diff,
        fired: mean_abs_diff >= cfg.mean_change_threshold,
    })
}
