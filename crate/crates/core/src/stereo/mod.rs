//! Depth from rectified stereo.
//!
//! Daytime capture is active: a pseudo-random dot field is projected onto the
//! scene ([`project_dot_pattern`]) and supplies correspondences on surfaces
//! that have no texture of their own. At night the projector is off and
//! matching is passive. [`synthesize_right_view`] closes the loop with
//! rendered ground-truth depth so the matcher can be tested exactly.

mod block_match;
mod pattern;
mod warp;

pub use block_match::{block_match, DisparityMap, StereoConfig};
pub use pattern::project_dot_pattern;
pub use warp::{disparity_from_depth, synthesize_right_view};

use crate::error::{Error, Result};
use crate::imaging::{DepthMap, IntensityImage};

/// Left/right views sharing image rows.
#[derive(Debug, Clone)]
pub struct RectifiedPair {
    pub left: IntensityImage,
    pub right: IntensityImage,
    /// metres
    pub baseline: f64,
    /// pixels
    pub focal: f64,
}

impl RectifiedPair {
    pub fn new(left: IntensityImage, right: IntensityImage, baseline: f64, focal: f64) -> Result<Self> {
        if left.dims() != right.dims() {
            return Err(Error::DimensionMismatch {
                expected: left.dims(),
                actual: right.dims(),
            });
        }
        if !(baseline > 0.0) || !(focal > 0.0) {
            return Err(Error::InvalidArgument("baseline and focal must be positive".into()));
        }
        Ok(Self {
            left,
            right,
            baseline,
            focal,
        })
    }
}

/// Triangulates valid disparities into millimetres. Invalid or zero
/// disparities, and depths beyond the 16-bit range, become 0.
pub fn disparity_to_depth(d: &DisparityMap, baseline: f64, focal: f64) -> DepthMap {
    let (w, h) = d.dims();
    DepthMap::from_fn(w, h, |x, y| match d.get(x, y) {
        Some(disp) if disp > 0.0 => {
            let mm = (1000.0 * focal * baseline / f64::from(disp)).round();
            if mm >= 1.0 && mm <= 65535.0 {
                mm as u16
            } else {
                0
            }
        }
        _ => 0,
    })
}
