//! RGB-D camera-trap toolkit.
//!
//! The crate covers the whole path from capture to evaluation:
//!
//! - [`imaging`]: raster types (intensity, depth, masks, boxes), IoU, connected
//!   components, RLE and 16-bit PGM I/O.
//! - [`solar`]: NOAA sunrise/sunset and the day/night [`solar::TrapMode`] schedule.
//! - [`motion`]: difference-image and Gaussian-mixture motion detection with
//!   visitor-area masking, plus a PIR event source.
//! - [`stereo`]: SAD block matching, dot-pattern projection, view synthesis and
//!   disparity-to-depth conversion.
//! - [`synthgen`]: procedural RGB-D scenes with class/instance ground truth.
//! - [`fusenet`]: a small twin-backbone network fusing intensity and depth
//!   features, with hand-written backpropagation.
//! - [`cocoeval`]: COCO-style AP over ten IoU thresholds for boxes and masks.
//! - [`trapd`]: the trap pipeline (mode state machine, event-gated recording)
//!   and report generation.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cocoeval;
pub mod error;
pub mod fusenet;
pub mod imaging;
pub mod motion;
pub mod solar;
pub mod stereo;
pub mod synthgen;
pub mod trapd;

pub use error::{Error, Result};
