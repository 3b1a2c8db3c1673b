//! Procedural RGB-D scenes with exact ground truth.
//!
//! Animals are parametric silhouettes (superellipse body, head, gait-animated
//! legs, class-specific extras) standing on a ground plane seen by a pitched
//! pinhole camera. Each silhouette is a camera-facing billboard, so all pixels
//! of one instance share its depth. Rendering yields intensity, depth, class
//! and instance images; [`derive_annotations`] turns those into
//! [`LabeledInstance`](crate::imaging::LabeledInstance)s.

mod dataset;
mod render;
mod scene;

pub use dataset::{generate_samples, read_dataset, render_split, read_manifest, write_dataset, write_manifest, AnnotationFile, DatasetManifest, Sample, SplitManifest};
pub use render::{derive_annotations, render_scene, RenderedFrame, Silhouette};
pub use scene::{sample_scene, Range, SceneRanges};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Deer,
    Boar,
    Hare,
    Fox,
}

impl Species {
    pub const ALL: [Species; 4] = [Species::Deer, Species::Boar, Species::Hare, Species::Fox];

    pub fn class_id(self) -> u16 {
        match self {
            Species::Deer => 0,
            Species::Boar => 1,
            Species::Hare => 2,
            Species::Fox => 3,
        }
    }

    pub fn from_class_id(id: u16) -> Result<Self> {
        Self::ALL
            .get(usize::from(id))
            .copied()
            .ok_or(Error::UnknownClass(id))
    }

    /// Plausible scale multipliers; absolute sizes order deer > boar > fox > hare.
    pub fn scale_range(self) -> (f64, f64) {
        (0.85, 1.15)
    }
}

/// Pinhole camera mounted above the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    /// metres above ground
    pub height: f64,
    /// degrees below horizontal
    pub pitch: f64,
    /// horizontal field of view, degrees
    pub fov: f64,
    pub image: (usize, usize),
}

impl CameraSpec {
    pub fn focal_px(&self) -> f64 {
        self.image.0 as f64 / 2.0 / (self.fov.to_radians() / 2.0).tan()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov > 10.0 && self.fov < 120.0) || !(self.height > 0.0) || self.image.0 == 0 || self.image.1 == 0 {
            return Err(Error::InvalidArgument(format!("invalid camera {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlluminationSpec {
    pub azimuth: f64,
    /// degrees above the horizon, in [0, 90]
    pub elevation: f64,
    pub intensity_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnimalSpec {
    pub species: Species,
    /// `(x, z)` in metres: lateral offset along the camera's right axis and
    /// distance along its optical axis.
    pub ground_position: (f64, f64),
    /// degrees; 0 faces right in the image, 180 faces left
    pub heading: f64,
    pub scale: f64,
    pub gait_phase: f64,
    /// base luminance (0–255) before shading
    pub albedo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    pub texture_seed: u64,
    /// 0–255 scale
    pub mean_luminance: f64,
    /// standard deviation of the texture, 0–255 scale
    pub texture_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub camera: CameraSpec,
    pub illumination: IlluminationSpec,
    pub animals: Vec<AnimalSpec>,
    pub background: BackgroundSpec,
    /// 0 keeps the animals' own shading, 1 makes them match the background luminance
    pub camouflage: f64,
}
