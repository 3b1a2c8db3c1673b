use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::imaging::{read_pgm_depth, read_pgm_intensity, DepthMap, IntensityImage, LUMA_SCALE};
use crate::synthgen::{
    render_scene, AnimalSpec, BackgroundSpec, CameraSpec, IlluminationSpec, RenderedFrame, SceneSpec, Species,
};

/// One captured instant: the left camera image, the true scene depth used to
/// simulate the second stereo view, and the PIR reading.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: u64,
    pub timestamp: DateTime<Utc>,
    pub intensity: IntensityImage,
    pub scene_depth: DepthMap,
    pub pir: bool,
}

/// An animal walking across the field of view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub start_frame: u64,
    /// frames from entering on one side to leaving on the other
    pub frames: u64,
    pub species: Species,
    /// metres along the optical axis
    pub distance: f64,
    #[serde(default = "default_true")]
    pub left_to_right: bool,
}

fn default_true() -> bool {
    true
}

/// A rendered stream over a fixed synthetic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticStream {
    pub start: DateTime<Utc>,
    pub frames: u64,
    pub interval_s: f64,
    pub scene_seed: u64,
    pub camera: CameraSpec,
    /// standard deviation of per-frame sensor noise, 0–255 scale
    pub noise: f64,
    pub crossings: Vec<Crossing>,
}

impl Default for SyntheticStream {
    fn default() -> Self {
        Self {
            start: DateTime::UNIX_EPOCH,
            frames: 100,
            interval_s: 1.0,
            scene_seed: 0,
            camera: CameraSpec {
                height: 2.0,
                pitch: 15.0,
                fov: 50.0,
                image: (160, 120),
            },
            noise: 1.0,
            crossings: Vec::new(),
        }
    }
}

impl SyntheticStream {
    fn scene(&self, animals: Vec<AnimalSpec>) -> SceneSpec {
        SceneSpec {
            seed: self.scene_seed,
            camera: self.camera,
            illumination: IlluminationSpec {
                azimuth: 20.0,
                elevation: 45.0,
                intensity_scale: 1.0,
            },
            animals,
            background: BackgroundSpec {
                texture_seed: self.scene_seed,
                mean_luminance: 120.0,
                texture_amplitude: 14.0,
            },
            camouflage: 0.0,
        }
    }

    /// Animals visible at frame `i`.
    pub fn animals_at(&self, i: u64) -> Vec<AnimalSpec> {
        let half_width = |z: f64| z * (self.camera.fov.to_radians() / 2.0).tan();
        self.crossings
            .iter()
            .filter(|c| c.frames > 0 && i >= c.start_frame && i < c.start_frame + c.frames)
            .map(|c| {
                let t = (i - c.start_frame) as f64 / c.frames.saturating_sub(1).max(1) as f64;
                let reach = half_width(c.distance) + 1.0;
                let (from, to, heading) = if c.left_to_right {
                    (-reach, reach, 0.0)
                } else {
                    (reach, -reach, 180.0)
                };
                AnimalSpec {
                    species: c.species,
                    ground_position: (from + (to - from) * t, c.distance),
                    heading,
                    scale: 1.0,
                    gait_phase: (i - c.start_frame) as f64 * 0.35,
                    albedo: 70.0,
                }
            })
            .collect()
    }

    pub fn iter(&self) -> Result<SyntheticSource> {
        self.camera.validate()?;
        if !(self.interval_s > 0.0) {
            return Err(Error::InvalidArgument("frame interval must be positive".into()));
        }
        let background = render_scene(&self.scene(Vec::new()))?;
        Ok(SyntheticSource {
            spec: self.clone(),
            background,
            next: 0,
        })
    }
}

pub struct SyntheticSource {
    spec: SyntheticStream,
    background: RenderedFrame,
    next: u64,
}

impl SyntheticSource {
    fn frame(&self, i: u64) -> Result<Frame> {
        let animals = self.spec.animals_at(i);
        let pir = !animals.is_empty();
        let rendered = if pir {
            render_scene(&self.spec.scene(animals))?
        } else {
            self.background.clone()
        };
        let mut intensity = rendered.intensity;
        if self.spec.noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.spec.scene_seed ^ i.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let spread = self.spec.noise * 3f64.sqrt() * LUMA_SCALE;
            for p in intensity.pixels_mut() {
                let v = *p as f64 + rng.gen_range(-spread..=spread);
                *p = v.round().clamp(0.0, 65535.0) as u16;
            }
        }
        let micros = (self.spec.interval_s * 1e6 * i as f64).round() as i64;
        Ok(Frame {
            index: i,
            timestamp: self.spec.start + Duration::microseconds(micros),
            intensity,
            scene_depth: rendered.depth,
            pir,
        })
    }
}

impl Iterator for SyntheticSource {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Result<Frame>> {
        if self.next >= self.spec.frames {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(self.frame(i))
    }
}

/// Frames listed in `<dir>/index.csv` with a header line and columns
/// `timestamp,intensity,depth,pir` (RFC 3339, PGM paths relative to `dir`,
/// 0 or 1).
pub struct DirectorySource {
    dir: PathBuf,
    rows: Vec<(DateTime<Utc>, String, String, bool)>,
    next: usize,
}

impl DirectorySource {
    pub fn open(dir: &Path) -> Result<Self> {
        let index = dir.join("index.csv");
        let text = std::fs::read_to_string(&index).at(&index)?;
        let bad = |line: usize, reason: String| Error::Format {
            path: index.clone(),
            reason: format!("line {line}: {reason}"),
        };
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(bad(n + 1, format!("expected 4 columns, found {}", cols.len())));
            }
            let ts = DateTime::parse_from_rfc3339(cols[0])
                .map_err(|e| bad(n + 1, e.to_string()))?
                .with_timezone(&Utc);
            let pir = match cols[3] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(bad(n + 1, format!("pir value {other:?}"))),
            };
            if let Some(prev) = rows.last().map(|r: &(DateTime<Utc>, String, String, bool)| r.0) {
                if ts <= prev {
                    return Err(Error::NonMonotoneTimestamps { index: rows.len() });
                }
            }
            rows.push((ts, cols[1].to_owned(), cols[2].to_owned(), pir));
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            rows,
            next: 0,
        })
    }
}

impl Iterator for DirectorySource {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Result<Frame>> {
        let (timestamp, int, dep, pir) = self.rows.get(self.next)?.clone();
        let index = self.next as u64;
        self.next += 1;
        let load = || -> Result<Frame> {
            let intensity = read_pgm_intensity(&self.dir.join(&int))?;
            let scene_depth = read_pgm_depth(&self.dir.join(&dep))?;
            if scene_depth.dims() != intensity.dims() {
                return Err(Error::DimensionMismatch {
                    expected: intensity.dims(),
                    actual: scene_depth.dims(),
                });
            }
            Ok(Frame {
                index,
                timestamp,
                intensity,
                scene_depth,
                pir,
            })
        };
        Some(load())
    }
}
