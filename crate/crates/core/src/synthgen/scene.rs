use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::render::Silhouette;
use super::{AnimalSpec, BackgroundSpec, CameraSpec, IlluminationSpec, SceneSpec, Species};

/// Closed interval; `min == max` collapses to a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn point(v: f64) -> Self {
        Self { min: v, max: v }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        // always draw so collapsing one range does not shift the others
        let u: f64 = rng.gen();
        if self.max <= self.min {
            self.min
        } else {
            self.min + u * (self.max - self.min)
        }
    }
}

/// Randomization ranges for [`sample_scene`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneRanges {
    pub image: (usize, usize),
    pub camera_height: Range,
    pub pitch: Range,
    pub fov: Range,
    pub illumination_azimuth: Range,
    pub illumination_elevation: Range,
    pub intensity_scale: Range,
    /// inclusive
    pub animal_count: (usize, usize),
    /// relative frequencies of deer, boar, hare, fox
    pub class_weights: [f64; 4],
    /// distance along the optical axis, metres
    pub distance: Range,
    /// horizontal placement as a fraction of the image width
    pub column: Range,
    pub heading: Range,
    pub albedo: Range,
    pub background_luminance: Range,
    pub texture_amplitude: Range,
    pub camouflage: Range,
    /// Minimum pixel gap between animals' projected boxes; `None` allows overlap.
    pub min_gap_px: Option<usize>,
}

impl Default for SceneRanges {
    fn default() -> Self {
        Self {
            image: (64, 48),
            camera_height: Range::new(1.5, 3.0),
            pitch: Range::new(10.0, 25.0),
            fov: Range::new(40.0, 60.0),
            illumination_azimuth: Range::new(-60.0, 60.0),
            illumination_elevation: Range::new(15.0, 75.0),
            intensity_scale: Range::new(0.8, 1.2),
            animal_count: (1, 3),
            // class mix of the reference training split
            class_weights: [2536.0, 1212.0, 934.0, 410.0],
            distance: Range::new(3.0, 7.0),
            column: Range::new(0.15, 0.85),
            heading: Range::new(0.0, 360.0),
            albedo: Range::new(60.0, 200.0),
            background_luminance: Range::new(90.0, 150.0),
            texture_amplitude: Range::new(10.0, 18.0),
            camouflage: Range::point(0.0),
            min_gap_px: None,
        }
    }
}

fn pick_species(rng: &mut impl Rng, weights: &[f64; 4]) -> Species {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (s, w) in Species::ALL.iter().zip(weights) {
        if u < *w {
            return *s;
        }
        u -= w;
    }
    Species::Fox
}

const PLACEMENT_ATTEMPTS: usize = 50;

/// Deterministic scene draw: the same `seed` and `ranges` always give the
/// same [`SceneSpec`].
pub fn sample_scene(seed: u64, ranges: &SceneRanges) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let camera = CameraSpec {
        height: ranges.camera_height.sample(&mut rng),
        pitch: ranges.pitch.sample(&mut rng),
        fov: ranges.fov.sample(&mut rng),
        image: ranges.image,
    };
    let illumination = IlluminationSpec {
        azimuth: ranges.illumination_azimuth.sample(&mut rng),
        elevation: ranges.illumination_elevation.sample(&mut rng).clamp(0.0, 90.0),
        intensity_scale: ranges.intensity_scale.sample(&mut rng),
    };
    let background = BackgroundSpec {
        texture_seed: rng.gen(),
        mean_luminance: ranges.background_luminance.sample(&mut rng),
        texture_amplitude: ranges.texture_amplitude.sample(&mut rng),
    };
    let camouflage = ranges.camouflage.sample(&mut rng).clamp(0.0, 1.0);
    let (lo, hi) = ranges.animal_count;
    let count = if hi > lo { rng.gen_range(lo..=hi) } else { lo };

    let focal = camera.focal_px();
    let (w, _) = camera.image;
    let mut animals: Vec<AnimalSpec> = Vec::with_capacity(count);
    let mut boxes: Vec<(f64, f64, f64, f64)> = Vec::new();
    for _ in 0..count {
        for _ in 0..PLACEMENT_ATTEMPTS {
            let species = pick_species(&mut rng, &ranges.class_weights);
            let (smin, smax) = species.scale_range();
            let z = ranges.distance.sample(&mut rng);
            let column = ranges.column.sample(&mut rng);
            let animal = AnimalSpec {
                species,
                ground_position: ((column * w as f64 - w as f64 / 2.0) * z / focal, z),
                heading: ranges.heading.sample(&mut rng),
                scale: Range::new(smin, smax).sample(&mut rng),
                gait_phase: rng.gen::<f64>(),
                albedo: ranges.albedo.sample(&mut rng),
            };
            let Some(gap) = ranges.min_gap_px else {
                animals.push(animal);
                break;
            };
            let b = Silhouette::new(&animal).image_bounds(&camera, &animal);
            let g = gap as f64;
            let clear = boxes
                .iter()
                .all(|o| b.0 > o.2 + g || o.0 > b.2 + g || b.1 > o.3 + g || o.1 > b.3 + g);
            if clear {
                boxes.push(b);
                animals.push(animal);
                break;
            }
        }
    }
    SceneSpec {
        seed,
        camera,
        illumination,
        animals,
        background,
        camouflage,
    }
}
