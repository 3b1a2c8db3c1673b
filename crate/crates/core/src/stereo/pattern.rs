use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::imaging::{IntensityImage, LUMA_SCALE};

/// Adds a sparse pseudo-random dot field to `img`. Exactly
/// `round(density · pixels)` distinct pixels are brightened by `amplitude`
/// (0–255 luminance scale), saturating at white. The dot positions depend
/// only on `seed`, `density` and the image size.
pub fn project_dot_pattern(img: &IntensityImage, seed: u64, density: f64, amplitude: f64) -> IntensityImage {
    let mut out = img.clone();
    let n = img.pixels().len();
    let dots = (density.clamp(0.0, 1.0) * n as f64).round() as usize;
    let lift = (amplitude.max(0.0) * LUMA_SCALE).round().min(65535.0) as u16;
    if dots == 0 || lift == 0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = out.pixels_mut();
    for i in index::sample(&mut rng, n, dots) {
        pixels[i] = pixels[i].saturating_add(lift);
    }
    out
}
