//! Adaptive per-pixel Gaussian mixture background model (Zivkovic & van der
//! Heijden). Luminance is modelled on the 0–255 scale.

use serde::{Deserialize, Serialize};

use super::RoiMask;
use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, IntensityImage, LUMA_SCALE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmConfig {
    pub max_components: usize,
    pub learning_rate: f64,
    /// Mahalanobis distance below which a sample matches a component.
    pub match_threshold: f64,
    pub initial_variance: f64,
    pub min_variance: f64,
    pub max_variance: f64,
    pub background_weight_fraction: f64,
    pub complexity_prior: f64,
    pub foreground_ratio_threshold: f64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            max_components: 4,
            learning_rate: 0.005,
            match_threshold: 3.0,
            initial_variance: 15.0 * 15.0,
            min_variance: 4.0,
            max_variance: 5.0 * 15.0 * 15.0,
            background_weight_fraction: 0.9,
            complexity_prior: 0.05,
            foreground_ratio_threshold: 0.02,
        }
    }
}

impl GmmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.learning_rate,
            self.match_threshold,
            self.initial_variance,
            self.min_variance,
            self.max_variance,
            self.background_weight_fraction,
            self.complexity_prior,
            self.foreground_ratio_threshold,
        ];
        if self.max_components == 0 || positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument("GMM parameters must be positive".into()));
        }
        if self.learning_rate >= 1.0 || self.foreground_ratio_threshold >= 1.0 {
            return Err(Error::InvalidArgument(
                "learning_rate and foreground_ratio_threshold must be below 1".into(),
            ));
        }
        if self.min_variance > self.max_variance {
            return Err(Error::InvalidArgument("min_variance exceeds max_variance".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Component {
    weight: f64,
    mean: f64,
    variance: f64,
}

/// Per-pixel mixtures, components kept sorted by descending weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmState {
    width: usize,
    height: usize,
    max_components: usize,
    components: Vec<Component>,
    counts: Vec<u8>,
    initialized: bool,
}

impl GmmState {
    pub fn new(width: usize, height: usize, max_components: usize) -> Self {
        assert!(max_components > 0 && max_components <= u8::MAX as usize);
        Self {
            width,
            height,
            max_components,
            components: vec![Component::default(); width * height * max_components],
            counts: vec![0; width * height],
            initialized: false,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// `(weight, mean, variance)` of the live components at a pixel.
    pub fn pixel_components(&self, x: usize, y: usize) -> Vec<(f64, f64, f64)> {
        let p = y * self.width + x;
        let k = self.max_components;
        self.components[p * k..p * k + self.counts[p] as usize]
            .iter()
            .map(|c| (c.weight, c.mean, c.variance))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmOutput {
    pub foreground: BinaryMask,
    pub foreground_ratio: f64,
    pub fired: bool,
}

/// Updates one pixel's mixture with sample `x`; returns true when `x` is
/// explained by the background components.
fn update_pixel(mix: &mut [Component], count: &mut u8, x: f64, cfg: &GmmConfig) -> bool {
    let alpha = cfg.learning_rate;
    let prune = alpha * cfg.complexity_prior;
    let gate = cfg.match_threshold * cfg.match_threshold;
    let mut n = *count as usize;

    let mut matched = None;
    let mut cumulative = 0.0;
    let mut background = false;
    for (k, c) in mix[..n].iter().enumerate() {
        let d = x - c.mean;
        if d * d < gate * c.variance {
            matched = Some(k);
            background = cumulative < cfg.background_weight_fraction;
            break;
        }
        cumulative += c.weight;
    }

    for (k, c) in mix[..n].iter_mut().enumerate() {
        let owned = if matched == Some(k) { 1.0 } else { 0.0 };
        c.weight += alpha * (owned - c.weight) - prune;
    }
    if let Some(k) = matched {
        let c = &mut mix[k];
        if c.weight > 0.0 {
            let rate = alpha / c.weight;
            let d = x - c.mean;
            c.mean += rate * d;
            c.variance = (c.variance + rate * (d * d - c.variance)).clamp(cfg.min_variance, cfg.max_variance);
        }
    }

    // drop components pruned to zero, preserving order
    let mut kept = 0;
    for k in 0..n {
        if mix[k].weight > 0.0 {
            mix[kept] = mix[k];
            kept += 1;
        }
    }
    n = kept;

    let total: f64 = mix[..n].iter().map(|c| c.weight).sum();
    if total > 0.0 {
        for c in &mut mix[..n] {
            c.weight /= total;
        }
    }

    if matched.is_none() || n == 0 {
        let fresh = Component {
            weight: if n == 0 { 1.0 } else { alpha },
            mean: x,
            variance: cfg.initial_variance,
        };
        if n > 0 {
            for c in &mut mix[..n] {
                c.weight *= 1.0 - alpha;
            }
        }
        if n == mix.len() {
            // replace the weakest; its weight is folded back into the rest
            let lost = mix[n - 1].weight;
            let rest = 1.0 - alpha - lost;
            if rest > 0.0 {
                for c in &mut mix[..n - 1] {
                    c.weight *= (1.0 - alpha) / rest;
                }
            }
            mix[n - 1] = fresh;
        } else {
            mix[n] = fresh;
            n += 1;
        }
    }

    // insertion sort by descending weight; stable
    for i in 1..n {
        let mut j = i;
        while j > 0 && mix[j - 1].weight < mix[j].weight {
            mix.swap(j - 1, j);
            j -= 1;
        }
    }
    *count = n as u8;
    background
}

/// One background-model update. The first frame seeds the model and is
/// reported as all background. Pixels outside the ROI are neither modelled
/// nor counted.
pub fn gmm_step(state: &mut GmmState, frame: &IntensityImage, roi: &RoiMask, cfg: &GmmConfig) -> Result<GmmOutput> {
    if state.dims() != frame.dims() {
        return Err(Error::DimensionMismatch {
            expected: state.dims(),
            actual: frame.dims(),
        });
    }
    roi.check(frame.dims())?;
    if cfg.max_components != state.max_components {
        return Err(Error::InvalidArgument(format!(
            "state holds {} components per pixel, config asks for {}",
            state.max_components, cfg.max_components
        )));
    }
    let (w, h) = frame.dims();
    let k = state.max_components;
    let mut fg = vec![false; w * h];
    let roi_bits = roi.mask().bits();
    let seeding = !state.initialized;
    let (mut fg_count, mut roi_count) = (0u64, 0u64);
    for (p, (&v, &inside)) in frame.pixels().iter().zip(roi_bits).enumerate() {
        if !inside {
            continue;
        }
        roi_count += 1;
        let x = f64::from(v) / LUMA_SCALE;
        let mix = &mut state.components[p * k..(p + 1) * k];
        let count = &mut state.counts[p];
        if seeding {
            mix[0] = Component {
                weight: 1.0,
                mean: x,
                variance: cfg.initial_variance,
            };
            *count = 1;
            continue;
        }
        if !update_pixel(mix, count, x, cfg) {
            fg[p] = true;
            fg_count += 1;
        }
    }
    state.initialized = true;
    let foreground_ratio = if roi_count == 0 {
        0.0
    } else {
        fg_count as f64 / roi_count as f64
    };
    Ok(GmmOutput {
        foreground: BinaryMask::new(w, h, fg)?,
        foreground_ratio,
        fired: foreground_ratio >= cfg.foreground_ratio_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(w: usize, h: usize, luma: f64) -> IntensityImage {
        IntensityImage::filled(w, h, (luma * LUMA_SCALE) as u16)
    }

    #[test]
    fn static_scene_settles() {
        let cfg = GmmConfig::default();
        let mut s = GmmState::new(16, 16, cfg.max_components);
        let roi = RoiMask::full(16, 16);
        let f = constant(16, 16, 100.0);
        for i in 0..200 {
            let out = gmm_step(&mut s, &f, &roi, &cfg).unwrap();
            if i >= 50 {
                assert!(!out.fired);
                assert_eq!(out.foreground_ratio, 0.0);
            }
        }
        let comps = s.pixel_components(3, 3);
        assert_eq!(comps.len(), 1);
        assert!((comps[0].0 - 1.0).abs() < 1e-12);
        // each matched update shrinks the variance by at least (1 - learning_rate)
        let bound = cfg.initial_variance * (1.0 - cfg.learning_rate).powi(199);
        assert!(comps[0].2 <= bound && comps[0].2 >= cfg.min_variance);
    }

    #[test]
    fn global_shift_is_all_foreground() {
        let cfg = GmmConfig::default();
        let mut s = GmmState::new(16, 16, cfg.max_components);
        let roi = RoiMask::full(16, 16);
        for _ in 0..100 {
            gmm_step(&mut s, &constant(16, 16, 100.0), &roi, &cfg).unwrap();
        }
        let sigma = s.pixel_components(0, 0)[0].2.sqrt();
        let shift = (10.0 * cfg.match_threshold * sigma).min(150.0);
        assert!(shift > cfg.match_threshold * sigma);
        let out = gmm_step(&mut s, &constant(16, 16, 100.0 + shift), &roi, &cfg).unwrap();
        assert!((out.foreground_ratio - 1.0).abs() < 1e-12);
        assert!(out.fired);
    }

    #[test]
    fn entering_square_ratio() {
        let cfg = GmmConfig {
            foreground_ratio_threshold: 0.005,
            ..GmmConfig::default()
        };
        let mut s = GmmState::new(200, 200, cfg.max_components);
        let roi = RoiMask::full(200, 200);
        let bg = IntensityImage::from_fn(200, 200, |x, y| ((80 + (x * 3 + y * 5) % 9) as f64 * LUMA_SCALE) as u16);
        for _ in 0..60 {
            gmm_step(&mut s, &bg, &roi, &cfg).unwrap();
        }
        let mut f = bg.clone();
        for y in 90..110 {
            for x in 90..110 {
                f.set(x, y, 62_000);
            }
        }
        let out = gmm_step(&mut s, &f, &roi, &cfg).unwrap();
        // count oracle: 20*20 of 200*200
        let expected = 400.0 / 40_000.0;
        assert!((out.foreground_ratio - expected).abs() <= 0.005);
        assert!(out.fired);
        assert_eq!(out.foreground.count(), 400);
    }

    #[test]
    fn weights_stay_normalized_under_alternation() {
        let cfg = GmmConfig::default();
        let mut s = GmmState::new(1, 1, cfg.max_components);
        let roi = RoiMask::full(1, 1);
        for i in 0..500u32 {
            let v = [10.0, 200.0, 90.0, 140.0, 250.0][(i % 5) as usize];
            gmm_step(&mut s, &constant(1, 1, v), &roi, &cfg).unwrap();
            let comps = s.pixel_components(0, 0);
            assert!(comps.len() <= cfg.max_components);
            let sum: f64 = comps.iter().map(|c| c.0).sum();
            assert!(comps.iter().all(|c| c.0 >= 0.0));
            assert!(sum <= 1.0 + 1e-6, "sum {sum}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = GmmConfig::default();
        let mut s = GmmState::new(4, 4, cfg.max_components);
        assert!(gmm_step(&mut s, &constant(4, 5, 1.0), &RoiMask::full(4, 5), &cfg).is_err());
    }
}
