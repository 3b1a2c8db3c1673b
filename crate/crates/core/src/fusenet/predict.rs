use super::model::FuseNet;
use super::tensor::{softmax, Real, Tensor};
use crate::cocoeval::Detection;
use crate::error::Result;
use crate::imaging::{connected_components, BinaryMask, DepthMap, IntensityImage};

/// Components smaller than this are discarded.
pub const MIN_INSTANCE_AREA: usize = 20;

/// Splits per-pixel logits into instances: argmax class map, then 8-connected
/// components of each foreground class. Scores are the mean class probability
/// over the component. `image_id` is left at 0.
pub fn instances_from_logits<T: Real>(logits: &Tensor<T>, min_area: usize) -> Vec<Detection> {
    let probs = softmax(logits);
    let (h, w) = (logits.height, logits.width);
    let n = h * w;
    let argmax: Vec<usize> = (0..n)
        .map(|p| {
            let mut best = 0;
            for c in 1..logits.channels {
                if probs.data[c * n + p] > probs.data[best * n + p] {
                    best = c;
                }
            }
            best
        })
        .collect();
    let mut out = Vec::new();
    for c in 1..logits.channels {
        if !argmax.contains(&c) {
            continue;
        }
        let mask = BinaryMask::from_fn(w, h, |x, y| argmax[y * w + x] == c);
        let plane = probs.plane(c);
        for comp in connected_components(&mask) {
            let area = comp.count();
            if area < min_area {
                continue;
            }
            let sum: f64 = comp.iter_set().map(|(x, y)| plane[y * w + x].as_f64()).sum();
            let score = (sum / area as f64).clamp(0.0, 1.0);
            out.push(Detection::from_mask(0, (c - 1) as u16, score, comp).expect("non-empty component"));
        }
    }
    out
}

pub fn predict_instances<T: Real>(
    model: &FuseNet<T>,
    intensity: &IntensityImage,
    depth: Option<&DepthMap>,
) -> Result<Vec<Detection>> {
    let logits = model.forward(intensity, depth)?;
    Ok(instances_from_logits(&logits, MIN_INSTANCE_AREA))
}
