use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::{FuseNet, ModelGrad};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::synthgen::Sample;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-sample loss of each epoch, measured before each update.
    pub epoch_losses: Vec<f32>,
    pub class_weights: Vec<f32>,
}

struct Example {
    input: Tensor<f32>,
    depth: Option<Tensor<f32>>,
    target: Vec<u8>,
}

/// Inverse class-frequency weights over the dense targets; classes absent
/// from the data get weight 0.
pub fn class_weights(targets: &[Vec<u8>], channels: usize) -> Vec<f32> {
    let mut counts = vec![0u64; channels];
    for t in targets {
        for &c in t {
            if (c as usize) < channels {
                counts[c as usize] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                0.0
            } else {
                (total as f64 / (present * c as f64)) as f32
            }
        })
        .collect()
}

/// Plain minibatch SGD on class-weighted cross-entropy, optionally with the
/// step size decaying linearly to zero. Shuffling is seeded
/// from the model config and per-sample gradients are summed in batch order,
/// so the result is bit-reproducible.
pub fn train(model: &mut FuseNet<f32>, dataset: &[Sample]) -> Result<TrainReport> {
    train_with_progress(model, dataset, |_, _| {})
}

pub fn train_with_progress(
    model: &mut FuseNet<f32>,
    dataset: &[Sample],
    mut on_epoch: impl FnMut(usize, f32),
) -> Result<TrainReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    model.config.validate()?;
    let channels = model.config.output_channels();
    let examples = dataset
        .iter()
        .map(|s| {
            let (input, depth) = model.prepare(&s.intensity, Some(&s.depth))?;
            let target = s.class_map();
            if let Some(&t) = target.iter().find(|&&t| t as usize >= channels) {
                return Err(Error::UnknownClass(t as u16 - 1));
            }
            Ok(Example { input, depth, target })
        })
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<Vec<u8>> = examples.iter().map(|e| e.target.clone()).collect();
    let weights = class_weights(&targets, channels);
    let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed ^ 0x5eed_5eed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let base_lr = model.config.learning_rate;
    let steps_per_epoch = examples.len().div_ceil(model.config.batch_size);
    let total_steps = (steps_per_epoch * model.config.epochs) as f32;
    let mut step = 0usize;
    let mut epoch_losses = Vec::with_capacity(model.config.epochs);
    for epoch in 0..model.config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0f64;
        for batch in order.chunks(model.config.batch_size) {
            let snapshot = &*model;
            let results = batch
                .par_iter()
                .map(|&i| {
                    let e = &examples[i];
                    snapshot.loss_and_grad(&e.input, e.depth.as_ref(), &e.target, &weights)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut total = ModelGrad::zeros_like(model);
            for (loss, grad) in &results {
                epoch_loss += *loss as f64;
                total.add(grad);
            }
            total.scale(1.0 / batch.len() as f32);
            let lr = if model.config.linear_decay {
                base_lr * (1.0 - step as f32 / total_steps)
            } else {
                base_lr
            };
            step += 1;
            if lr != 0.0 {
                model.apply_gradient(&total, lr);
            }
        }
        let mean = (epoch_loss / examples.len() as f64) as f32;
        log::info!("epoch {epoch}: loss {mean:.5}");
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }
    Ok(TrainReport {
        epoch_losses,
        class_weights: weights,
    })
}
