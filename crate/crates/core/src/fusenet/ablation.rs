use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::model::{FuseNet, ModelConfig};
use super::predict::predict_instances;
use super::train::train_with_progress;
use crate::cocoeval::{evaluate, Detection, EvalConfig, EvalReport, IouKind};
use crate::error::Result;
use crate::imaging::LabeledInstance;
use crate::synthgen::{generate_samples, Range, Sample, SceneRanges};

/// Depth-on versus depth-off comparison on one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    pub train_frames: usize,
    pub test_frames: usize,
    /// Scene seeds of the training split start here.
    pub train_seed: u64,
    /// Scene seeds of the test split start here.
    pub test_seed: u64,
    pub scenes: SceneRanges,
    /// Shared by both variants; `depth_enabled` and `seed` are overridden per run.
    pub model: ModelConfig,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            train_frames: 300,
            test_frames: 100,
            train_seed: 0,
            test_seed: 1_000_000,
            scenes: SceneRanges {
                camouflage: Range::point(0.8),
                min_gap_px: Some(2),
                ..SceneRanges::default()
            },
            model: ModelConfig::default(),
        }
    }
}

/// Outcome of training and evaluating one variant.
#[derive(Debug, Clone)]
pub struct VariantResult {
    pub seed: u64,
    pub depth_enabled: bool,
    pub epoch_losses: Vec<f32>,
    pub masks: EvalReport,
    pub boxes: EvalReport,
    pub detections: usize,
    pub elapsed: Duration,
}

/// Runs the model over a labelled split, returning detections and ground
/// truth keyed by each sample's image id.
pub fn predict_split(model: &FuseNet, samples: &[Sample]) -> Result<(Vec<Detection>, Vec<(u64, LabeledInstance)>)> {
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for s in samples {
        let depth = model.config.depth_enabled.then_some(&s.depth);
        for mut d in predict_instances(model, &s.intensity, depth)? {
            d.image_id = s.image_id;
            preds.push(d);
        }
        gts.extend(s.instances.iter().map(|i| (s.image_id, i.clone())));
    }
    Ok((preds, gts))
}

/// Trains one variant from scratch and evaluates it on `test`.
pub fn run_variant(
    cfg: &ModelConfig,
    seed: u64,
    depth_enabled: bool,
    train: &[Sample],
    test: &[Sample],
    progress: impl FnMut(usize, f32),
) -> Result<VariantResult> {
    let start = Instant::now();
    let mut model = FuseNet::new(ModelConfig {
        seed,
        depth_enabled,
        ..cfg.clone()
    })?;
    let report = train_with_progress(&mut model, train, progress)?;
    let (preds, gts) = predict_split(&model, test)?;
    Ok(VariantResult {
        seed,
        depth_enabled,
        epoch_losses: report.epoch_losses,
        masks: evaluate(&preds, &gts, &EvalConfig::with_kind(IouKind::Mask))?,
        boxes: evaluate(&preds, &gts, &EvalConfig::with_kind(IouKind::Box))?,
        detections: preds.len(),
        elapsed: start.elapsed(),
    })
}

/// Generates both splits once, then for every seed trains the depth-on and
/// depth-off variants with otherwise identical settings.
pub fn run_ablation(
    cfg: &AblationConfig,
    seeds: &[u64],
    mut on_result: impl FnMut(&VariantResult),
) -> Result<Vec<(VariantResult, VariantResult)>> {
    let train = generate_samples(cfg.train_seed, cfg.train_frames, &cfg.scenes)?;
    let test = generate_samples(cfg.test_seed, cfg.test_frames, &cfg.scenes)?;
    let mut out = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let on = run_variant(&cfg.model, seed, true, &train, &test, |_, _| {})?;
        on_result(&on);
        let off = run_variant(&cfg.model, seed, false, &train, &test, |_, _| {})?;
        on_result(&off);
        out.push((on, off));
    }
    Ok(out)
}
