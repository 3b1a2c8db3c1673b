use std::ops::Range;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::conv::{conv2d, ConvLayer};
use super::model::{FuseNet, LAYER_NAMES};
use super::tensor::Tensor;
use crate::error::Result;

/// A differentiable scalar objective over a flat parameter vector.
pub trait GradCheckable {
    /// Named contiguous parameter ranges; sampling draws from each.
    fn groups(&self) -> Vec<(&'static str, Range<usize>)>;
    fn param(&self, index: usize) -> f64;
    fn set_param(&mut self, index: usize, value: f64);
    fn loss(&self) -> Result<f64>;
    fn gradient(&self) -> Result<Vec<f64>>;
    /// Activation pattern; a change under perturbation means a kink was crossed.
    fn kink_signature(&self) -> Result<Vec<bool>> {
        Ok(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupError {
    pub name: &'static str,
    pub checked: usize,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub max_abs_analytic: f64,
    pub max_abs_numeric: f64,
    pub checked: usize,
    pub skipped_at_kinks: usize,
    pub groups: Vec<GroupError>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares analytic gradients with central differences for up to
/// `per_group` randomly chosen parameters of every group.
pub fn grad_check<M: GradCheckable>(
    target: &mut M,
    epsilon: f64,
    per_group: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let analytic = target.gradient()?;
    let base_sig = target.kink_signature()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        max_abs_analytic: 0.0,
        max_abs_numeric: 0.0,
        checked: 0,
        skipped_at_kinks: 0,
        groups: Vec::new(),
    };
    for (name, range) in target.groups() {
        let len = range.len();
        let mut group = GroupError {
            name,
            checked: 0,
            max_relative_error: 0.0,
        };
        for offset in sample(&mut rng, len, len).into_iter() {
            if group.checked >= per_group {
                break;
            }
            let i = range.start + offset;
            let orig = target.param(i);
            target.set_param(i, orig + epsilon);
            let plus = target.loss()?;
            let sig_plus = target.kink_signature()?;
            target.set_param(i, orig - epsilon);
            let minus = target.loss()?;
            let sig_minus = target.kink_signature()?;
            target.set_param(i, orig);
            if sig_plus != base_sig || sig_minus != base_sig {
                report.skipped_at_kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            let err = relative_error(analytic[i], numeric);
            group.checked += 1;
            group.max_relative_error = group.max_relative_error.max(err);
            report.max_abs_analytic = report.max_abs_analytic.max(analytic[i].abs());
            report.max_abs_numeric = report.max_abs_numeric.max(numeric.abs());
        }
        report.checked += group.checked;
        report.max_relative_error = report.max_relative_error.max(group.max_relative_error);
        report.groups.push(group);
    }
    Ok(report)
}

/// Full network with one fixed training example, in double precision.
#[derive(Debug, Clone)]
pub struct ModelProbe {
    pub model: FuseNet<f64>,
    pub input: Tensor<f64>,
    pub depth: Option<Tensor<f64>>,
    pub target: Vec<u8>,
    pub class_weights: Vec<f64>,
    offsets: Vec<usize>,
}

impl ModelProbe {
    pub fn new(
        model: FuseNet<f64>,
        input: Tensor<f64>,
        depth: Option<Tensor<f64>>,
        target: Vec<u8>,
        class_weights: Vec<f64>,
    ) -> Self {
        let mut offsets = vec![0];
        for (_, layer) in model.layers() {
            offsets.push(offsets.last().unwrap() + layer.param_count());
        }
        Self {
            model,
            input,
            depth,
            target,
            class_weights,
            offsets,
        }
    }

    fn locate(&self, index: usize) -> (usize, usize) {
        let layer = self.offsets.partition_point(|&o| o <= index) - 1;
        (layer, index - self.offsets[layer])
    }
}

impl GradCheckable for ModelProbe {
    fn groups(&self) -> Vec<(&'static str, Range<usize>)> {
        let active: &[usize] = if self.model.config.depth_enabled {
            &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
        } else {
            &[0, 1, 2, 8, 9]
        };
        active
            .iter()
            .map(|&l| (LAYER_NAMES[l], self.offsets[l]..self.offsets[l + 1]))
            .collect()
    }

    fn param(&self, index: usize) -> f64 {
        let (l, i) = self.locate(index);
        let (_, layer) = self.model.layers()[l];
        if i < layer.weights.len() {
            layer.weights[i]
        } else {
            layer.bias[i - layer.weights.len()]
        }
    }

    fn set_param(&mut self, index: usize, value: f64) {
        let (l, i) = self.locate(index);
        let layer = self.model.layers_mut().swap_remove(l);
        if i < layer.weights.len() {
            layer.weights[i] = value;
        } else {
            let n = layer.weights.len();
            layer.bias[i - n] = value;
        }
    }

    fn loss(&self) -> Result<f64> {
        self.model
            .loss(&self.input, self.depth.as_ref(), &self.target, &self.class_weights)
    }

    fn gradient(&self) -> Result<Vec<f64>> {
        let (_, grad) = self
            .model
            .loss_and_grad(&self.input, self.depth.as_ref(), &self.target, &self.class_weights)?;
        Ok(grad
            .layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(&g.bias).copied())
            .collect())
    }

    fn kink_signature(&self) -> Result<Vec<bool>> {
        let cache = self.model.forward_cached(&self.input, self.depth.as_ref())?;
        let mut sig = Vec::new();
        for feats in std::iter::once(&cache.image).chain(cache.depth.as_ref()) {
            for t in [&feats.stem, &feats.level1, &feats.level2] {
                sig.extend(t.data.iter().map(|&v| v > 0.0));
            }
        }
        Ok(sig)
    }
}

/// A single convolution under the squared-error loss `½‖conv(x) − y‖²`.
#[derive(Debug, Clone)]
pub struct ConvProbe {
    pub layer: ConvLayer<f64>,
    pub input: Tensor<f64>,
    pub target: Tensor<f64>,
}

impl GradCheckable for ConvProbe {
    fn groups(&self) -> Vec<(&'static str, Range<usize>)> {
        let n = self.layer.weights.len();
        vec![("weights", 0..n), ("bias", n..n + self.layer.bias.len())]
    }

    fn param(&self, index: usize) -> f64 {
        let n = self.layer.weights.len();
        if index < n {
            self.layer.weights[index]
        } else {
            self.layer.bias[index - n]
        }
    }

    fn set_param(&mut self, index: usize, value: f64) {
        let n = self.layer.weights.len();
        if index < n {
            self.layer.weights[index] = value;
        } else {
            self.layer.bias[index - n] = value;
        }
    }

    fn loss(&self) -> Result<f64> {
        let out = conv2d(&self.input, &self.layer)?;
        Ok(0.5 * out.data.iter().zip(&self.target.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }

    fn gradient(&self) -> Result<Vec<f64>> {
        let mut out = conv2d(&self.input, &self.layer)?;
        for (o, t) in out.data.iter_mut().zip(&self.target.data) {
            *o -= t;
        }
        let (_, g) = super::conv::conv2d_backward(&self.input, &self.layer, &out, false)?;
        Ok(g.weights.into_iter().chain(g.bias).collect())
    }
}
