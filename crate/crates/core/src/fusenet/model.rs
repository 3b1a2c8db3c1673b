use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{conv2d, conv2d_backward, ConvGrad, ConvLayer};
use super::tensor::{
    concat_channels, relu, relu_backward, softmax, split_channels, upsample_nearest, upsample_nearest_backward,
    Real, Tensor,
};
use crate::error::{Error, Result};
use crate::imaging::{DepthMap, IntensityImage, NUM_CLASSES};

const LEVEL1_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Foreground classes; the network emits one extra background channel.
    pub num_classes: usize,
    pub feature_depth: usize,
    pub input_channels: usize,
    pub learning_rate: f32,
    /// Decay the step size linearly to zero over the run.
    pub linear_decay: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub depth_enabled: bool,
    pub max_depth_mm: f32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_classes: NUM_CLASSES,
            feature_depth: 16,
            input_channels: 1,
            learning_rate: 0.1,
            linear_decay: true,
            epochs: 20,
            batch_size: 1,
            seed: 0,
            depth_enabled: true,
            max_depth_mm: 20_000.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.num_classes > 0
            && self.feature_depth > 0
            && self.input_channels > 0
            && self.learning_rate >= 0.0
            && self.learning_rate.is_finite()
            && self.epochs > 0
            && self.batch_size > 0
            && self.max_depth_mm > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid model config {self:?}")))
        }
    }

    pub fn output_channels(&self) -> usize {
        self.num_classes + 1
    }
}

/// conv(in→8, s1) → relu → conv(8→16, s2) → relu → conv(16→F, s2) → relu.
#[derive(Debug, Clone, PartialEq)]
pub struct Backbone<T = f32> {
    pub conv1: ConvLayer<T>,
    pub conv2: ConvLayer<T>,
    pub conv3: ConvLayer<T>,
}

/// Activations of one backbone pass.
#[derive(Debug, Clone)]
pub struct BackboneFeatures<T = f32> {
    pub input: Tensor<T>,
    pub stem: Tensor<T>,
    pub level1: Tensor<T>,
    pub level2: Tensor<T>,
}

impl<T: Real> Backbone<T> {
    pub fn init(in_channels: usize, feature_depth: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            conv1: ConvLayer::init_uniform(in_channels, 8, 3, 1, rng)?,
            conv2: ConvLayer::init_uniform(8, LEVEL1_DEPTH, 3, 2, rng)?,
            conv3: ConvLayer::init_uniform(LEVEL1_DEPTH, feature_depth, 3, 2, rng)?,
        })
    }

    pub fn run(&self, input: &Tensor<T>) -> Result<BackboneFeatures<T>> {
        let mut stem = conv2d(input, &self.conv1)?;
        relu(&mut stem);
        let mut level1 = conv2d(&stem, &self.conv2)?;
        relu(&mut level1);
        let mut level2 = conv2d(&level1, &self.conv3)?;
        relu(&mut level2);
        Ok(BackboneFeatures {
            input: input.clone(),
            stem,
            level1,
            level2,
        })
    }

    fn backward(
        &self,
        feats: &BackboneFeatures<T>,
        mut g_level1: Tensor<T>,
        mut g_level2: Tensor<T>,
    ) -> Result<[ConvGrad<T>; 3]> {
        relu_backward(&mut g_level2, &feats.level2);
        let (g, grad3) = conv2d_backward(&feats.level1, &self.conv3, &g_level2, true)?;
        g_level1.add_assign(&g.expect("input gradient"));
        relu_backward(&mut g_level1, &feats.level1);
        let (g_stem, grad2) = conv2d_backward(&feats.stem, &self.conv2, &g_level1, true)?;
        let mut g_stem = g_stem.expect("input gradient");
        relu_backward(&mut g_stem, &feats.stem);
        let (_, grad1) = conv2d_backward(&feats.input, &self.conv1, &g_stem, false)?;
        Ok([grad1, grad2, grad3])
    }

    pub fn mirrored(&self) -> Self {
        Self {
            conv1: self.conv1.mirrored(),
            conv2: self.conv2.mirrored(),
            conv3: self.conv3.mirrored(),
        }
    }

    pub fn cast<U: Real>(&self) -> Backbone<U> {
        Backbone {
            conv1: self.conv1.cast(),
            conv2: self.conv2.cast(),
            conv3: self.conv3.cast(),
        }
    }
}

/// Depth backbone seeded from an image backbone: first-layer weights are
/// averaged over input channels, later layers copied.
pub fn init_depth_backbone<T: Real>(image: &Backbone<T>) -> Backbone<T> {
    let src = &image.conv1;
    let k2 = src.kernel * src.kernel;
    let scale = T::one() / T::of(src.in_channels as f64);
    let mut weights = vec![T::zero(); src.out_channels * k2];
    for o in 0..src.out_channels {
        for i in 0..src.in_channels {
            let base = (o * src.in_channels + i) * k2;
            for (dst, &w) in weights[o * k2..(o + 1) * k2].iter_mut().zip(&src.weights[base..base + k2]) {
                *dst += w;
            }
        }
    }
    for w in &mut weights {
        *w *= scale;
    }
    Backbone {
        conv1: ConvLayer {
            in_channels: 1,
            out_channels: src.out_channels,
            kernel: src.kernel,
            stride: src.stride,
            weights,
            bias: src.bias.clone(),
        },
        conv2: image.conv2.clone(),
        conv3: image.conv3.clone(),
    }
}

/// One fusion conv per pyramid level, each halving the concatenated depth.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionLayer<T = f32> {
    pub level1: ConvLayer<T>,
    pub level2: ConvLayer<T>,
}

impl<T: Real> FusionLayer<T> {
    pub fn init(feature_depth: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            level1: ConvLayer::init_uniform(2 * LEVEL1_DEPTH, LEVEL1_DEPTH, 3, 1, rng)?,
            level2: ConvLayer::init_uniform(2 * feature_depth, feature_depth, 3, 1, rng)?,
        })
    }
}

/// Concatenates image then depth features and applies the level's conv.
pub fn fuse_features<T: Real>(img: &Tensor<T>, depth: &Tensor<T>, fusion: &ConvLayer<T>) -> Result<Tensor<T>> {
    if img.shape() != depth.shape() || fusion.in_channels != 2 * img.channels || fusion.out_channels != img.channels {
        return Err(Error::ShapeMismatch(format!(
            "fusion {}->{} for features {:?} and {:?}",
            fusion.in_channels,
            fusion.out_channels,
            img.shape(),
            depth.shape()
        )));
    }
    conv2d(&concat_channels(img, depth)?, fusion)
}

/// Per-level 3×3 classifiers whose upsampled outputs are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationHead<T = f32> {
    pub level1: ConvLayer<T>,
    pub level2: ConvLayer<T>,
}

/// Twin-backbone segmentation network.
#[derive(Debug, Clone, PartialEq)]
pub struct FuseNet<T = f32> {
    pub config: ModelConfig,
    pub image_backbone: Backbone<T>,
    pub depth_backbone: Backbone<T>,
    pub fusion: FusionLayer<T>,
    pub head: SegmentationHead<T>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T = f32> {
    pub image: BackboneFeatures<T>,
    pub depth: Option<BackboneFeatures<T>>,
    pub concat1: Option<Tensor<T>>,
    pub concat2: Option<Tensor<T>>,
    pub fused1: Tensor<T>,
    pub fused2: Tensor<T>,
    pub head1: Tensor<T>,
    pub head2: Tensor<T>,
    pub logits: Tensor<T>,
}

/// Parameter gradients in [`FuseNet::layers`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrad<T = f32> {
    pub layers: Vec<ConvGrad<T>>,
}

impl<T: Real> ModelGrad<T> {
    pub fn zeros_like(model: &FuseNet<T>) -> Self {
        Self {
            layers: model.layers().into_iter().map(|(_, l)| ConvGrad::zeros_like(l)).collect(),
        }
    }

    pub fn add(&mut self, other: &ModelGrad<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.add(b);
        }
    }

    pub fn scale(&mut self, s: T) {
        for g in &mut self.layers {
            g.weights.iter_mut().chain(g.bias.iter_mut()).for_each(|v| *v *= s);
        }
    }
}

pub const LAYER_NAMES: [&str; 10] = [
    "image.conv1",
    "image.conv2",
    "image.conv3",
    "depth.conv1",
    "depth.conv2",
    "depth.conv3",
    "fusion.level1",
    "fusion.level2",
    "head.level1",
    "head.level2",
];

/// Intensity scaled to `[0, 1]`.
pub fn normalize_intensity<T: Real>(img: &IntensityImage) -> Tensor<T> {
    let (w, h) = img.dims();
    let data = img.pixels().iter().map(|&v| T::of(v as f64 / 65535.0)).collect();
    Tensor::from_vec(1, h, w, data).expect("image shape")
}

/// Depth clamped at `max_mm` and scaled to `[0, 1]`; missing depth maps to 0.
pub fn normalize_depth<T: Real>(depth: &DepthMap, max_mm: f32) -> Tensor<T> {
    let (w, h) = depth.dims();
    let max = max_mm as f64;
    let data = depth
        .depths()
        .iter()
        .map(|&d| T::of((d as f64).min(max) / max))
        .collect();
    Tensor::from_vec(1, h, w, data).expect("depth shape")
}

impl<T: Real> FuseNet<T> {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let image_backbone = Backbone::init(config.input_channels, config.feature_depth, &mut rng)?;
        let depth_backbone = init_depth_backbone(&image_backbone);
        let fusion = FusionLayer::init(config.feature_depth, &mut rng)?;
        let c = config.output_channels();
        let head = SegmentationHead {
            level1: ConvLayer::init_uniform(LEVEL1_DEPTH, c, 3, 1, &mut rng)?,
            level2: ConvLayer::init_uniform(config.feature_depth, c, 3, 1, &mut rng)?,
        };
        Ok(Self {
            config,
            image_backbone,
            depth_backbone,
            fusion,
            head,
        })
    }

    /// All layers in declaration order, paired with their names.
    pub fn layers(&self) -> Vec<(&'static str, &ConvLayer<T>)> {
        let l = [
            &self.image_backbone.conv1,
            &self.image_backbone.conv2,
            &self.image_backbone.conv3,
            &self.depth_backbone.conv1,
            &self.depth_backbone.conv2,
            &self.depth_backbone.conv3,
            &self.fusion.level1,
            &self.fusion.level2,
            &self.head.level1,
            &self.head.level2,
        ];
        LAYER_NAMES.into_iter().zip(l).collect()
    }

    pub fn layers_mut(&mut self) -> Vec<&mut ConvLayer<T>> {
        vec![
            &mut self.image_backbone.conv1,
            &mut self.image_backbone.conv2,
            &mut self.image_backbone.conv3,
            &mut self.depth_backbone.conv1,
            &mut self.depth_backbone.conv2,
            &mut self.depth_backbone.conv3,
            &mut self.fusion.level1,
            &mut self.fusion.level2,
            &mut self.head.level1,
            &mut self.head.level2,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|(_, l)| l.param_count()).sum()
    }

    pub fn cast<U: Real>(&self) -> FuseNet<U> {
        FuseNet {
            config: self.config.clone(),
            image_backbone: self.image_backbone.cast(),
            depth_backbone: self.depth_backbone.cast(),
            fusion: FusionLayer {
                level1: self.fusion.level1.cast(),
                level2: self.fusion.level2.cast(),
            },
            head: SegmentationHead {
                level1: self.head.level1.cast(),
                level2: self.head.level2.cast(),
            },
        }
    }

    /// Every kernel mirrored left-right.
    pub fn mirrored(&self) -> Self {
        Self {
            config: self.config.clone(),
            image_backbone: self.image_backbone.mirrored(),
            depth_backbone: self.depth_backbone.mirrored(),
            fusion: FusionLayer {
                level1: self.fusion.level1.mirrored(),
                level2: self.fusion.level2.mirrored(),
            },
            head: SegmentationHead {
                level1: self.head.level1.mirrored(),
                level2: self.head.level2.mirrored(),
            },
        }
    }

    pub fn apply_gradient(&mut self, grad: &ModelGrad<T>, lr: T) {
        for (layer, g) in self.layers_mut().into_iter().zip(&grad.layers) {
            layer.apply_gradient(g, lr);
        }
    }

    /// Normalises raw images into network inputs.
    pub fn prepare(&self, intensity: &IntensityImage, depth: Option<&DepthMap>) -> Result<(Tensor<T>, Option<Tensor<T>>)> {
        let x = normalize_intensity(intensity);
        if !self.config.depth_enabled {
            return Ok((x, None));
        }
        let depth = depth.ok_or(Error::MissingDepth)?;
        if depth.dims() != intensity.dims() {
            return Err(Error::DimensionMismatch {
                expected: intensity.dims(),
                actual: depth.dims(),
            });
        }
        Ok((x, Some(normalize_depth(depth, self.config.max_depth_mm))))
    }

    /// Per-pixel logits `[num_classes + 1, H, W]`.
    pub fn forward(&self, intensity: &IntensityImage, depth: Option<&DepthMap>) -> Result<Tensor<T>> {
        let (x, d) = self.prepare(intensity, depth)?;
        Ok(self.forward_cached(&x, d.as_ref())?.logits)
    }

    pub fn forward_tensors(&self, x: &Tensor<T>, depth: Option<&Tensor<T>>) -> Result<Tensor<T>> {
        Ok(self.forward_cached(x, depth)?.logits)
    }

    pub fn forward_cached(&self, x: &Tensor<T>, depth: Option<&Tensor<T>>) -> Result<ForwardCache<T>> {
        let image = self.image_backbone.run(x)?;
        let (depth, concat1, concat2, fused1, fused2) = if self.config.depth_enabled {
            let d = depth.ok_or(Error::MissingDepth)?;
            if (d.height, d.width) != (x.height, x.width) {
                return Err(Error::DimensionMismatch {
                    expected: (x.width, x.height),
                    actual: (d.width, d.height),
                });
            }
            let feats = self.depth_backbone.run(d)?;
            let c1 = concat_channels(&image.level1, &feats.level1)?;
            let c2 = concat_channels(&image.level2, &feats.level2)?;
            let f1 = conv2d(&c1, &self.fusion.level1)?;
            let f2 = conv2d(&c2, &self.fusion.level2)?;
            (Some(feats), Some(c1), Some(c2), f1, f2)
        } else {
            let (f1, f2) = (image.level1.clone(), image.level2.clone());
            (None, None, None, f1, f2)
        };
        let head1 = conv2d(&fused1, &self.head.level1)?;
        let head2 = conv2d(&fused2, &self.head.level2)?;
        let mut logits = upsample_nearest(&head1, x.height, x.width);
        logits.add_assign(&upsample_nearest(&head2, x.height, x.width));
        Ok(ForwardCache {
            image,
            depth,
            concat1,
            concat2,
            fused1,
            fused2,
            head1,
            head2,
            logits,
        })
    }

    /// Parameter gradients given the loss gradient with respect to the logits.
    pub fn backward(&self, cache: &ForwardCache<T>, grad_logits: &Tensor<T>) -> Result<ModelGrad<T>> {
        let mut grads = ModelGrad::zeros_like(self);
        let g_h1 = upsample_nearest_backward(grad_logits, cache.head1.height, cache.head1.width);
        let g_h2 = upsample_nearest_backward(grad_logits, cache.head2.height, cache.head2.width);
        let (g_f1, gh1) = conv2d_backward(&cache.fused1, &self.head.level1, &g_h1, true)?;
        let (g_f2, gh2) = conv2d_backward(&cache.fused2, &self.head.level2, &g_h2, true)?;
        grads.layers[8] = gh1;
        grads.layers[9] = gh2;
        let (g_f1, g_f2) = (g_f1.expect("input gradient"), g_f2.expect("input gradient"));
        match (&cache.depth, &cache.concat1, &cache.concat2) {
            (Some(depth), Some(c1), Some(c2)) => {
                let (g_c1, gf1) = conv2d_backward(c1, &self.fusion.level1, &g_f1, true)?;
                let (g_c2, gf2) = conv2d_backward(c2, &self.fusion.level2, &g_f2, true)?;
                grads.layers[6] = gf1;
                grads.layers[7] = gf2;
                let (gi1, gd1) = split_channels(&g_c1.expect("input gradient"), cache.image.level1.channels);
                let (gi2, gd2) = split_channels(&g_c2.expect("input gradient"), cache.image.level2.channels);
                let [a, b, c] = self.image_backbone.backward(&cache.image, gi1, gi2)?;
                grads.layers[0] = a;
                grads.layers[1] = b;
                grads.layers[2] = c;
                let [a, b, c] = self.depth_backbone.backward(depth, gd1, gd2)?;
                grads.layers[3] = a;
                grads.layers[4] = b;
                grads.layers[5] = c;
            }
            _ => {
                let [a, b, c] = self.image_backbone.backward(&cache.image, g_f1, g_f2)?;
                grads.layers[0] = a;
                grads.layers[1] = b;
                grads.layers[2] = c;
            }
        }
        Ok(grads)
    }

    /// Class-weighted cross-entropy and its parameter gradient for one sample.
    pub fn loss_and_grad(
        &self,
        x: &Tensor<T>,
        depth: Option<&Tensor<T>>,
        target: &[u8],
        class_weights: &[T],
    ) -> Result<(T, ModelGrad<T>)> {
        let cache = self.forward_cached(x, depth)?;
        let (loss, g) = weighted_cross_entropy(&cache.logits, target, class_weights)?;
        Ok((loss, self.backward(&cache, &g)?))
    }

    pub fn loss(&self, x: &Tensor<T>, depth: Option<&Tensor<T>>, target: &[u8], class_weights: &[T]) -> Result<T> {
        let logits = self.forward_tensors(x, depth)?;
        Ok(weighted_cross_entropy(&logits, target, class_weights)?.0)
    }
}

/// `Σ w[t]·(−log p_t) / Σ w[t]` over pixels, with its gradient on the logits.
pub fn weighted_cross_entropy<T: Real>(logits: &Tensor<T>, target: &[u8], weights: &[T]) -> Result<(T, Tensor<T>)> {
    let n = logits.height * logits.width;
    if target.len() != n || weights.len() != logits.channels {
        return Err(Error::ShapeMismatch(format!(
            "{} targets and {} weights for logits {:?}",
            target.len(),
            weights.len(),
            logits.shape()
        )));
    }
    if let Some(&t) = target.iter().find(|&&t| t as usize >= logits.channels) {
        return Err(Error::UnknownClass(t as u16));
    }
    let probs = softmax(logits);
    let total: T = target.iter().map(|&t| weights[t as usize]).sum();
    let mut grad = Tensor::zeros(logits.channels, logits.height, logits.width);
    if total <= T::zero() {
        return Ok((T::zero(), grad));
    }
    let tiny = T::of(1e-30);
    let mut loss = T::zero();
    for (p, &t) in target.iter().enumerate() {
        let w = weights[t as usize] / total;
        if w == T::zero() {
            continue;
        }
        let t = t as usize;
        loss -= w * probs.data[t * n + p].max(tiny).ln();
        for c in 0..logits.channels {
            let onehot = if c == t { T::one() } else { T::zero() };
            grad.data[c * n + p] = w * (probs.data[c * n + p] - onehot);
        }
    }
    Ok((loss, grad))
}
