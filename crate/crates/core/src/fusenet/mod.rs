//! Twin-backbone intensity + depth segmentation network with hand-written
//! backpropagation.
//!
//! Both backbones share one architecture; the depth branch starts from the
//! image branch via [`init_depth_backbone`]. At each of the two pyramid
//! levels the features are concatenated and reduced by a single 3×3 conv.
//! A dense head classifies every pixel and [`predict_instances`] splits the
//! class map into connected components.

mod ablation;
mod conv;
mod gradcheck;
mod io;
mod model;
mod predict;
mod tensor;
mod train;

pub use ablation::{predict_split, run_ablation, run_variant, AblationConfig, VariantResult};
pub use conv::{conv2d, conv2d_backward, ConvGrad, ConvLayer};
pub use gradcheck::{grad_check, relative_error, ConvProbe, GradCheckReport, GradCheckable, GroupError, ModelProbe};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model};
pub use model::{
    fuse_features, init_depth_backbone, normalize_depth, normalize_intensity, weighted_cross_entropy, Backbone,
    BackboneFeatures, ForwardCache, FuseNet, FusionLayer, ModelConfig, ModelGrad, SegmentationHead, LAYER_NAMES,
};
pub use predict::{instances_from_logits, predict_instances, MIN_INSTANCE_AREA};
pub use tensor::{
    concat_channels, relu, relu_backward, softmax, split_channels, upsample_nearest, upsample_nearest_backward, Real,
    Tensor,
};
pub use train::{class_weights, train, train_with_progress, TrainReport};
