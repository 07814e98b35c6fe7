//! Reference implementations of the detector and classifier building blocks.
//!
//! Feature maps are `C x H x W` [`Tensor`](crate::Tensor)s. All convolutions
//! are cross-correlations with zero padding, computed with direct loops.

mod head;
mod layers;
mod pyramid;
mod scaling;

pub use head::{head_predict, HeadOutput};
pub use layers::{
    batchnorm_infer, conv2d, conv_output_size, depthwise_conv, linear_classify, pointwise_conv,
    silu,
};
pub use pyramid::{
    downsample_max2, fuse_bottomup, fuse_topdown, max_pool_same, spatial_attention, sppf,
    sppf_stages, upsample_nearest2,
};
pub use scaling::{
    backbone_ladder, compound_scale, grid_search_scaling, ScaleRange, ScalingTriple, StageSpec,
    BACKBONE_STAGES, COMPOUND_TARGET,
};
