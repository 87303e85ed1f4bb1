//! Training-time fusion of attention-decoder outputs into the CTC branch.

mod affine;
mod fuse;
mod loss;

pub use affine::{adaptive_affine, repeat_factor, source_map, AedStepGrid, ExpandedAedGrid};
pub use fuse::{dal_fuse, pmp_fuse, pmp_transform, FusionConfig, FusionMode};
pub use loss::{fused_ctc_loss, FusedCtcLoss};
