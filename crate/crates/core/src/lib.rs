//! Superpixel generation (SLIC, Quick Shift), superpixel-guided message passing with its
//! multiscale cascade and exact backward pass, and segmentation/superpixel quality metrics.
//!
//! Feature maps are `[C, H, W]` f32 tensors; all block statistics accumulate in f64.

pub mod cli;
pub mod color;
pub mod config;
pub mod connectivity;
pub mod error;
pub mod gradcheck;
pub mod io;
pub mod metrics;
pub mod msp;
pub mod partition;
pub mod quickshift;
pub mod render;
pub mod slic;
pub mod tensor;

pub use config::{MspConfig, SuperpixelAlgorithm};
pub use error::{Error, Result};
pub use partition::{validate_partition, SuperpixelPartition, Validity};
pub use tensor::{Image, LabelGrid, LabelMap, Tensor};
