//! Core library for group-level affect estimation from images.
//!
//! Predicting the mood of a group of people in a photo works in three
//! stages, each of which lives in its own module tree here:
//!
//! 1. **Regional descriptors** — faces ([`face`]), upper bodies ([`body`])
//!    and the scene ([`scene`]) are turned into sets of local feature
//!    vectors (one per image block or superpixel).
//! 2. **Aggregation** ([`encoding`]) — the variable number of regional
//!    vectors per image is compressed into one fixed-length vector via a
//!    PCA + Gaussian-mixture vocabulary and Fisher-difference encoding
//!    (bag-of-words and VLAD are provided as baselines).
//! 3. **Fusion** ([`fusion`]) — the three per-modality vectors are fed to
//!    a localized multiple-kernel machine (SVR for intensity regression,
//!    one-vs-one SVC for category classification) with a per-sample
//!    softmax gate over modalities.
//!
//! Shared plumbing (manifest ingestion, block grids, metrics, fold plans,
//! the binary feature container) sits at the crate root.

pub mod body;
pub mod container;
pub mod descriptor;
pub mod encoding;
pub mod error;
pub mod face;
pub mod folds;
pub mod fusion;
pub mod geom;
pub mod lbp;
pub mod manifest;
pub mod metrics;
pub mod raster;
pub mod scene;

pub use descriptor::{DescriptorSet, Modality};
pub use error::{Error, Result};
pub use geom::{block_grid, Rect};
pub use manifest::{parse_manifest, GroupImageRecord};

/// Derives a stream-specific seed from a run seed, so that independent
/// random consumers (fold shuffle, subsampling, GMM init, ...) never share
/// a stream. SplitMix64 finalizer.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
