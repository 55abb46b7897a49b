//! Core primitives for building aerial spatial-reasoning QA datasets.
//!
//! Everything in this crate is pure computation over in-memory buffers and is
//! `no_std` compatible (it needs `alloc`). File formats, HTTP and the command
//! line live in the `skyforge` crate.
//!
//! The pipeline, bottom-up:
//!
//! - [`scene`]: frame types (image, semantic mask, LiDAR cloud, camera, pose).
//! - [`geometry`]: connected-component instances, in-mask sampling, free space,
//!   eight-way spatial relations.
//! - [`projection`]: LiDAR to camera to image, per-object depth and world height.
//! - [`color`]: dominant color descriptors from an HSV histogram.
//! - [`qa`]: question templates, per-task generators, answer tags, benchmark
//!   curation.
//! - [`metrics`]: answer parsing, IoU, pointing accuracy, BLEU, judge scoring,
//!   report aggregation.
//! - [`rewards`]: SFT loss, point/choice/box rewards, GRPO objective.
//! - [`synth`]: procedural scenes with closed-form ground truth.
//! - [`responder`]: offline oracle/random answerers used for evaluation runs.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod catalog;
pub mod color;
pub mod geometry;
pub mod linalg;
pub mod metrics;
pub mod projection;
pub mod qa;
pub mod responder;
pub mod rewards;
pub mod rng;
pub mod scene;
pub mod synth;

pub use geometry::{Connectivity, RelationClass};
pub use scene::{
    BBox, CameraModel, ObjectInstance, Pixel, PointCloud, PoseTransform, RgbImage, SceneFrame,
    SemanticMask,
};
