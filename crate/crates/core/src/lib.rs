//! Deterministic procedural 3D shape factory.
//!
//! Shapes are composed from five analytic primitives under random affine
//! placement, optionally augmented with a boolean difference or a wireframe
//! conversion, and sampled uniformly on the composite surface. Alongside the
//! generator live the point-cloud kernels used by masked autoencoding
//! (normalization, subsampling, farthest point sampling, KNN patching,
//! masking, Chamfer-L2) and a sharded on-disk dataset format.

pub mod error;
pub mod exec;
pub mod primitives;
pub mod seed;

pub use error::{Error, Result};
pub use exec::Execution;
pub mod formats;
pub mod pointops;
pub mod procgen;
pub mod dataset;
pub mod cli;
