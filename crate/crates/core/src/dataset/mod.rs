//! Sharded on-disk datasets: deterministic parallel construction, verified
//! reads, split assignment and summary statistics.

mod build;
mod manifest;
mod split;
mod stats;

pub use build::{build_dataset, build_dataset_with, generate_shape, GeneratedShape, MAX_FALLBACKS, SHARD_SIZE};
pub use manifest::{Dataset, DatasetManifest, ShardEntry, MANIFEST_FILE};
pub use split::split;
pub use stats::{stats, AugmentationHistogram, DatasetStats, RadiusHistogram, SplitStats};
