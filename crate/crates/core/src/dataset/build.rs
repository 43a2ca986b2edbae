use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::manifest::{write_atomic, DatasetManifest, ShardEntry, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::exec::{with_workers, Execution};
use crate::formats::{self, ShardHeader, FORMAT_VERSION};
use crate::pointops::PointCloud;
use crate::procgen::{sample_program_attempt, sample_surface_points, GenConfig, ShapeProgram};

/// Shapes per shard file.
pub const SHARD_SIZE: u64 = 1024;
/// Resampling attempts after a degenerate first program.
pub const MAX_FALLBACKS: u32 = 8;

#[derive(Debug, Clone)]
pub struct GeneratedShape {
    pub program: ShapeProgram,
    pub cloud: PointCloud,
    pub attempt: u32,
}

/// Generates shape `shape_index`, walking the deterministic fallback chain
/// when a program turns out degenerate.
pub fn generate_shape(config: &GenConfig, shape_index: u64) -> Result<GeneratedShape> {
    let mut last = String::new();
    for attempt in 0..=MAX_FALLBACKS {
        let program = sample_program_attempt(config, shape_index, attempt)?;
        match sample_surface_points(&program, config.points_per_shape) {
            Ok(cloud) => {
                return Ok(GeneratedShape {
                    program,
                    cloud,
                    attempt,
                })
            }
            Err(e @ Error::Degenerate { .. }) => last = e.to_string(),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generation {
        shape_index,
        attempts: MAX_FALLBACKS + 1,
        reason: last,
    })
}

fn shard_name(n: u64) -> String {
    format!("shard_{n:05}.pgpc")
}

/// Builds `count` shapes into `out_dir` using `workers` threads.
pub fn build_dataset(config: &GenConfig, count: u64, out_dir: &Path, workers: usize) -> Result<DatasetManifest> {
    let exec = if workers > 1 { Execution::Parallel } else { Execution::Sequential };
    with_workers(workers, || build_dataset_with(config, count, out_dir, exec, |_, _| {}))
}

/// Like [`build_dataset`] on the current thread pool, reporting
/// `(shapes_done, total)` after each shard.
pub fn build_dataset_with(
    config: &GenConfig,
    count: u64,
    out_dir: &Path,
    exec: Execution,
    mut progress: impl FnMut(u64, u64),
) -> Result<DatasetManifest> {
    config.validate()?;
    if count == 0 {
        return Err(Error::param("count", "must be >= 1"));
    }
    let points = u32::try_from(config.points_per_shape)
        .map_err(|_| Error::param("points_per_shape", "exceeds the shard format's u32 range"))?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        let mut shards = Vec::new();
        let mut fallback_attempts = BTreeMap::new();
        let shard_count = count.div_ceil(SHARD_SIZE);
        for s in 0..shard_count {
            let first = s * SHARD_SIZE;
            let n = SHARD_SIZE.min(count - first);
            let generated = exec.map_range(0..n as usize, |local| {
                let index = first + local as u64;
                generate_shape(config, index)
                    .map(|g| (formats::encode_shape_payload(&g.cloud.points), g.attempt))
            });
            let mut payloads = Vec::with_capacity(n as usize);
            for (local, g) in generated.into_iter().enumerate() {
                let (bytes, attempt) = g?;
                if attempt > 0 {
                    fallback_attempts.insert(first + local as u64, attempt);
                }
                payloads.push(bytes);
            }
            let header = ShardHeader {
                shape_count: n as u32,
                points_per_shape: points,
                first_shape_index: first,
            };
            let bytes = formats::encode_shard(&header, &payloads)?;
            let file = shard_name(s);
            let path = out_dir.join(&file);
            write_atomic(&path, &bytes)?;
            written.push(path);
            let footer = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
            shards.push(ShardEntry {
                file,
                first_shape_index: first,
                shape_count: n as u32,
                byte_length: bytes.len() as u64,
                checksum: format!("{footer:016x}"),
            });
            progress(first + n, count);
        }
        let manifest = DatasetManifest {
            format_version: FORMAT_VERSION,
            config: config.resolved(),
            config_hash: config.config_id(),
            shards,
            total_shapes: count,
            points_per_shape: points,
            splits: None,
            fallback_attempts,
        };
        write_atomic(&out_dir.join(MANIFEST_FILE), &manifest.to_json())?;
        Ok(manifest)
    })();
    if result.is_err() {
        for p in written {
            let _ = fs::remove_file(p);
        }
    }
    result
}
