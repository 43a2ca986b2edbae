use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{self, Shard};
use crate::pointops::PointCloud;
use crate::procgen::GenConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShardEntry {
    pub file: String,
    pub first_shape_index: u64,
    pub shape_count: u32,
    pub byte_length: u64,
    /// FNV-1a 64 footer value, as 16 hex digits.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub config: GenConfig,
    pub config_hash: String,
    pub shards: Vec<ShardEntry>,
    pub total_shapes: u64,
    pub points_per_shape: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<BTreeMap<String, Vec<u64>>>,
    /// Shapes whose first program was degenerate, with the attempt that succeeded.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fallback_attempts: BTreeMap<u64, u32>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let sum: u64 = self.shards.iter().map(|s| s.shape_count as u64).sum();
        if sum != self.total_shapes {
            return Err(Error::Validation(format!(
                "shard counts sum to {sum}, manifest declares {}",
                self.total_shapes
            )));
        }
        let mut next = 0;
        for s in &self.shards {
            if s.first_shape_index != next {
                return Err(Error::Validation(format!("shard {} starts at {}, expected {next}", s.file, s.first_shape_index)));
            }
            next += s.shape_count as u64;
        }
        if let Some(splits) = &self.splits {
            let mut seen = vec![false; self.total_shapes as usize];
            for (name, idx) in splits {
                for &i in idx {
                    let slot = seen
                        .get_mut(i as usize)
                        .ok_or_else(|| Error::Validation(format!("split {name} holds index {i} >= {}", self.total_shapes)))?;
                    if std::mem::replace(slot, true) {
                        return Err(Error::Validation(format!("index {i} appears in more than one split")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("manifest serializes");
        v.push(b'\n');
        v
    }

    /// FNV-1a 64 of the manifest's JSON bytes.
    pub fn content_hash(&self) -> u64 {
        formats::fnv1a64(&self.to_json())
    }

    /// Shard holding `index`, with the index's offset inside it.
    pub fn locate(&self, index: u64) -> Option<(&ShardEntry, usize)> {
        let i = self
            .shards
            .partition_point(|s| s.first_shape_index + s.shape_count as u64 <= index);
        self.shards
            .get(i)
            .filter(|s| index >= s.first_shape_index)
            .map(|s| (s, (index - s.first_shape_index) as usize))
    }

    /// Resolves the program attempt that produced `index`.
    pub fn attempt_of(&self, index: u64) -> u32 {
        self.fallback_attempts.get(&index).copied().unwrap_or(0)
    }
}

/// A dataset directory and its manifest.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl Dataset {
    /// Opens a dataset from its directory or its manifest file.
    pub fn open(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let (root, manifest_path) = if path.is_dir() {
            (path.to_path_buf(), path.join(MANIFEST_FILE))
        } else {
            (path.parent().unwrap_or(Path::new(".")).to_path_buf(), path.to_path_buf())
        };
        let bytes = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: DatasetManifest = serde_json::from_slice(&bytes).map_err(|source| Error::Json {
            path: manifest_path.clone(),
            source,
        })?;
        manifest.validate()?;
        manifest.config.validate()?;
        Ok(Dataset { root, manifest })
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    /// Atomically rewrites the manifest.
    pub fn save_manifest(&self) -> Result<()> {
        self.manifest.validate()?;
        write_atomic(&self.manifest_path(), &self.manifest.to_json())
    }

    /// Reads and verifies one shard against its manifest entry.
    pub fn read_shard(&self, entry: &ShardEntry) -> Result<Shard> {
        let path = self.root.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() as u64 != entry.byte_length {
            return Err(Error::corrupt(
                &path,
                format!("length {} differs from manifest {}", bytes.len(), entry.byte_length),
            ));
        }
        let shard = Shard::decode(&bytes, &path)?;
        let footer = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
        if format!("{footer:016x}") != entry.checksum {
            return Err(Error::corrupt(&path, "checksum differs from manifest"));
        }
        if shard.header.first_shape_index != entry.first_shape_index
            || shard.header.shape_count != entry.shape_count
            || shard.header.points_per_shape != self.manifest.points_per_shape
        {
            return Err(Error::corrupt(&path, "shard header disagrees with manifest"));
        }
        Ok(shard)
    }

    /// Clouds for `indices`, in request order.
    pub fn read_shapes(&self, indices: &[u64]) -> Result<Vec<PointCloud>> {
        let mut out: Vec<Option<PointCloud>> = vec![None; indices.len()];
        let mut by_shard: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for (slot, &index) in indices.iter().enumerate() {
            let (entry, local) = self.manifest.locate(index).ok_or_else(|| {
                Error::param("index", format!("{index} out of range for {} shapes", self.manifest.total_shapes))
            })?;
            let shard_no = self.manifest.shards.iter().position(|s| s == entry).unwrap();
            by_shard.entry(shard_no).or_default().push((slot, local));
        }
        for (shard_no, wanted) in by_shard {
            let shard = self.read_shard(&self.manifest.shards[shard_no])?;
            for (slot, local) in wanted {
                out[slot] = Some(PointCloud::new(shard.shape(local)));
            }
        }
        Ok(out.into_iter().map(Option::unwrap).collect())
    }

    pub fn read_shape(&self, index: u64) -> Result<PointCloud> {
        Ok(self.read_shapes(&[index])?.remove(0))
    }
}
