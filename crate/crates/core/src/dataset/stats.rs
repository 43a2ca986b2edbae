use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::manifest::Dataset;
use crate::error::Result;
use crate::exec::Execution;
use crate::pointops::nearest_neighbor_distances;
use crate::procgen::{sample_program_attempt, AugmentationOp};

pub const RADIUS_HIST_RANGE: [f64; 2] = [0.95, 1.05];
pub const RADIUS_HIST_BINS: usize = 10;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RadiusHistogram {
    pub range: [f64; 2],
    pub bins: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl RadiusHistogram {
    fn new() -> Self {
        RadiusHistogram {
            range: RADIUS_HIST_RANGE,
            bins: vec![0; RADIUS_HIST_BINS],
            below: 0,
            above: 0,
        }
    }

    fn add(&mut self, r: f64) {
        let [lo, hi] = self.range;
        if r < lo {
            self.below += 1;
        } else if r >= hi {
            self.above += 1;
        } else {
            let n = self.bins.len();
            let b = ((r - lo) / (hi - lo) * n as f64) as usize;
            self.bins[b.min(n - 1)] += 1;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationHistogram {
    pub none: u64,
    pub boolean_difference: u64,
    pub wireframe: u64,
}

/// Summary of one group of shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub count: u64,
    pub nn_spacing_mean: f64,
    pub nn_spacing_std: f64,
    pub radius_min: f64,
    pub radius_max: f64,
    pub radius_histogram: RadiusHistogram,
    /// Shapes per primitive count, keys `1..=max_primitives`.
    pub primitive_count_histogram: BTreeMap<usize, u64>,
    pub augmentation_histogram: AugmentationHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_shapes: u64,
    pub points_per_shape: u32,
    pub complexity: String,
    pub all: SplitStats,
    pub splits: BTreeMap<String, SplitStats>,
}

#[derive(Debug, Clone, Copy)]
struct ShapeSummary {
    nn_sum: f64,
    nn_sumsq: f64,
    nn_count: u64,
    radius: f64,
    parts: usize,
    augmentation: Option<AugmentationOp>,
}

fn summarize(shapes: impl Iterator<Item = ShapeSummary>, max_primitives: usize) -> SplitStats {
    let mut count = 0u64;
    let (mut sum, mut sumsq, mut n) = (0.0, 0.0, 0u64);
    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut radius_histogram = RadiusHistogram::new();
    let mut primitive_count_histogram: BTreeMap<usize, u64> = (1..=max_primitives).map(|k| (k, 0)).collect();
    let mut augmentation_histogram = AugmentationHistogram::default();
    for s in shapes {
        count += 1;
        sum += s.nn_sum;
        sumsq += s.nn_sumsq;
        n += s.nn_count;
        rmin = rmin.min(s.radius);
        rmax = rmax.max(s.radius);
        radius_histogram.add(s.radius);
        *primitive_count_histogram.entry(s.parts).or_insert(0) += 1;
        match s.augmentation {
            None => augmentation_histogram.none += 1,
            Some(AugmentationOp::BooleanDifference { .. }) => augmentation_histogram.boolean_difference += 1,
            Some(AugmentationOp::Wireframe { .. }) => augmentation_histogram.wireframe += 1,
        }
    }
    let (mean, std) = if n > 0 {
        let mean = sum / n as f64;
        (mean, (sumsq / n as f64 - mean * mean).max(0.0).sqrt())
    } else {
        (0.0, 0.0)
    };
    if count == 0 {
        rmin = 0.0;
        rmax = 0.0;
    }
    SplitStats {
        count,
        nn_spacing_mean: mean,
        nn_spacing_std: std,
        radius_min: rmin,
        radius_max: rmax,
        radius_histogram,
        primitive_count_histogram,
        augmentation_histogram,
    }
}

/// Summary statistics of the whole dataset and of each recorded split.
pub fn stats(dataset: &Dataset) -> Result<DatasetStats> {
    let m = &dataset.manifest;
    let mut shapes = Vec::with_capacity(m.total_shapes as usize);
    for entry in &m.shards {
        let shard = dataset.read_shard(entry)?;
        let summaries = Execution::default().map_range(0..entry.shape_count as usize, |local| {
            let index = entry.first_shape_index + local as u64;
            let points = shard.shape(local);
            let nn = nearest_neighbor_distances(&points);
            let radius = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
            let program = sample_program_attempt(&m.config, index, m.attempt_of(index))?;
            Ok(ShapeSummary {
                nn_sum: nn.iter().sum(),
                nn_sumsq: nn.iter().map(|d| d * d).sum(),
                nn_count: nn.len() as u64,
                radius,
                parts: program.parts.len(),
                augmentation: program.augmentations.first().copied(),
            })
        });
        for s in summaries {
            shapes.push(s?);
        }
    }
    let max_k = m.config.max_primitives();
    let splits = m
        .splits
        .iter()
        .flatten()
        .map(|(name, idx)| (name.clone(), summarize(idx.iter().map(|&i| shapes[i as usize]), max_k)))
        .collect();
    Ok(DatasetStats {
        total_shapes: m.total_shapes,
        points_per_shape: m.points_per_shape,
        complexity: m.config.complexity.name().to_string(),
        all: summarize(shapes.iter().copied(), max_k),
        splits,
    })
}

impl SplitStats {
    fn rows(&self, scope: &str, out: &mut Vec<[String; 3]>) {
        let mut push = |metric: String, value: String| out.push([scope.to_string(), metric, value]);
        push("count".into(), self.count.to_string());
        push("nn_spacing_mean".into(), self.nn_spacing_mean.to_string());
        push("nn_spacing_std".into(), self.nn_spacing_std.to_string());
        push("radius_min".into(), self.radius_min.to_string());
        push("radius_max".into(), self.radius_max.to_string());
        let [lo, hi] = self.radius_histogram.range;
        let width = (hi - lo) / self.radius_histogram.bins.len() as f64;
        push("radius_below".into(), self.radius_histogram.below.to_string());
        for (i, c) in self.radius_histogram.bins.iter().enumerate() {
            push(format!("radius_bin_{:.3}", lo + width * i as f64), c.to_string());
        }
        push("radius_above".into(), self.radius_histogram.above.to_string());
        for (k, c) in &self.primitive_count_histogram {
            push(format!("primitives_{k}"), c.to_string());
        }
        let a = &self.augmentation_histogram;
        push("augmentation_none".into(), a.none.to_string());
        push("augmentation_boolean_difference".into(), a.boolean_difference.to_string());
        push("augmentation_wireframe".into(), a.wireframe.to_string());
    }
}

impl DatasetStats {
    /// Flat `(scope, metric, value)` rows; scope is `dataset`, `all` or
    /// `split:<name>`. Values use round-trip formatting.
    pub fn rows(&self) -> Vec<[String; 3]> {
        let mut out = vec![
            ["dataset".into(), "total_shapes".into(), self.total_shapes.to_string()],
            ["dataset".into(), "points_per_shape".into(), self.points_per_shape.to_string()],
            ["dataset".into(), "complexity".into(), self.complexity.clone()],
        ];
        self.all.rows("all", &mut out);
        for (name, s) in &self.splits {
            s.rows(&format!("split:{name}"), &mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_dataset, split};
    use crate::procgen::{Complexity, GenConfig};

    #[test]
    fn single_primitive_stats() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GenConfig::new(Complexity::SinglePrimitive).with_points(512).with_seed(4);
        build_dataset(&cfg, 12, dir.path(), 1).unwrap();
        let mut ds = Dataset::open(dir.path()).unwrap();
        let fr = [("a".to_string(), 0.5), ("empty".to_string(), 0.0)].into_iter().collect();
        ds.manifest = split(&ds.manifest, &fr, 3).unwrap();
        let s = stats(&ds).unwrap();
        assert_eq!(s.total_shapes, 12);
        assert_eq!(s.all.primitive_count_histogram, BTreeMap::from([(1, 12)]));
        assert_eq!(s.all.augmentation_histogram.none, 12);
        assert!((s.all.radius_min - 1.0).abs() <= 1e-6 && (s.all.radius_max - 1.0).abs() <= 1e-6);
        assert!(s.all.nn_spacing_mean > 0.0 && s.all.nn_spacing_std > 0.0);
        assert_eq!(s.splits["a"].count, 6);
        let empty = &s.splits["empty"];
        assert_eq!(empty.count, 0);
        assert_eq!(empty.nn_spacing_mean, 0.0);
        assert_eq!(empty.radius_max, 0.0);
        assert_eq!(empty.primitive_count_histogram[&1], 0);
        let rows = s.rows();
        assert!(rows.iter().any(|r| r[0] == "split:empty" && r[1] == "count" && r[2] == "0"));
    }

    #[test]
    fn augmented_tier_reports_augmentations() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GenConfig::new(Complexity::Augmented)
            .with_augmentation_probability(1.0)
            .with_points(256)
            .with_seed(8);
        build_dataset(&cfg, 16, dir.path(), 2).unwrap();
        let s = stats(&Dataset::open(dir.path()).unwrap()).unwrap();
        let a = &s.all.augmentation_histogram;
        assert_eq!(a.none, 0);
        assert_eq!(a.boolean_difference + a.wireframe, 16);
    }
}
