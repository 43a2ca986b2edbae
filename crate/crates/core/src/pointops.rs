//! Point-cloud kernels for masked autoencoding: normalization, subsampling,
//! farthest point sampling, KNN patch grouping, random masking, train-time
//! augmentation and the Chamfer-L2 reconstruction metric.
//!
//! Every stochastic operation takes an explicit seed. Ties in FPS and KNN
//! are broken by lower point index.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::primitives::Vec3;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormMeta {
    pub centroid: Vec3,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub norm_meta: Option<NormMeta>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointCloud {
            points,
            norm_meta: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Validation("point cloud is empty".into()));
        }
        check_finite(&self.points)
    }
}

fn check_finite(points: &[Vec3]) -> Result<()> {
    match points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        Some(i) => Err(Error::Validation(format!("non-finite coordinate at point {i}"))),
        None => Ok(()),
    }
}

#[inline]
fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let (dx, dy, dz) = (a.x - b.x, a.y - b.y, a.z - b.z);
    dx * dx + dy * dy + dz * dz
}

/// Centers the cloud on its centroid and scales it into the unit ball.
pub fn normalize(cloud: &PointCloud) -> Result<PointCloud> {
    cloud.validate()?;
    let n = cloud.points.len() as f64;
    let centroid = cloud.points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    let max = cloud
        .points
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0, f64::max);
    let scale = if max > 0.0 { max } else { 1.0 };
    Ok(PointCloud {
        points: cloud.points.iter().map(|p| (p - centroid) / scale).collect(),
        norm_meta: Some(NormMeta { centroid, scale }),
    })
}

/// Sorted indices of `p` points drawn uniformly without replacement.
pub fn subsample_indices(n: usize, p: usize, seed: u64) -> Result<Vec<usize>> {
    if p > n {
        return Err(Error::Size {
            what: "subsample points",
            requested: p,
            available: n,
        });
    }
    let mut idx = rand::seq::index::sample(&mut seed::rng(seed), n, p).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// `p` points chosen uniformly without replacement, in source order.
pub fn subsample(cloud: &PointCloud, p: usize, seed: u64) -> Result<PointCloud> {
    if p == cloud.len() {
        return Ok(cloud.clone());
    }
    let idx = subsample_indices(cloud.len(), p, seed)?;
    Ok(PointCloud::new(idx.iter().map(|&i| cloud.points[i]).collect()))
}

/// Greedy farthest point sampling starting from `start_index`; indices are
/// returned in pick order.
pub fn farthest_point_sample(points: &[Vec3], n: usize, start_index: usize) -> Result<Vec<usize>> {
    let total = points.len();
    if n > total {
        return Err(Error::Size {
            what: "fps centers",
            requested: n,
            available: total,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if start_index >= total {
        return Err(Error::param("start_index", format!("{start_index} out of range for {total} points")));
    }
    let mut picked = vec![false; total];
    let mut min_d = vec![f64::INFINITY; total];
    let mut order = Vec::with_capacity(n);
    let mut current = start_index;
    for _ in 0..n {
        order.push(current);
        picked[current] = true;
        let c = points[current];
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, &c);
            if d < min_d[i] {
                min_d[i] = d;
            }
            if !picked[i] && min_d[i] > best_d {
                best_d = min_d[i];
                best = i;
            }
        }
        current = best;
    }
    Ok(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchParams {
    pub input_points: usize,
    pub num_patches: usize,
    pub group_size: usize,
    pub mask_ratio: f64,
}

impl Default for PatchParams {
    fn default() -> Self {
        PatchParams {
            input_points: 1024,
            num_patches: 64,
            group_size: 32,
            mask_ratio: 0.6,
        }
    }
}

impl PatchParams {
    /// Settings used for part segmentation.
    pub fn segmentation() -> Self {
        PatchParams {
            input_points: 2048,
            num_patches: 128,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_points == 0 || self.num_patches == 0 || self.group_size == 0 {
            return Err(Error::param("patch", "points, patches and group size must be positive"));
        }
        if self.num_patches > self.input_points {
            return Err(Error::param(
                "patches",
                format!("{} patches exceed {} input points", self.num_patches, self.input_points),
            ));
        }
        if self.group_size > self.input_points {
            return Err(Error::param(
                "group_size",
                format!("{} exceeds {} input points", self.group_size, self.input_points),
            ));
        }
        check_ratio(self.mask_ratio)
    }

    pub fn masked_count(&self) -> usize {
        masked_count(self.mask_ratio, self.num_patches)
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if (0.0..=1.0).contains(&ratio) {
        Ok(())
    } else {
        Err(Error::param("mask_ratio", format!("must lie in [0, 1], got {ratio}")))
    }
}

/// Number of masked patches: `floor(ratio * n)`, evaluated with a 1e-9
/// allowance so decimal ratios such as 0.29 of 100 yield 29.
pub fn masked_count(ratio: f64, n: usize) -> usize {
    (((ratio * n as f64) + 1e-9).floor() as usize).min(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub centers: Vec<Vec3>,
    pub center_indices: Vec<usize>,
    /// Source indices of each group, nearest first.
    pub group_indices: Vec<Vec<usize>>,
    /// Group members relative to their center, same order as `group_indices`.
    pub groups: Vec<Vec<Vec3>>,
    pub mask: Vec<bool>,
}

impl PatchSet {
    pub fn num_patches(&self) -> usize {
        self.centers.len()
    }

    pub fn group_size(&self) -> usize {
        self.groups.first().map_or(0, Vec::len)
    }

    pub fn masked(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Indices of the `k` nearest points to `center`, nearest first, ties by
/// lower index.
pub fn knn_indices(points: &[Vec3], center: &Vec3, k: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (dist2(p, center), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < order.len() {
        order.select_nth_unstable_by(k, cmp);
        order.truncate(k);
    }
    order.sort_unstable_by(cmp);
    order.into_iter().map(|(_, i)| i).collect()
}

/// Groups the `k` nearest neighbors of each center; the mask starts empty.
pub fn knn_group(points: &[Vec3], center_indices: &[usize], k: usize) -> Result<PatchSet> {
    knn_group_with(points, center_indices, k, Execution::default())
}

pub fn knn_group_with(
    points: &[Vec3],
    center_indices: &[usize],
    k: usize,
    exec: Execution,
) -> Result<PatchSet> {
    if k > points.len() {
        return Err(Error::Size {
            what: "knn group size",
            requested: k,
            available: points.len(),
        });
    }
    if let Some(&bad) = center_indices.iter().find(|&&c| c >= points.len()) {
        return Err(Error::param("center_indices", format!("{bad} out of range")));
    }
    let group_indices = exec.map_slice(center_indices, |&c| knn_indices(points, &points[c], k));
    let centers: Vec<Vec3> = center_indices.iter().map(|&c| points[c]).collect();
    let groups = group_indices
        .iter()
        .zip(&centers)
        .map(|(g, c)| g.iter().map(|&i| points[i] - c).collect())
        .collect();
    Ok(PatchSet {
        mask: vec![false; centers.len()],
        centers,
        center_indices: center_indices.to_vec(),
        group_indices,
        groups,
    })
}

/// Masks exactly `masked_count(ratio, n)` patches chosen uniformly.
pub fn random_mask(patches: &PatchSet, mask_ratio: f64, seed: u64) -> Result<PatchSet> {
    check_ratio(mask_ratio)?;
    let n = patches.num_patches();
    let mut mask = vec![false; n];
    for i in rand::seq::index::sample(&mut seed::rng(seed), n, masked_count(mask_ratio, n)) {
        mask[i] = true;
    }
    Ok(PatchSet {
        mask,
        ..patches.clone()
    })
}

/// Subsample, normalize, FPS from index 0, KNN-group and mask.
pub fn patchify(cloud: &PointCloud, params: &PatchParams, seed: u64) -> Result<PatchSet> {
    params.validate()?;
    let sub = subsample(cloud, params.input_points, seed::derive(seed, &[0]))?;
    let sub = normalize(&sub)?;
    let centers = farthest_point_sample(&sub.points, params.num_patches, 0)?;
    let patches = knn_group(&sub.points, &centers, params.group_size)?;
    random_mask(&patches, params.mask_ratio, seed::derive(seed, &[1]))
}

pub const DEFAULT_SCALE_RANGE: [f64; 2] = [2.0 / 3.0, 1.5];
pub const DEFAULT_TRANSLATE_RANGE: [f64; 2] = [-0.2, 0.2];

fn uniform(rng: &mut seed::Rng, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}

/// Uniform scalar scale about the origin, then per-axis translation.
pub fn augment_scale_translate(
    cloud: &PointCloud,
    seed: u64,
    scale_range: [f64; 2],
    translate_range: [f64; 2],
) -> Result<PointCloud> {
    for (name, r) in [("scale_range", scale_range), ("translate_range", translate_range)] {
        if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
            return Err(Error::param(name, format!("invalid range {r:?}")));
        }
    }
    if scale_range[0] <= 0.0 {
        return Err(Error::param("scale_range", "scale must be positive"));
    }
    let mut rng = seed::rng(seed);
    let s = uniform(&mut rng, scale_range);
    let t = Vec3::new(
        uniform(&mut rng, translate_range),
        uniform(&mut rng, translate_range),
        uniform(&mut rng, translate_range),
    );
    Ok(PointCloud::new(cloud.points.iter().map(|p| p * s + t).collect()))
}

/// Mean over `from` of the squared distance to the nearest point of `to`.
fn directed_term(from: &[Vec3], to: &[Vec3], exec: Execution) -> f64 {
    let mins = exec.map_slice(from, |a| to.iter().map(|b| dist2(a, b)).fold(f64::INFINITY, f64::min));
    mins.iter().sum::<f64>() / from.len() as f64
}

/// Symmetric Chamfer-L2: squared nearest-neighbor distances averaged per
/// side, the two sides summed.
pub fn chamfer_l2(pred: &[Vec3], gt: &[Vec3]) -> Result<f64> {
    chamfer_l2_with(pred, gt, Execution::default())
}

pub fn chamfer_l2_with(pred: &[Vec3], gt: &[Vec3], exec: Execution) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::Validation("chamfer distance of an empty point set".into()));
    }
    check_finite(pred)?;
    check_finite(gt)?;
    Ok(directed_term(pred, gt, exec) + directed_term(gt, pred, exec))
}

/// Distance from every point to its nearest other point (exact; uniform
/// grid acceleration). Single-point clouds yield `[0.0]`.
pub fn nearest_neighbor_distances(points: &[Vec3]) -> Vec<f64> {
    let n = points.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = (hi - lo).max().max(1e-12);
    let dim = ((n as f64 / 2.0).cbrt().ceil() as usize).clamp(1, 128);
    let cell = extent / dim as f64;
    let coord = |v: f64, l: f64| (((v - l) / cell) as usize).min(dim - 1);
    let key = |p: &Vec3| [coord(p.x, lo.x), coord(p.y, lo.y), coord(p.z, lo.z)];
    let flat = |c: [usize; 3]| (c[0] * dim + c[1]) * dim + c[2];

    let mut starts = vec![0usize; dim * dim * dim + 1];
    for p in points {
        starts[flat(key(p)) + 1] += 1;
    }
    for i in 1..starts.len() {
        starts[i] += starts[i - 1];
    }
    let mut fill = starts.clone();
    let mut members = vec![0usize; n];
    for (i, p) in points.iter().enumerate() {
        let f = flat(key(p));
        members[fill[f]] = i;
        fill[f] += 1;
    }

    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let c = key(p);
            let mut best = f64::INFINITY;
            let mut ring = 0usize;
            loop {
                let lo_c = c.map(|v| v.saturating_sub(ring));
                let hi_c = c.map(|v| (v + ring).min(dim - 1));
                for x in lo_c[0]..=hi_c[0] {
                    for y in lo_c[1]..=hi_c[1] {
                        for z in lo_c[2]..=hi_c[2] {
                            let on_shell = [x, y, z]
                                .iter()
                                .zip(c.iter())
                                .any(|(&v, &cv)| v.abs_diff(cv) == ring);
                            if !on_shell {
                                continue;
                            }
                            let f = flat([x, y, z]);
                            for &j in &members[starts[f]..starts[f + 1]] {
                                if j != i {
                                    best = best.min(dist2(p, &points[j]));
                                }
                            }
                        }
                    }
                }
                // Any point outside the searched cube is at least `ring * cell` away.
                let reach = ring as f64 * cell;
                if best <= reach * reach || ring >= dim {
                    break;
                }
                ring += 1;
            }
            best.sqrt()
        })
        .collect()
}
