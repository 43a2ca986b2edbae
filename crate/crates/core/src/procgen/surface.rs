use rand::Rng as _;

use super::program::{realize, Role, ShapeProgram, Solid};
use crate::error::{Error, Result};
use crate::pointops::{normalize, PointCloud};
use crate::primitives::{Membership, Vec3};
use crate::seed;

/// Candidate count after which the acceptance rate is checked.
pub const DEGENERACY_CANDIDATES: u64 = 10_000_000;
/// Minimum acceptance rate a program must reach by that point.
pub const DEGENERACY_MIN_RATE: f64 = 1e-4;

/// Surface points before normalization, with the program part each point
/// was accepted from.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSurfaceSample {
    pub points: Vec<Vec3>,
    pub part_labels: Vec<u32>,
    pub candidates: u64,
}

fn classify(solid: &Solid, p: &Vec3) -> Membership {
    solid.primitive.membership_with_bounds(p, &solid.bounds)
}

/// True when `p`, drawn on the surface of `solids[source]`, lies on the
/// boundary of the composite solid: the union of ordinary solids together
/// with minuend minus subtrahend.
pub fn accepts(solids: &[Solid], source: usize, p: &Vec3) -> bool {
    let inside_ordinary = |skip: usize| {
        solids
            .iter()
            .enumerate()
            .any(|(i, s)| i != skip && s.role == Role::Ordinary && classify(s, p) == Membership::Inside)
    };
    match solids[source].role {
        Role::Ordinary => {
            if inside_ordinary(source) {
                return false;
            }
            // Not strictly inside any minuend-minus-subtrahend region.
            !solids.iter().any(|s| match s.role {
                Role::Minuend(sub) => {
                    classify(s, p) == Membership::Inside && classify(&solids[sub], p) == Membership::Outside
                }
                _ => false,
            })
        }
        Role::Minuend(sub) => classify(&solids[sub], p) != Membership::Inside && !inside_ordinary(source),
        Role::Subtrahend(min) => classify(&solids[min], p) == Membership::Inside && !inside_ordinary(source),
    }
}

/// Rejection-samples `n` points on the composite surface without normalizing.
pub fn sample_surface_raw(program: &ShapeProgram, n: usize) -> Result<RawSurfaceSample> {
    if n == 0 {
        return Err(Error::param("points_per_shape", "must be >= 1"));
    }
    let solids = realize(program)?;
    let prefix: Vec<f64> = solids
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s.mesh.surface_area();
            Some(*acc)
        })
        .collect();
    let total = prefix.last().copied().unwrap_or(0.0);
    if !(total > 0.0) {
        return Err(Error::Degenerate {
            seed: program.seed,
            reason: "program has zero surface area".into(),
        });
    }

    let mut rng = seed::rng(seed::derive(program.seed, &[seed::STREAM_SURFACE]));
    let mut points = Vec::with_capacity(n);
    let mut part_labels = Vec::with_capacity(n);
    let mut candidates = 0u64;
    while points.len() < n {
        candidates += 1;
        if candidates == DEGENERACY_CANDIDATES
            && (points.len() as f64) < DEGENERACY_MIN_RATE * candidates as f64
        {
            return Err(Error::Degenerate {
                seed: program.seed,
                reason: format!(
                    "acceptance rate {} / {candidates} below {DEGENERACY_MIN_RATE}",
                    points.len()
                ),
            });
        }
        let target = rng.random::<f64>() * total;
        let s = prefix.partition_point(|&c| c <= target).min(solids.len() - 1);
        let local = target - if s == 0 { 0.0 } else { prefix[s - 1] };
        let tri = solids[s].mesh.locate_area(local.max(0.0));
        let (r1, r2) = (rng.random::<f64>(), rng.random::<f64>());
        let sq = r1.sqrt();
        let p = solids[s].surface_point(tri, [1.0 - sq, sq * (1.0 - r2), sq * r2]);
        if accepts(&solids, s, &p) {
            points.push(p);
            part_labels.push(solids[s].part as u32);
        }
    }
    Ok(RawSurfaceSample {
        points,
        part_labels,
        candidates,
    })
}

/// `n` uniform points on the composite surface, normalized into the unit ball.
pub fn sample_surface_points(program: &ShapeProgram, n: usize) -> Result<PointCloud> {
    let raw = sample_surface_raw(program, n)?;
    normalize(&PointCloud::new(raw.points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{AffineTransform, PlacedPrimitive, PrimitiveParams};
    use crate::procgen::AugmentationOp;

    fn placed(params: PrimitiveParams, t: Vec3) -> PlacedPrimitive {
        PlacedPrimitive::new(params, AffineTransform::translation_only(t)).unwrap()
    }

    #[test]
    fn unit_sphere_points_lie_on_radius_one() {
        let prog = ShapeProgram::from_parts(vec![placed(PrimitiveParams::Sphere { radius: 1.0 }, Vec3::zeros())], vec![], 3)
            .unwrap()
            .with_resolution(128);
        let raw = sample_surface_raw(&prog, 8192).unwrap();
        assert_eq!(raw.points.len(), 8192);
        assert_eq!(raw.candidates, 8192);
        assert!(raw.points.iter().all(|p| (p.norm() - 1.0).abs() <= 1e-3));
        let norm = sample_surface_points(&prog, 8192).unwrap();
        let max = norm.points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_minus_inner_sphere_has_cavity_wall() {
        let cube = placed(PrimitiveParams::Cube { half_extent: 1.0 }, Vec3::zeros());
        let ball = placed(PrimitiveParams::Sphere { radius: 0.5 }, Vec3::zeros());
        let prog = ShapeProgram::from_parts(
            vec![cube, ball],
            vec![AugmentationOp::BooleanDifference { minuend: 0, subtrahend: 1 }],
            9,
        )
        .unwrap();
        let raw = sample_surface_raw(&prog, 4096).unwrap();
        let wall = raw.points.iter().filter(|p| (p.norm() - 0.5).abs() < 2e-3).count();
        let wall_labels = raw.part_labels.iter().filter(|&&l| l == 1).count();
        assert!(wall > 0);
        assert_eq!(wall, wall_labels);
        assert!(raw.points.iter().all(|p| ball.membership(p) != Membership::Inside));
        // Area ratio: sphere 4pi(0.25) against cube 24.
        let expected = 4096.0 * std::f64::consts::PI / (24.0 + std::f64::consts::PI);
        assert!((wall as f64 - expected).abs() < 4.0 * expected.sqrt(), "{wall} vs {expected}");
    }

    #[test]
    fn disjoint_cubes_split_evenly() {
        let n = 8192usize;
        let a = placed(PrimitiveParams::Cube { half_extent: 0.5 }, Vec3::new(-2.0, 0.0, 0.0));
        let b = placed(PrimitiveParams::Cube { half_extent: 0.5 }, Vec3::new(2.0, 0.0, 0.0));
        let prog = ShapeProgram::from_parts(vec![a, b], vec![], 17).unwrap();
        let raw = sample_surface_raw(&prog, n).unwrap();
        let left = raw.part_labels.iter().filter(|&&l| l == 0).count() as f64;
        let tol = 3.0 * (n as f64 / 4.0).sqrt();
        assert!((left - n as f64 / 2.0).abs() <= tol, "{left}");
    }

    #[test]
    fn union_removes_buried_surface() {
        let big = placed(PrimitiveParams::Sphere { radius: 1.0 }, Vec3::zeros());
        let small = placed(PrimitiveParams::Cube { half_extent: 0.2 }, Vec3::zeros());
        let prog = ShapeProgram::from_parts(vec![big, small], vec![], 2).unwrap();
        let raw = sample_surface_raw(&prog, 2000).unwrap();
        assert!(raw.part_labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn swallowed_minuend_is_degenerate() {
        let small = placed(PrimitiveParams::Cube { half_extent: 0.2 }, Vec3::zeros());
        let big = placed(PrimitiveParams::Sphere { radius: 1.0 }, Vec3::zeros());
        let prog = ShapeProgram::from_parts(
            vec![small, big],
            vec![AugmentationOp::BooleanDifference { minuend: 0, subtrahend: 1 }],
            0xabc,
        )
        .unwrap();
        match sample_surface_raw(&prog, 16) {
            Err(Error::Degenerate { seed, .. }) => assert_eq!(seed, 0xabc),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = crate::procgen::GenConfig::default().with_seed(3).with_augmentation_probability(1.0);
        for i in 0..5 {
            let prog = crate::procgen::sample_program(&cfg, i).unwrap();
            let Ok(a) = sample_surface_points(&prog, 512) else { continue };
            let b = sample_surface_points(&prog, 512).unwrap();
            assert_eq!(a, b);
        }
    }
}
