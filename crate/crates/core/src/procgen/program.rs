use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::GenConfig;
use crate::error::{Error, Result};
use crate::primitives::{
    rotation_aligning_z, rotation_from_quaternion, unit_mesh, AffineTransform, PlacedPrimitive,
    PrimitiveKind, PrimitiveParams, TriangleMesh, Vec3,
};
use crate::seed;

/// Resolution of the tessellation whose edges become wireframe tubes.
pub const WIREFRAME_SOURCE_RESOLUTION: usize = 16;
/// Segments around each wireframe tube.
pub const TUBE_RESOLUTION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugmentationOp {
    BooleanDifference { minuend: usize, subtrahend: usize },
    Wireframe { part: usize, tube_radius: f64 },
}

/// Deterministic recipe for one synthetic shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeProgram {
    pub parts: Vec<PlacedPrimitive>,
    pub augmentations: Vec<AugmentationOp>,
    pub seed: u64,
    pub config_id: String,
    pub resolution: usize,
}

impl ShapeProgram {
    /// Program of explicit parts; the seed keys surface sampling.
    pub fn from_parts(parts: Vec<PlacedPrimitive>, augmentations: Vec<AugmentationOp>, seed: u64) -> Result<Self> {
        let p = ShapeProgram {
            parts,
            augmentations,
            seed,
            config_id: String::from("manual"),
            resolution: crate::primitives::DEFAULT_RESOLUTION,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.parts.len();
        if k == 0 {
            return Err(Error::Validation("program has no parts".into()));
        }
        for p in &self.parts {
            p.params.validate()?;
        }
        let mut used = vec![false; k];
        let mut claim = |i: usize| -> Result<()> {
            if i >= k {
                return Err(Error::Validation(format!("augmentation references part {i} of {k}")));
            }
            if std::mem::replace(&mut used[i], true) {
                return Err(Error::Validation(format!("part {i} is used by more than one augmentation")));
            }
            Ok(())
        };
        for op in &self.augmentations {
            match *op {
                AugmentationOp::BooleanDifference { minuend, subtrahend } => {
                    if minuend == subtrahend {
                        return Err(Error::Validation("boolean difference of a part with itself".into()));
                    }
                    claim(minuend)?;
                    claim(subtrahend)?;
                }
                AugmentationOp::Wireframe { part, tube_radius } => {
                    claim(part)?;
                    if !(tube_radius.is_finite() && tube_radius > 0.0) {
                        return Err(Error::param("tube_radius", format!("must be > 0, got {tube_radius}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn has_boolean_difference(&self) -> bool {
        self.augmentations
            .iter()
            .any(|op| matches!(op, AugmentationOp::BooleanDifference { .. }))
    }

    pub fn has_wireframe(&self) -> bool {
        self.augmentations
            .iter()
            .any(|op| matches!(op, AugmentationOp::Wireframe { .. }))
    }
}

/// Seed of the program for `shape_index` at fallback `attempt`.
pub fn program_seed(master_seed: u64, shape_index: u64, attempt: u32) -> u64 {
    seed::derive(master_seed, &[shape_index, attempt as u64])
}

fn uniform(rng: &mut seed::Rng, r: [f64; 2]) -> f64 {
    r[0] + (r[1] - r[0]) * rng.random::<f64>()
}

fn index(rng: &mut seed::Rng, n: usize) -> usize {
    rng.random_range(0..n as u32) as usize
}

/// Canonical sizes before placement; per-axis scale supplies the variety.
fn canonical_params(kind: PrimitiveKind, rng: &mut seed::Rng, config: &GenConfig) -> PrimitiveParams {
    match kind {
        PrimitiveKind::Cube => PrimitiveParams::Cube { half_extent: 0.5 },
        PrimitiveKind::Sphere => PrimitiveParams::Sphere { radius: 0.5 },
        PrimitiveKind::Cylinder => PrimitiveParams::Cylinder {
            radius: 0.5,
            half_height: 0.5,
        },
        PrimitiveKind::Cone => PrimitiveParams::Cone {
            radius: 0.5,
            height: 1.0,
        },
        PrimitiveKind::Torus => PrimitiveParams::Torus {
            major_radius: 0.5,
            minor_radius: 0.5 * uniform(rng, config.torus_minor_ratio),
        },
    }
}

/// Uniform rotation over SO(3) from three uniforms (Shoemake).
fn random_rotation(rng: &mut seed::Rng) -> nalgebra::Matrix3<f64> {
    use std::f64::consts::TAU;
    let (u1, u2, u3) = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    rotation_from_quaternion(
        b * libm::cos(TAU * u3),
        a * libm::sin(TAU * u2),
        a * libm::cos(TAU * u2),
        b * libm::sin(TAU * u3),
    )
}

/// Samples the program for `shape_index` (first attempt).
pub fn sample_program(config: &GenConfig, shape_index: u64) -> Result<ShapeProgram> {
    sample_program_attempt(config, shape_index, 0)
}

/// Samples the program for `shape_index` at a given fallback attempt.
pub fn sample_program_attempt(config: &GenConfig, shape_index: u64, attempt: u32) -> Result<ShapeProgram> {
    config.validate()?;
    let seed = program_seed(config.master_seed, shape_index, attempt);
    let mut rng = seed::rng(seed::derive(seed, &[seed::STREAM_PROGRAM]));

    let k = 1 + index(&mut rng, config.max_primitives());
    let mut parts = Vec::with_capacity(k);
    for _ in 0..k {
        let kind = PrimitiveKind::ALL[index(&mut rng, PrimitiveKind::ALL.len())];
        let params = canonical_params(kind, &mut rng, config);
        let scale = Vec3::new(
            uniform(&mut rng, config.scale_range),
            uniform(&mut rng, config.scale_range),
            uniform(&mut rng, config.scale_range),
        );
        let rotation = random_rotation(&mut rng);
        let offset = Vec3::new(
            uniform(&mut rng, config.translation_range),
            uniform(&mut rng, config.translation_range),
            uniform(&mut rng, config.translation_range),
        );
        // Place the solid's bounding center (not its canonical origin) at the offset.
        let (center, _) = params.bounding_sphere();
        let translation = offset - rotation * center.component_mul(&scale);
        parts.push(PlacedPrimitive::new(params, AffineTransform::new(scale, rotation, translation)?)?);
    }

    let mut augmentations = Vec::new();
    if rng.random::<f64>() < config.effective_augmentation_probability() {
        let difference = rng.random::<bool>();
        if difference && k >= 2 {
            let minuend = index(&mut rng, k);
            let mut subtrahend = index(&mut rng, k - 1);
            if subtrahend >= minuend {
                subtrahend += 1;
            }
            augmentations.push(AugmentationOp::BooleanDifference { minuend, subtrahend });
        } else {
            augmentations.push(AugmentationOp::Wireframe {
                part: index(&mut rng, k),
                tube_radius: config.wireframe_tube_radius,
            });
        }
    }

    Ok(ShapeProgram {
        parts,
        augmentations,
        seed,
        config_id: config.config_id(),
        resolution: config.tessellation_resolution,
    })
}

/// CSG role of a realized solid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Ordinary,
    /// Minuend of a boolean difference; holds the subtrahend's solid index.
    Minuend(usize),
    /// Subtrahend of a boolean difference; holds the minuend's solid index.
    Subtrahend(usize),
}

impl Solid {
    /// Maps barycentric coordinates on triangle `tri` to a scene point on
    /// the analytic surface of this solid.
    pub fn surface_point(&self, tri: usize, bary: [f64; 3]) -> Vec3 {
        let [a, b, c] = self.canonical_mesh.triangle(tri);
        let q = a * bary[0] + b * bary[1] + c * bary[2];
        self.primitive.transform.apply(&self.primitive.params.snap_to_surface(&q))
    }
}

/// One sampleable solid: a primitive part, or one tube of a wireframe part.
#[derive(Debug, Clone)]
pub struct Solid {
    pub primitive: PlacedPrimitive,
    pub bounds: (Vec3, f64),
    /// Tessellation in the primitive's canonical frame.
    pub canonical_mesh: TriangleMesh,
    /// The same tessellation placed in the scene; drives area weighting.
    pub mesh: TriangleMesh,
    /// Index of the program part this solid belongs to.
    pub part: usize,
    pub role: Role,
}

/// Tubes along the feature edges of a part's low-resolution tessellation.
pub fn wireframe_tubes(part: &PlacedPrimitive, tube_radius: f64) -> Result<Vec<PlacedPrimitive>> {
    let canonical = unit_mesh(&part.params, WIREFRAME_SOURCE_RESOLUTION)?;
    let verts: Vec<Vec3> = canonical.vertices().iter().map(|v| part.transform.apply(v)).collect();
    canonical
        .feature_edges()
        .into_iter()
        .map(|(a, b)| {
            let (p, q) = (verts[a as usize], verts[b as usize]);
            let dir = q - p;
            let transform = AffineTransform::new(Vec3::repeat(1.0), rotation_aligning_z(&dir), (p + q) * 0.5)?;
            PlacedPrimitive::new(
                PrimitiveParams::Cylinder {
                    radius: tube_radius,
                    half_height: 0.5 * dir.norm(),
                },
                transform,
            )
        })
        .collect()
}

/// Expands a program into its sampleable solids, in part order.
pub fn realize(program: &ShapeProgram) -> Result<Vec<Solid>> {
    program.validate()?;
    let mut wire = vec![None; program.parts.len()];
    let mut partner = vec![None; program.parts.len()];
    for op in &program.augmentations {
        match *op {
            AugmentationOp::Wireframe { part, tube_radius } => wire[part] = Some(tube_radius),
            AugmentationOp::BooleanDifference { minuend, subtrahend } => {
                partner[minuend] = Some((true, subtrahend));
                partner[subtrahend] = Some((false, minuend));
            }
        }
    }
    // Boolean operands are never wireframed, so part i maps to a single solid
    // whenever it has a partner; solid indices are assigned below.
    let mut solids = Vec::new();
    let mut solid_of_part = vec![usize::MAX; program.parts.len()];
    for (i, part) in program.parts.iter().enumerate() {
        solid_of_part[i] = solids.len();
        let prims = match wire[i] {
            Some(r) => wireframe_tubes(part, r)?,
            None => vec![*part],
        };
        let resolution = if wire[i].is_some() { TUBE_RESOLUTION } else { program.resolution };
        for primitive in prims {
            let canonical_mesh = unit_mesh(&primitive.params, resolution)?;
            solids.push(Solid {
                bounds: primitive.scene_bounds(),
                mesh: canonical_mesh.transformed(&primitive.transform),
                canonical_mesh,
                primitive,
                part: i,
                role: Role::Ordinary,
            });
        }
    }
    for (i, p) in partner.iter().enumerate() {
        if let Some((is_minuend, other)) = *p {
            let other_solid = solid_of_part[other];
            solids[solid_of_part[i]].role = if is_minuend {
                Role::Minuend(other_solid)
            } else {
                Role::Subtrahend(other_solid)
            };
        }
    }
    Ok(solids)
}

/// One scene-space mesh per program part; wireframe parts become the
/// merged mesh of their tubes. Boolean differences are not applied here.
pub fn realize_parts(program: &ShapeProgram, resolution: usize) -> Result<Vec<TriangleMesh>> {
    let program = program.clone().with_resolution(resolution);
    let solids = realize(&program)?;
    Ok((0..program.parts.len())
        .map(|i| TriangleMesh::merge(solids.iter().filter(|s| s.part == i).map(|s| &s.mesh)))
        .collect())
}
