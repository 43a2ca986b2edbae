//! The five analytic primitive solids, their affine placement, exact
//! membership tests and watertight tessellations.
//!
//! Canonical frames: the cube is centered with half-extent `h`; the sphere is
//! centered; the cylinder is centered on the z axis spanning `[-h, h]`; the
//! cone has its base disk at `z = 0` and apex at `z = H`; the torus lies in
//! the xy-plane around the z axis.

mod mesh;
mod tessellate;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mesh::{surface_area, TriangleMesh};
pub use tessellate::{unit_mesh, DEFAULT_RESOLUTION, MIN_CURVED_RESOLUTION};

pub type Vec3 = Vector3<f64>;

/// Half-width of the boundary band, in canonical units.
pub const BOUNDARY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Cube,
    Sphere,
    Cylinder,
    Cone,
    Torus,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 5] = [
        PrimitiveKind::Cube,
        PrimitiveKind::Sphere,
        PrimitiveKind::Cylinder,
        PrimitiveKind::Cone,
        PrimitiveKind::Torus,
    ];
}

/// Intrinsic sizes in the canonical frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitiveParams {
    Cube { half_extent: f64 },
    Sphere { radius: f64 },
    Cylinder { radius: f64, half_height: f64 },
    Cone { radius: f64, height: f64 },
    Torus { major_radius: f64, minor_radius: f64 },
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be finite and > 0, got {v}")))
    }
}

impl PrimitiveParams {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            PrimitiveParams::Cube { .. } => PrimitiveKind::Cube,
            PrimitiveParams::Sphere { .. } => PrimitiveKind::Sphere,
            PrimitiveParams::Cylinder { .. } => PrimitiveKind::Cylinder,
            PrimitiveParams::Cone { .. } => PrimitiveKind::Cone,
            PrimitiveParams::Torus { .. } => PrimitiveKind::Torus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PrimitiveParams::Cube { half_extent } => positive("cube.half_extent", half_extent),
            PrimitiveParams::Sphere { radius } => positive("sphere.radius", radius),
            PrimitiveParams::Cylinder {
                radius,
                half_height,
            } => {
                positive("cylinder.radius", radius)?;
                positive("cylinder.half_height", half_height)
            }
            PrimitiveParams::Cone { radius, height } => {
                positive("cone.radius", radius)?;
                positive("cone.height", height)
            }
            PrimitiveParams::Torus {
                major_radius,
                minor_radius,
            } => {
                positive("torus.major_radius", major_radius)?;
                positive("torus.minor_radius", minor_radius)?;
                if minor_radius >= major_radius {
                    return Err(Error::param(
                        "torus.minor_radius",
                        format!("must be < major_radius ({minor_radius} >= {major_radius})"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Signed deviation from the canonical surface: negative inside, zero on
    /// the surface, positive outside. Cube, sphere, cylinder and torus values
    /// are Euclidean distances near the surface; the cone's lateral term is
    /// the radial offset from the slanted wall.
    pub fn deviation(&self, p: &Vec3) -> f64 {
        match *self {
            PrimitiveParams::Cube { half_extent } => {
                p.x.abs().max(p.y.abs()).max(p.z.abs()) - half_extent
            }
            PrimitiveParams::Sphere { radius } => p.norm() - radius,
            PrimitiveParams::Cylinder {
                radius,
                half_height,
            } => {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                (rho - radius).max(p.z.abs() - half_height)
            }
            PrimitiveParams::Cone { radius, height } => {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                let wall = rho - radius * (1.0 - p.z / height);
                wall.max(-p.z).max(p.z - height)
            }
            PrimitiveParams::Torus {
                major_radius,
                minor_radius,
            } => {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                let dr = rho - major_radius;
                (dr * dr + p.z * p.z).sqrt() - minor_radius
            }
        }
    }

    /// Moves a point lying on (or near) this solid's canonical tessellation
    /// onto the analytic surface. Flat faces (cube faces, cylinder caps,
    /// cone base) are left untouched; curved walls are projected radially.
    pub fn snap_to_surface(&self, q: &Vec3) -> Vec3 {
        const FLAT_TOL: f64 = 1e-9;
        let radial = |q: &Vec3, target: f64| {
            let rho = (q.x * q.x + q.y * q.y).sqrt();
            if rho > 0.0 {
                let k = target / rho;
                Vec3::new(q.x * k, q.y * k, q.z)
            } else {
                *q
            }
        };
        match *self {
            PrimitiveParams::Cube { .. } => *q,
            PrimitiveParams::Sphere { radius } => {
                let n = q.norm();
                if n > 0.0 {
                    q * (radius / n)
                } else {
                    *q
                }
            }
            PrimitiveParams::Cylinder {
                radius,
                half_height,
            } => {
                if q.z.abs() >= half_height * (1.0 - FLAT_TOL) {
                    *q
                } else {
                    radial(q, radius)
                }
            }
            PrimitiveParams::Cone { radius, height } => {
                if q.z <= height * FLAT_TOL {
                    *q
                } else {
                    radial(q, radius * (1.0 - q.z / height))
                }
            }
            PrimitiveParams::Torus {
                major_radius,
                minor_radius,
            } => {
                let ring = radial(&Vec3::new(q.x, q.y, 0.0), major_radius);
                let off = q - ring;
                let n = off.norm();
                if n > 0.0 {
                    ring + off * (minor_radius / n)
                } else {
                    *q
                }
            }
        }
    }

    /// Enclosing sphere of the canonical solid as (center, radius).
    pub fn bounding_sphere(&self) -> (Vec3, f64) {
        match *self {
            PrimitiveParams::Cube { half_extent } => (Vec3::zeros(), half_extent * 3f64.sqrt()),
            PrimitiveParams::Sphere { radius } => (Vec3::zeros(), radius),
            PrimitiveParams::Cylinder {
                radius,
                half_height,
            } => (Vec3::zeros(), radius.hypot(half_height)),
            PrimitiveParams::Cone { radius, height } => {
                (Vec3::new(0.0, 0.0, 0.5 * height), radius.hypot(0.5 * height))
            }
            PrimitiveParams::Torus {
                major_radius,
                minor_radius,
            } => (Vec3::zeros(), major_radius + minor_radius),
        }
    }

    /// Exact surface area of the canonical solid.
    pub fn analytic_area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            PrimitiveParams::Cube { half_extent } => 24.0 * half_extent * half_extent,
            PrimitiveParams::Sphere { radius } => 4.0 * PI * radius * radius,
            PrimitiveParams::Cylinder {
                radius,
                half_height,
            } => 2.0 * PI * radius * radius + 4.0 * PI * radius * half_height,
            PrimitiveParams::Cone { radius, height } => {
                PI * radius * radius + PI * radius * radius.hypot(height)
            }
            PrimitiveParams::Torus {
                major_radius,
                minor_radius,
            } => 4.0 * PI * PI * major_radius * minor_radius,
        }
    }

    /// Upper bound on the sag of one tessellation chord at `resolution`
    /// segments per circle. Zero for the cube.
    pub fn chord_error_bound(&self, resolution: usize) -> f64 {
        let sag = 1.0 - libm::cos(std::f64::consts::PI / resolution.max(1) as f64);
        let radius = match *self {
            PrimitiveParams::Cube { .. } => 0.0,
            PrimitiveParams::Sphere { radius }
            | PrimitiveParams::Cylinder { radius, .. }
            | PrimitiveParams::Cone { radius, .. } => radius,
            PrimitiveParams::Torus {
                major_radius,
                minor_radius,
            } => major_radius + minor_radius,
        };
        radius * sag
    }
}

/// Scale, then rotate, then translate: `p' = R (S p) + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    scale: Vec3,
    rotation: Matrix3<f64>,
    translation: Vec3,
}

impl Default for AffineTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineTransform {
    pub fn new(scale: Vec3, rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        if !scale.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::param("transform.scale", format!("every factor must be > 0, got {scale:?}")));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(Error::param("transform.translation", "must be finite"));
        }
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        let det = rotation.determinant();
        if !(ortho <= 1e-9) || !((1.0 - 1e-9..=1.0 + 1e-9).contains(&det)) {
            return Err(Error::param(
                "transform.rotation",
                format!("not a proper rotation (|RtR - I| = {ortho:e}, det = {det})"),
            ));
        }
        Ok(AffineTransform {
            scale,
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        AffineTransform {
            scale: Vec3::repeat(1.0),
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn translation_only(t: Vec3) -> Self {
        AffineTransform {
            translation: t,
            ..Self::identity()
        }
    }

    pub fn scaling(s: Vec3) -> Result<Self> {
        Self::new(s, Matrix3::identity(), Vec3::zeros())
    }

    pub fn scale(&self) -> &Vec3 {
        &self.scale
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn max_scale(&self) -> f64 {
        self.scale.max()
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p.component_mul(&self.scale) + self.translation
    }

    pub fn apply_inverse(&self, p: &Vec3) -> Vec3 {
        (self.rotation.transpose() * (p - self.translation)).component_div(&self.scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Membership {
    Inside,
    Outside,
    Boundary,
}

impl Membership {
    pub fn from_deviation(d: f64) -> Self {
        if d < -BOUNDARY_EPS {
            Membership::Inside
        } else if d > BOUNDARY_EPS {
            Membership::Outside
        } else {
            Membership::Boundary
        }
    }
}

/// A primitive solid placed in the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedPrimitive {
    pub params: PrimitiveParams,
    pub transform: AffineTransform,
}

// Relative padding of the scene-space bounding sphere used to skip exact tests.
const BOUND_PAD: f64 = 1.05;

impl PlacedPrimitive {
    pub fn new(params: PrimitiveParams, transform: AffineTransform) -> Result<Self> {
        params.validate()?;
        Ok(PlacedPrimitive { params, transform })
    }

    pub fn kind(&self) -> PrimitiveKind {
        self.params.kind()
    }

    /// Scene-space enclosing sphere as (center, radius).
    pub fn scene_bounds(&self) -> (Vec3, f64) {
        let (c, r) = self.params.bounding_sphere();
        (self.transform.apply(&c), r * self.transform.max_scale())
    }

    pub fn deviation(&self, point: &Vec3) -> f64 {
        self.params.deviation(&self.transform.apply_inverse(point))
    }

    pub fn membership(&self, point: &Vec3) -> Membership {
        Membership::from_deviation(self.deviation(point))
    }

    /// Same classification as [`membership`](Self::membership), with a cheap
    /// early-out for points far outside the padded bounding sphere.
    pub fn membership_with_bounds(&self, point: &Vec3, bounds: &(Vec3, f64)) -> Membership {
        let (c, r) = bounds;
        let limit = r * BOUND_PAD;
        if (point - c).norm_squared() > limit * limit {
            Membership::Outside
        } else {
            self.membership(point)
        }
    }

    /// Canonical tessellation mapped into the scene.
    pub fn mesh(&self, resolution: usize) -> Result<TriangleMesh> {
        Ok(unit_mesh(&self.params, resolution)?.transformed(&self.transform))
    }
}

/// Classification of `point` against a placed primitive.
pub fn membership(prim: &PlacedPrimitive, point: &Vec3) -> Membership {
    prim.membership(point)
}

/// Maps every mesh vertex through `t`.
pub fn transform_mesh(mesh: &TriangleMesh, t: &AffineTransform) -> TriangleMesh {
    mesh.transformed(t)
}

/// Rotation matrix from a (not necessarily normalized) quaternion `w + xi + yj + zk`.
pub fn rotation_from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Matrix3<f64> {
    let n = (w * w + x * x + y * y + z * z).sqrt();
    let (w, x, y, z) = (w / n, x / n, y / n, z / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Proper rotation whose third column is `dir` (normalized).
pub fn rotation_aligning_z(dir: &Vec3) -> Matrix3<f64> {
    let z = dir.normalize();
    let helper = if z.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let x = helper.cross(&z).normalize();
    let y = z.cross(&x);
    Matrix3::from_columns(&[x, y, z])
}
