use std::f64::consts::PI;

use super::{PrimitiveParams, TriangleMesh, Vec3};
use crate::error::{Error, Result};

/// Segments per circular cross-section unless configured otherwise.
pub const DEFAULT_RESOLUTION: usize = 64;
pub const MIN_CURVED_RESOLUTION: usize = 3;

fn circle(i: usize, n: usize) -> (f64, f64) {
    let a = 2.0 * PI * i as f64 / n as f64;
    (libm::cos(a), libm::sin(a))
}

/// Watertight, outward-oriented tessellation of the canonical solid.
///
/// `resolution` is the number of segments around each circular
/// cross-section; the cube ignores it.
pub fn unit_mesh(params: &PrimitiveParams, resolution: usize) -> Result<TriangleMesh> {
    params.validate()?;
    let curved = !matches!(params, PrimitiveParams::Cube { .. });
    if curved && resolution < MIN_CURVED_RESOLUTION {
        return Err(Error::param(
            "resolution",
            format!("must be >= {MIN_CURVED_RESOLUTION} for curved solids, got {resolution}"),
        ));
    }
    let (vertices, triangles) = match *params {
        PrimitiveParams::Cube { half_extent } => cube(half_extent),
        PrimitiveParams::Sphere { radius } => sphere(radius, resolution),
        PrimitiveParams::Cylinder {
            radius,
            half_height,
        } => cylinder(radius, half_height, resolution),
        PrimitiveParams::Cone { radius, height } => cone(radius, height, resolution),
        PrimitiveParams::Torus {
            major_radius,
            minor_radius,
        } => torus(major_radius, minor_radius, resolution),
    };
    TriangleMesh::new(vertices, triangles)
}

type Tess = (Vec<Vec3>, Vec<[u32; 3]>);

fn cube(h: f64) -> Tess {
    let vertices = (0..8)
        .map(|i| {
            let s = |bit: usize| if i & bit != 0 { h } else { -h };
            Vec3::new(s(1), s(2), s(4))
        })
        .collect();
    let triangles = vec![
        // -z, +z
        [0, 2, 3],
        [0, 3, 1],
        [4, 5, 7],
        [4, 7, 6],
        // -y, +y
        [0, 1, 5],
        [0, 5, 4],
        [2, 6, 7],
        [2, 7, 3],
        // -x, +x
        [0, 4, 6],
        [0, 6, 2],
        [1, 3, 7],
        [1, 7, 5],
    ];
    (vertices, triangles)
}

/// Adds a fan closing a ring around `center`; `flip` reverses winding.
fn fan(tris: &mut Vec<[u32; 3]>, center: u32, ring: u32, n: usize, flip: bool) {
    for j in 0..n as u32 {
        let a = ring + j;
        let b = ring + (j + 1) % n as u32;
        tris.push(if flip { [center, b, a] } else { [center, a, b] });
    }
}

/// Adds quads between two rings of `n` vertices each.
fn band(tris: &mut Vec<[u32; 3]>, lower: u32, upper: u32, n: usize) {
    for j in 0..n as u32 {
        let j1 = (j + 1) % n as u32;
        tris.push([lower + j, lower + j1, upper + j1]);
        tris.push([lower + j, upper + j1, upper + j]);
    }
}

fn sphere(r: f64, res: usize) -> Tess {
    let rings = (res / 2).max(2);
    let mut vertices = vec![Vec3::new(0.0, 0.0, -r)];
    for i in 1..rings {
        let polar = PI * i as f64 / rings as f64;
        let (z, s) = (-libm::cos(polar), libm::sin(polar));
        for j in 0..res {
            let (c, sn) = circle(j, res);
            vertices.push(Vec3::new(r * s * c, r * s * sn, r * z));
        }
    }
    let top = vertices.len() as u32;
    vertices.push(Vec3::new(0.0, 0.0, r));

    let mut tris = Vec::new();
    fan(&mut tris, 0, 1, res, true);
    for i in 0..rings as u32 - 2 {
        band(&mut tris, 1 + i * res as u32, 1 + (i + 1) * res as u32, res);
    }
    fan(&mut tris, top, 1 + (rings as u32 - 2) * res as u32, res, false);
    (vertices, tris)
}

fn cylinder(r: f64, h: f64, res: usize) -> Tess {
    let mut vertices = vec![Vec3::new(0.0, 0.0, -h), Vec3::new(0.0, 0.0, h)];
    for z in [-h, h] {
        for j in 0..res {
            let (c, s) = circle(j, res);
            vertices.push(Vec3::new(r * c, r * s, z));
        }
    }
    let (bottom, top) = (2, 2 + res as u32);
    let mut tris = Vec::new();
    fan(&mut tris, 0, bottom, res, true);
    band(&mut tris, bottom, top, res);
    fan(&mut tris, 1, top, res, false);
    (vertices, tris)
}

fn cone(r: f64, height: f64, res: usize) -> Tess {
    let mut vertices = vec![Vec3::zeros(), Vec3::new(0.0, 0.0, height)];
    for j in 0..res {
        let (c, s) = circle(j, res);
        vertices.push(Vec3::new(r * c, r * s, 0.0));
    }
    let mut tris = Vec::new();
    fan(&mut tris, 0, 2, res, true);
    fan(&mut tris, 1, 2, res, false);
    (vertices, tris)
}

fn torus(major: f64, minor: f64, res: usize) -> Tess {
    let mut vertices = Vec::with_capacity(res * res);
    for i in 0..res {
        let (ct, st) = circle(i, res);
        for j in 0..res {
            let (cp, sp) = circle(j, res);
            let rho = major + minor * cp;
            vertices.push(Vec3::new(rho * ct, rho * st, minor * sp));
        }
    }
    let idx = |i: usize, j: usize| ((i % res) * res + (j % res)) as u32;
    let mut tris = Vec::with_capacity(2 * res * res);
    for i in 0..res {
        for j in 0..res {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    (vertices, tris)
}
