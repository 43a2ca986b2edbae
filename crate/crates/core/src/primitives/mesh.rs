use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::primitives::{AffineTransform, Vec3};

/// Indexed triangle mesh with cached per-triangle areas and their prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    triangle_areas: Vec<f64>,
    cumulative_area: Vec<f64>,
}

impl Default for TriangleMesh {
    fn default() -> Self {
        Self::empty()
    }
}

fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

impl TriangleMesh {
    pub fn empty() -> Self {
        TriangleMesh {
            vertices: Vec::new(),
            triangles: Vec::new(),
            triangle_areas: Vec::new(),
            cumulative_area: Vec::new(),
        }
    }

    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(bad) = triangles
            .iter()
            .flatten()
            .find(|&&i| i as usize >= n)
        {
            return Err(Error::Validation(format!(
                "triangle index {bad} out of range for {n} vertices"
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Validation("non-finite mesh vertex".into()));
        }
        Ok(Self::from_checked(vertices, triangles))
    }

    fn from_checked(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        let triangle_areas: Vec<f64> = triangles
            .iter()
            .map(|t| {
                triangle_area(
                    &vertices[t[0] as usize],
                    &vertices[t[1] as usize],
                    &vertices[t[2] as usize],
                )
            })
            .collect();
        let cumulative_area = triangle_areas
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a;
                Some(*acc)
            })
            .collect();
        TriangleMesh {
            vertices,
            triangles,
            triangle_areas,
            cumulative_area,
        }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle_areas(&self) -> &[f64] {
        &self.triangle_areas
    }

    pub fn cumulative_area(&self) -> &[f64] {
        &self.cumulative_area
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    /// Total surface area; the last prefix sum.
    pub fn surface_area(&self) -> f64 {
        self.cumulative_area.last().copied().unwrap_or(0.0)
    }

    /// Maps every vertex through `t`, keeping connectivity and recomputing areas.
    pub fn transformed(&self, t: &AffineTransform) -> TriangleMesh {
        let vertices = self.vertices.iter().map(|v| t.apply(v)).collect();
        Self::from_checked(vertices, self.triangles.clone())
    }

    /// Concatenates meshes, offsetting indices.
    pub fn merge<'a>(meshes: impl IntoIterator<Item = &'a TriangleMesh>) -> TriangleMesh {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for m in meshes {
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            triangles.extend(m.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
        }
        Self::from_checked(vertices, triangles)
    }

    /// Index of the triangle whose cumulative-area interval contains `target`
    /// (a value in `[0, surface_area)`).
    pub fn locate_area(&self, target: f64) -> usize {
        let i = self.cumulative_area.partition_point(|&c| c <= target);
        i.min(self.triangles.len().saturating_sub(1))
    }

    /// Undirected edges with the number of triangles using each.
    pub fn edge_use_counts(&self) -> HashMap<(u32, u32), usize> {
        let mut counts = HashMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn is_watertight(&self) -> bool {
        !self.triangles.is_empty() && self.edge_use_counts().values().all(|&c| c == 2)
    }

    /// Unique edges whose two adjacent faces are not coplanar, sorted.
    /// Boundary and non-manifold edges are always kept.
    pub fn feature_edges(&self) -> Vec<(u32, u32)> {
        let mut faces: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (fi, t) in self.triangles.iter().enumerate() {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                faces.entry((a.min(b), a.max(b))).or_default().push(fi);
            }
        }
        let normal = |fi: usize| {
            let [a, b, c] = self.triangle(fi);
            (b - a).cross(&(c - a)).normalize()
        };
        let mut edges: Vec<(u32, u32)> = faces
            .into_iter()
            .filter(|(_, fs)| fs.len() != 2 || normal(fs[0]).dot(&normal(fs[1])).abs() < 1.0 - 1e-9)
            .map(|(e, _)| e)
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Signed enclosed volume (positive for outward-oriented closed meshes).
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Writes Wavefront OBJ text: `v x y z` lines then 1-based `f i j k` lines.
    pub fn write_obj<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for t in &self.triangles {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }
}

/// Total area of a mesh.
pub fn surface_area(mesh: &TriangleMesh) -> f64 {
    mesh.surface_area()
}
