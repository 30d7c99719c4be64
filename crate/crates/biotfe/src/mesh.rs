//! Conforming triangulations of the unit square, built by uniform red
//! refinement of a two-triangle initial mesh.
//!
//! Vertex positions are tracked as integer lattice coordinates at scale
//! `2^level`, so midpoint deduplication and boundary classification use exact
//! integer comparisons instead of floating-point tolerances.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Boundary side of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Index into per-side arrays.
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
            Side::Bottom => 2,
            Side::Top => 3,
        }
    }
}

/// An edge of the triangulation lying on the boundary of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub side: Side,
}

/// Triangulation of `[0,1]²` with counterclockwise triangles and tagged
/// boundary edges.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub level: u32,
    /// Integer vertex coordinates at scale `2^level`.
    pub(crate) lattice: Vec<[i64; 2]>,
}

/// The unit square split along the (0,0)-(1,1) diagonal.
pub fn initial_mesh() -> Mesh {
    let lattice = vec![[0, 0], [1, 0], [1, 1], [0, 1]];
    let triangles = vec![[0, 1, 2], [0, 2, 3]];
    build_mesh(lattice, triangles, 0)
}

/// Red refinement: each triangle is split into four congruent children via
/// edge midpoints. New vertices are appended in first-encounter order.
pub fn refine(m: &Mesh) -> Mesh {
    let level = m.level + 1;
    // old coordinates double when the scale doubles
    let mut lattice: Vec<[i64; 2]> = m.lattice.iter().map(|p| [2 * p[0], 2 * p[1]]).collect();
    let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mid = |a: usize, b: usize, lattice: &mut Vec<[i64; 2]>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let p = [
                (lattice[a][0] + lattice[b][0]) / 2,
                (lattice[a][1] + lattice[b][1]) / 2,
            ];
            lattice.push(p);
            lattice.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * m.triangles.len());
    for &[v0, v1, v2] in &m.triangles {
        let m01 = mid(v0, v1, &mut lattice);
        let m12 = mid(v1, v2, &mut lattice);
        let m20 = mid(v2, v0, &mut lattice);
        triangles.push([v0, m01, m20]);
        triangles.push([m01, v1, m12]);
        triangles.push([m20, m12, v2]);
        triangles.push([m01, m12, m20]);
    }
    build_mesh(lattice, triangles, level)
}

/// Grid spacing `1/2^level`, the mesh size used in convergence reports.
pub fn mesh_size(m: &Mesh) -> f64 {
    1.0 / (1u64 << m.level) as f64
}

fn build_mesh(lattice: Vec<[i64; 2]>, triangles: Vec<[usize; 3]>, level: u32) -> Mesh {
    let scale = 1i64 << level;
    let vertices = lattice
        .iter()
        .map(|p| [p[0] as f64 / scale as f64, p[1] as f64 / scale as f64])
        .collect();
    let boundary_edges = collect_boundary_edges(&lattice, &triangles, scale);
    Mesh {
        vertices,
        triangles,
        boundary_edges,
        level,
        lattice,
    }
}

fn collect_boundary_edges(
    lattice: &[[i64; 2]],
    triangles: &[[usize; 3]],
    scale: i64,
) -> Vec<BoundaryEdge> {
    let mut incidence: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for t in triangles {
        for e in 0..3 {
            let a = t[e];
            let b = t[(e + 1) % 3];
            *incidence.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut edges = Vec::new();
    for (&(a, b), &count) in &incidence {
        if count != 1 {
            continue;
        }
        let (pa, pb) = (lattice[a], lattice[b]);
        let side = if pa[0] == 0 && pb[0] == 0 {
            Side::Left
        } else if pa[0] == scale && pb[0] == scale {
            Side::Right
        } else if pa[1] == 0 && pb[1] == 0 {
            Side::Bottom
        } else if pa[1] == scale && pb[1] == scale {
            Side::Top
        } else {
            panic!("boundary edge ({a},{b}) does not lie on a side of the square");
        };
        edges.push(BoundaryEdge {
            vertices: [a, b],
            side,
        });
    }
    edges
}

impl Mesh {
    /// Signed area of triangle `t` (positive for counterclockwise order).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]))
    }

    /// Sum of all triangle areas.
    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Structural checks: positive areas, conformity, counting formulas,
    /// boundary tags. Returns a description of the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let nt = self.triangles.len();
        let nv = self.vertices.len();
        let expected_nt = 2 * 4usize.pow(self.level);
        let expected_nv = ((1usize << self.level) + 1).pow(2);
        if nt != expected_nt {
            return Err(format!("level {}: {nt} triangles, expected {expected_nt}", self.level));
        }
        if nv != expected_nv {
            return Err(format!("level {}: {nv} vertices, expected {expected_nv}", self.level));
        }
        for t in 0..nt {
            if self.signed_area(t) <= 0.0 {
                return Err(format!("triangle {t} has non-positive signed area"));
            }
        }
        let mut incidence: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let a = t[e];
                let b = t[(e + 1) % 3];
                *incidence.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let scale = 1i64 << self.level;
        for (&(a, b), &count) in &incidence {
            let on_boundary = {
                let (pa, pb) = (self.lattice[a], self.lattice[b]);
                (pa[0] == 0 && pb[0] == 0)
                    || (pa[0] == scale && pb[0] == scale)
                    || (pa[1] == 0 && pb[1] == 0)
                    || (pa[1] == scale && pb[1] == scale)
            };
            let expected = if on_boundary { 1 } else { 2 };
            if count != expected {
                return Err(format!(
                    "edge ({a},{b}) is shared by {count} triangles, expected {expected}"
                ));
            }
        }
        if (self.total_area() - 1.0).abs() > 1e-14 {
            return Err(format!("total area {} differs from 1", self.total_area()));
        }
        Ok(())
    }

    /// Plain-text dump: one `x y` line per vertex, a blank line, then one
    /// `i j k` line per triangle.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "{} {}", v[0], v[1]);
        }
        let _ = writeln!(out);
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }
}
