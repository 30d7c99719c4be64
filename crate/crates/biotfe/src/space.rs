//! Global continuous Lagrange spaces on a mesh: scalar `P_k`, the vector
//! `P_{k+1}`/scalar `P_k` Taylor-Hood pair, boundary-condition bookkeeping,
//! and nodal interpolation.
//!
//! Global degrees of freedom are identified through integer lattice keys at
//! scale `degree * 2^level`, so node matching across elements is exact and
//! the numbering (lexicographic in the key) is reproducible bit for bit.

use std::collections::BTreeMap;

use crate::element::{reference_element, ReferenceElement};
use crate::mesh::{Mesh, Side};
use crate::{Error, Result};

/// How displacement boundary conditions are imposed on the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisplacementBc {
    /// Both components fixed on the whole boundary.
    FullDirichlet,
    /// On each axis-aligned side, only the component parallel to that side is
    /// fixed; the normal component is free.
    TangentialDirichlet,
}

/// Essential boundary-condition selection for the pressure and displacement.
#[derive(Debug, Clone, Copy)]
pub struct BcSpec {
    /// Per-side pressure Dirichlet flags, indexed by [`Side::index`].
    pub pressure_dirichlet: [bool; 4],
    pub displacement_mode: DisplacementBc,
}

impl BcSpec {
    /// Pressure fixed on all sides, displacement fully fixed.
    pub fn full_dirichlet() -> Self {
        Self {
            pressure_dirichlet: [true; 4],
            displacement_mode: DisplacementBc::FullDirichlet,
        }
    }

    /// Pressure fixed on all sides, tangential displacement fixed.
    pub fn tangential_dirichlet() -> Self {
        Self {
            pressure_dirichlet: [true; 4],
            displacement_mode: DisplacementBc::TangentialDirichlet,
        }
    }
}

/// Scalar continuous Lagrange space of a fixed degree on a mesh.
#[derive(Debug, Clone)]
pub struct ScalarSpace {
    pub degree: usize,
    pub elem: ReferenceElement,
    pub ndof: usize,
    /// Element-to-global map, `basis_count` entries per triangle.
    pub dof_map: Vec<usize>,
    /// Coordinates of each global node.
    pub node_coords: Vec<[f64; 2]>,
    /// Bitmask of boundary sides each node lies on (bit = [`Side::index`]).
    pub node_sides: Vec<u8>,
}

impl ScalarSpace {
    fn build(mesh: &Mesh, degree: usize) -> Result<Self> {
        let elem = reference_element(degree)?;
        let n_loc = elem.basis_count();
        let scale = (degree as i64) << mesh.level;
        // lattice key of each local node, per element
        let mut keys: Vec<(i64, i64)> = Vec::with_capacity(mesh.triangles.len() * n_loc);
        for tri in &mesh.triangles {
            let l0 = mesh.lattice[tri[0]];
            let l1 = mesh.lattice[tri[1]];
            let l2 = mesh.lattice[tri[2]];
            for mi in &elem.multi {
                let (a, b, c) = (mi[0] as i64, mi[1] as i64, mi[2] as i64);
                keys.push((a * l0[0] + b * l1[0] + c * l2[0], a * l0[1] + b * l1[1] + c * l2[1]));
            }
        }
        let mut numbering: BTreeMap<(i64, i64), usize> = BTreeMap::new();
        for &key in &keys {
            numbering.entry(key).or_insert(0);
        }
        for (i, (_, id)) in numbering.iter_mut().enumerate() {
            *id = i;
        }
        let ndof = numbering.len();
        let dof_map = keys.iter().map(|k| numbering[k]).collect();
        let mut node_coords = vec![[0.0, 0.0]; ndof];
        let mut node_sides = vec![0u8; ndof];
        for (&(kx, ky), &id) in &numbering {
            node_coords[id] = [kx as f64 / scale as f64, ky as f64 / scale as f64];
            let mut mask = 0u8;
            if kx == 0 {
                mask |= 1 << Side::Left.index();
            }
            if kx == scale {
                mask |= 1 << Side::Right.index();
            }
            if ky == 0 {
                mask |= 1 << Side::Bottom.index();
            }
            if ky == scale {
                mask |= 1 << Side::Top.index();
            }
            node_sides[id] = mask;
        }
        Ok(Self {
            degree,
            elem,
            ndof,
            dof_map,
            node_coords,
            node_sides,
        })
    }

    /// Global DOF indices of one element.
    pub fn dofs(&self, tri: usize) -> &[usize] {
        let n = self.elem.basis_count();
        &self.dof_map[tri * n..(tri + 1) * n]
    }

    /// Evaluates a coefficient vector on element `tri` at a reference point.
    pub fn eval_on(&self, tri: usize, xref: [f64; 2], coeffs: &[f64]) -> f64 {
        let dofs = self.dofs(tri);
        let mut acc = 0.0;
        for (i, &d) in dofs.iter().enumerate() {
            acc += coeffs[d] * self.elem.eval(i, xref);
        }
        acc
    }
}

/// Taylor-Hood pair on a mesh: vector `P_{k+1}` displacement space and scalar
/// `P_k` pressure space, with the free/constrained DOF partition induced by a
/// [`BcSpec`].
///
/// Displacement DOFs are interleaved: DOF `2 * node + comp`.
#[derive(Debug, Clone)]
pub struct FeSystem {
    pub mesh: Mesh,
    pub k: usize,
    pub bc: BcSpec,
    pub u_space: ScalarSpace,
    pub p_space: ScalarSpace,
    pub u_free: Vec<usize>,
    pub u_constrained: Vec<usize>,
    pub p_free: Vec<usize>,
    pub p_constrained: Vec<usize>,
    /// Full displacement DOF index to free index.
    pub u_free_index: Vec<Option<usize>>,
    /// Full displacement DOF index to constrained index.
    pub u_constrained_index: Vec<Option<usize>>,
    pub p_free_index: Vec<Option<usize>>,
    pub p_constrained_index: Vec<Option<usize>>,
}

/// Builds the Taylor-Hood system for pressure degree `k` in 1..=3.
pub fn build_system(mesh: Mesh, k: usize, bc: BcSpec) -> Result<FeSystem> {
    if !(1..=3).contains(&k) {
        return Err(Error::DegreeOutOfRange(k, 1, 3));
    }
    let u_space = ScalarSpace::build(&mesh, k + 1)?;
    let p_space = ScalarSpace::build(&mesh, k)?;

    let n_u = 2 * u_space.ndof;
    let mut u_free = Vec::new();
    let mut u_constrained = Vec::new();
    for node in 0..u_space.ndof {
        let sides = u_space.node_sides[node];
        for comp in 0..2 {
            let constrained = match bc.displacement_mode {
                DisplacementBc::FullDirichlet => sides != 0,
                DisplacementBc::TangentialDirichlet => {
                    if comp == 0 {
                        // x-component is tangential on bottom/top
                        sides & (1 << Side::Bottom.index() | 1 << Side::Top.index()) != 0
                    } else {
                        sides & (1 << Side::Left.index() | 1 << Side::Right.index()) != 0
                    }
                }
            };
            if constrained {
                u_constrained.push(2 * node + comp);
            } else {
                u_free.push(2 * node + comp);
            }
        }
    }
    let mut p_free = Vec::new();
    let mut p_constrained = Vec::new();
    let p_mask: u8 = (0..4)
        .filter(|&i| bc.pressure_dirichlet[i])
        .fold(0, |m, i| m | 1 << i);
    for node in 0..p_space.ndof {
        if p_space.node_sides[node] & p_mask != 0 {
            p_constrained.push(node);
        } else {
            p_free.push(node);
        }
    }
    let index_of = |list: &[usize], len: usize| {
        let mut idx = vec![None; len];
        for (i, &d) in list.iter().enumerate() {
            idx[d] = Some(i);
        }
        idx
    };
    let u_free_index = index_of(&u_free, n_u);
    let u_constrained_index = index_of(&u_constrained, n_u);
    let p_free_index = index_of(&p_free, p_space.ndof);
    let p_constrained_index = index_of(&p_constrained, p_space.ndof);
    Ok(FeSystem {
        mesh,
        k,
        bc,
        u_space,
        p_space,
        u_free,
        u_constrained,
        p_free,
        p_constrained,
        u_free_index,
        u_constrained_index,
        p_free_index,
        p_constrained_index,
    })
}

impl FeSystem {
    pub fn n_u_dofs(&self) -> usize {
        2 * self.u_space.ndof
    }

    pub fn n_p_dofs(&self) -> usize {
        self.p_space.ndof
    }

    pub fn n_u_free(&self) -> usize {
        self.u_free.len()
    }

    pub fn n_p_free(&self) -> usize {
        self.p_free.len()
    }

    /// Nodal interpolation of a vector field, full-length coefficient vector.
    pub fn interpolate_displacement(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.n_u_dofs()];
        for (node, &x) in self.u_space.node_coords.iter().enumerate() {
            let v = f(x);
            coeffs[2 * node] = v[0];
            coeffs[2 * node + 1] = v[1];
        }
        coeffs
    }

    /// Nodal interpolation of a scalar field, full-length coefficient vector.
    pub fn interpolate_pressure(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.p_space.node_coords.iter().map(|&x| f(x)).collect()
    }

    /// Constrained displacement values of a vector field, in `u_constrained`
    /// order.
    pub fn boundary_displacement(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        self.u_constrained
            .iter()
            .map(|&d| {
                let v = f(self.u_space.node_coords[d / 2]);
                v[d % 2]
            })
            .collect()
    }

    /// Constrained pressure values of a scalar field, in `p_constrained`
    /// order.
    pub fn boundary_pressure(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.p_constrained
            .iter()
            .map(|&d| f(self.p_space.node_coords[d]))
            .collect()
    }

    /// Free part of a full displacement vector.
    pub fn restrict_u(&self, full: &[f64]) -> Vec<f64> {
        self.u_free.iter().map(|&d| full[d]).collect()
    }

    /// Free part of a full pressure vector.
    pub fn restrict_p(&self, full: &[f64]) -> Vec<f64> {
        self.p_free.iter().map(|&d| full[d]).collect()
    }

    /// Full displacement vector from free and constrained parts.
    pub fn expand_u(&self, free: &[f64], constrained: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.u_free.len());
        assert_eq!(constrained.len(), self.u_constrained.len());
        let mut full = vec![0.0; self.n_u_dofs()];
        for (i, &d) in self.u_free.iter().enumerate() {
            full[d] = free[i];
        }
        for (i, &d) in self.u_constrained.iter().enumerate() {
            full[d] = constrained[i];
        }
        full
    }

    /// Full pressure vector from free and constrained parts.
    pub fn expand_p(&self, free: &[f64], constrained: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.p_free.len());
        assert_eq!(constrained.len(), self.p_constrained.len());
        let mut full = vec![0.0; self.n_p_dofs()];
        for (i, &d) in self.p_free.iter().enumerate() {
            full[d] = free[i];
        }
        for (i, &d) in self.p_constrained.iter().enumerate() {
            full[d] = constrained[i];
        }
        full
    }
}
