//! Sparse assembly of the poroelasticity operators and load vectors on a
//! Taylor-Hood system.
//!
//! All matrices are assembled over the full DOF sets (boundary conditions are
//! applied afterwards by extracting submatrices), so the same operators serve
//! the reduced solves, the lifting terms, and the diagnostics.

use crate::element::triangle_quadrature;
use crate::space::FeSystem;
use crate::sparse::CsrMatrix;
use crate::Result;

/// Material parameters: shear modulus, first Lamé parameter, Biot-Willis
/// coupling coefficient, and permeability over fluid viscosity.
#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub mu: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub kappa: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            mu: 1.0,
            lambda: 1.0,
            alpha: 1.0,
            kappa: 1.0,
        }
    }
}

/// Bilinear forms of the system, over full (unconstrained) DOF sets.
///
/// `a` is the elasticity form, `b` the coupling form with pressure test
/// rows and displacement trial columns, `k` the pressure diffusion form and
/// `m_p` the pressure mass matrix.
#[derive(Debug, Clone)]
pub struct Operators {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub k: CsrMatrix,
    pub m_p: CsrMatrix,
}

/// Affine geometry of one triangle: physical gradient map and area scale.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TriGeometry {
    v0: [f64; 2],
    jac: [[f64; 2]; 2],
    pub det: f64,
}

impl TriGeometry {
    pub fn new(sys_mesh: &crate::mesh::Mesh, tri: usize) -> Self {
        let t = sys_mesh.triangles[tri];
        let v0 = sys_mesh.vertices[t[0]];
        let v1 = sys_mesh.vertices[t[1]];
        let v2 = sys_mesh.vertices[t[2]];
        let jac = [[v1[0] - v0[0], v2[0] - v0[0]], [v1[1] - v0[1], v2[1] - v0[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        Self { v0, jac, det }
    }

    /// Physical coordinates of a reference point.
    pub fn map(&self, xref: [f64; 2]) -> [f64; 2] {
        [
            self.v0[0] + self.jac[0][0] * xref[0] + self.jac[0][1] * xref[1],
            self.v0[1] + self.jac[1][0] * xref[0] + self.jac[1][1] * xref[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            (self.jac[1][1] * g[0] - self.jac[1][0] * g[1]) / self.det,
            (-self.jac[0][1] * g[0] + self.jac[0][0] * g[1]) / self.det,
        ]
    }
}

/// Assembles the four bilinear forms, exactly for the polynomial integrands.
pub fn assemble_operators(sys: &FeSystem, params: &Params) -> Result<Operators> {
    let quad = triangle_quadrature(2 * (sys.k + 1))?;
    let nu = sys.u_space.elem.basis_count();
    let np = sys.p_space.elem.basis_count();
    let n_u_dofs = sys.n_u_dofs();
    let n_p_dofs = sys.n_p_dofs();

    // reference values and gradients at the quadrature points
    let u_grads: Vec<Vec<[f64; 2]>> =
        quad.points.iter().map(|&x| sys.u_space.elem.grad_all(x)).collect();
    let p_vals: Vec<Vec<f64>> =
        quad.points.iter().map(|&x| sys.p_space.elem.eval_all(x)).collect();
    let p_grads: Vec<Vec<[f64; 2]>> =
        quad.points.iter().map(|&x| sys.p_space.elem.grad_all(x)).collect();

    let ntri = sys.mesh.triangles.len();
    let mut trip_a = Vec::with_capacity(ntri * (2 * nu) * (2 * nu));
    let mut trip_b = Vec::with_capacity(ntri * np * 2 * nu);
    let mut trip_k = Vec::with_capacity(ntri * np * np);
    let mut trip_m = Vec::with_capacity(ntri * np * np);

    let mut gu = vec![[0.0f64; 2]; nu];
    let mut gp = vec![[0.0f64; 2]; np];
    for tri in 0..ntri {
        let geo = TriGeometry::new(&sys.mesh, tri);
        let u_dofs = sys.u_space.dofs(tri);
        let p_dofs = sys.p_space.dofs(tri);
        let mut ea = vec![0.0; (2 * nu) * (2 * nu)];
        let mut eb = vec![0.0; np * 2 * nu];
        let mut ek = vec![0.0; np * np];
        let mut em = vec![0.0; np * np];
        for (q, &w0) in quad.weights.iter().enumerate() {
            let w = w0 * geo.det;
            for i in 0..nu {
                gu[i] = geo.push_gradient(u_grads[q][i]);
            }
            for j in 0..np {
                gp[j] = geo.push_gradient(p_grads[q][j]);
            }
            for i in 0..nu {
                for j in 0..nu {
                    let dot = gu[i][0] * gu[j][0] + gu[i][1] * gu[j][1];
                    for a in 0..2 {
                        for b in 0..2 {
                            let mut v = params.mu * (gu[i][b] * gu[j][a])
                                + params.lambda * (gu[i][a] * gu[j][b]);
                            if a == b {
                                v += params.mu * dot;
                            }
                            ea[(2 * i + a) * 2 * nu + 2 * j + b] += w * v;
                        }
                    }
                }
            }
            for j in 0..np {
                let pv = p_vals[q][j];
                for i in 0..nu {
                    for a in 0..2 {
                        eb[j * 2 * nu + 2 * i + a] += w * params.alpha * gu[i][a] * pv;
                    }
                }
                for l in 0..np {
                    ek[j * np + l] +=
                        w * params.kappa * (gp[j][0] * gp[l][0] + gp[j][1] * gp[l][1]);
                    em[j * np + l] += w * (p_vals[q][j] * p_vals[q][l]);
                }
            }
        }
        for i in 0..2 * nu {
            let gi = 2 * u_dofs[i / 2] + i % 2;
            for j in 0..2 * nu {
                let gj = 2 * u_dofs[j / 2] + j % 2;
                trip_a.push((gi, gj, ea[i * 2 * nu + j]));
            }
        }
        for j in 0..np {
            for i in 0..2 * nu {
                trip_b.push((p_dofs[j], 2 * u_dofs[i / 2] + i % 2, eb[j * 2 * nu + i]));
            }
            for l in 0..np {
                trip_k.push((p_dofs[j], p_dofs[l], ek[j * np + l]));
                trip_m.push((p_dofs[j], p_dofs[l], em[j * np + l]));
            }
        }
    }

    Ok(Operators {
        a: CsrMatrix::from_triplets(n_u_dofs, n_u_dofs, &trip_a),
        b: CsrMatrix::from_triplets(n_p_dofs, n_u_dofs, &trip_b),
        k: CsrMatrix::from_triplets(n_p_dofs, n_p_dofs, &trip_k),
        m_p: CsrMatrix::from_triplets(n_p_dofs, n_p_dofs, &trip_m),
    })
}

/// The operators restricted to the free/constrained DOF partition.
///
/// Suffix `ff` is the free-test, free-trial block; `fc` pairs free test
/// functions with constrained trial DOFs and carries the boundary lifting.
/// `bt` blocks are the transpose coupling (displacement rows, pressure
/// columns).
#[derive(Debug, Clone)]
pub struct ReducedOperators {
    pub a_ff: CsrMatrix,
    pub a_fc: CsrMatrix,
    pub b_ff: CsrMatrix,
    pub b_fc: CsrMatrix,
    pub bt_ff: CsrMatrix,
    pub bt_fc: CsrMatrix,
    pub k_ff: CsrMatrix,
    pub k_fc: CsrMatrix,
    pub m_ff: CsrMatrix,
}

/// Extracts all reduced blocks from the full operators.
pub fn reduce_operators(ops: &Operators, sys: &FeSystem) -> ReducedOperators {
    let bt = ops.b.transpose();
    ReducedOperators {
        a_ff: ops.a.submatrix(&sys.u_free, &sys.u_free_index, sys.n_u_free()),
        a_fc: ops.a.submatrix(&sys.u_free, &sys.u_constrained_index, sys.u_constrained.len()),
        b_ff: ops.b.submatrix(&sys.p_free, &sys.u_free_index, sys.n_u_free()),
        b_fc: ops.b.submatrix(&sys.p_free, &sys.u_constrained_index, sys.u_constrained.len()),
        bt_ff: bt.submatrix(&sys.u_free, &sys.p_free_index, sys.n_p_free()),
        bt_fc: bt.submatrix(&sys.u_free, &sys.p_constrained_index, sys.p_constrained.len()),
        k_ff: ops.k.submatrix(&sys.p_free, &sys.p_free_index, sys.n_p_free()),
        k_fc: ops.k.submatrix(&sys.p_free, &sys.p_constrained_index, sys.p_constrained.len()),
        m_ff: ops.m_p.submatrix(&sys.p_free, &sys.p_free_index, sys.n_p_free()),
    }
}

/// Assembles the body-force functional `v -> (f, v)` over the full
/// displacement DOFs, with a quadrature rule exact to `degree`.
pub fn assemble_load(
    sys: &FeSystem,
    degree: usize,
    f: impl Fn([f64; 2]) -> [f64; 2],
) -> Result<Vec<f64>> {
    let quad = triangle_quadrature(degree)?;
    let nu = sys.u_space.elem.basis_count();
    let u_vals: Vec<Vec<f64>> =
        quad.points.iter().map(|&x| sys.u_space.elem.eval_all(x)).collect();
    let mut load = vec![0.0; sys.n_u_dofs()];
    for tri in 0..sys.mesh.triangles.len() {
        let geo = TriGeometry::new(&sys.mesh, tri);
        let u_dofs = sys.u_space.dofs(tri);
        for (q, (&w0, &xq)) in quad.weights.iter().zip(&quad.points).enumerate() {
            let w = w0 * geo.det;
            let fx = f(geo.map(xq));
            for i in 0..nu {
                let phi = u_vals[q][i];
                load[2 * u_dofs[i]] += w * fx[0] * phi;
                load[2 * u_dofs[i] + 1] += w * fx[1] * phi;
            }
        }
    }
    Ok(load)
}

/// Assembles the source functional `q -> (g, q)` over the full pressure DOFs.
pub fn assemble_scalar_load(
    sys: &FeSystem,
    degree: usize,
    g: impl Fn([f64; 2]) -> f64,
) -> Result<Vec<f64>> {
    let quad = triangle_quadrature(degree)?;
    let np = sys.p_space.elem.basis_count();
    let p_vals: Vec<Vec<f64>> =
        quad.points.iter().map(|&x| sys.p_space.elem.eval_all(x)).collect();
    let mut load = vec![0.0; sys.n_p_dofs()];
    for tri in 0..sys.mesh.triangles.len() {
        let geo = TriGeometry::new(&sys.mesh, tri);
        let p_dofs = sys.p_space.dofs(tri);
        for (q, (&w0, &xq)) in quad.weights.iter().zip(&quad.points).enumerate() {
            let w = w0 * geo.det;
            let gx = g(geo.map(xq));
            for j in 0..np {
                load[p_dofs[j]] += w * gx * p_vals[q][j];
            }
        }
    }
    Ok(load)
}

/// Assembles `v -> a(u, v)` for a field given through its displacement
/// gradient `grad[a][b] = d u_a / d x_b`.
pub fn assemble_elastic_load(
    sys: &FeSystem,
    params: &Params,
    degree: usize,
    grad: impl Fn([f64; 2]) -> [[f64; 2]; 2],
) -> Result<Vec<f64>> {
    let quad = triangle_quadrature(degree)?;
    let nu = sys.u_space.elem.basis_count();
    let u_grads: Vec<Vec<[f64; 2]>> =
        quad.points.iter().map(|&x| sys.u_space.elem.grad_all(x)).collect();
    let mut load = vec![0.0; sys.n_u_dofs()];
    for tri in 0..sys.mesh.triangles.len() {
        let geo = TriGeometry::new(&sys.mesh, tri);
        let u_dofs = sys.u_space.dofs(tri);
        for (q, (&w0, &xq)) in quad.weights.iter().zip(&quad.points).enumerate() {
            let w = w0 * geo.det;
            let g = grad(geo.map(xq));
            let eps = [
                [g[0][0], 0.5 * (g[0][1] + g[1][0])],
                [0.5 * (g[0][1] + g[1][0]), g[1][1]],
            ];
            let div = g[0][0] + g[1][1];
            for i in 0..nu {
                let gi = geo.push_gradient(u_grads[q][i]);
                for a in 0..2 {
                    let v = 2.0 * params.mu * (eps[a][0] * gi[0] + eps[a][1] * gi[1])
                        + params.lambda * div * gi[a];
                    load[2 * u_dofs[i] + a] += w * v;
                }
            }
        }
    }
    Ok(load)
}

/// Assembles `v -> b(v, p)` for an exact scalar field `p`, a vector over the
/// full displacement DOFs.
pub fn assemble_divergence_load(
    sys: &FeSystem,
    params: &Params,
    degree: usize,
    p: impl Fn([f64; 2]) -> f64,
) -> Result<Vec<f64>> {
    let quad = triangle_quadrature(degree)?;
    let nu = sys.u_space.elem.basis_count();
    let u_grads: Vec<Vec<[f64; 2]>> =
        quad.points.iter().map(|&x| sys.u_space.elem.grad_all(x)).collect();
    let mut load = vec![0.0; sys.n_u_dofs()];
    for tri in 0..sys.mesh.triangles.len() {
        let geo = TriGeometry::new(&sys.mesh, tri);
        let u_dofs = sys.u_space.dofs(tri);
        for (q, (&w0, &xq)) in quad.weights.iter().zip(&quad.points).enumerate() {
            let w = w0 * geo.det * params.alpha * p(geo.map(xq));
            for i in 0..nu {
                let gi = geo.push_gradient(u_grads[q][i]);
                load[2 * u_dofs[i]] += w * gi[0];
                load[2 * u_dofs[i] + 1] += w * gi[1];
            }
        }
    }
    Ok(load)
}

/// Assembles `q -> k(p, q)` for an exact field given through its gradient, a
/// vector over the full pressure DOFs.
pub fn assemble_diffusion_load(
    sys: &FeSystem,
    params: &Params,
    degree: usize,
    grad_p: impl Fn([f64; 2]) -> [f64; 2],
) -> Result<Vec<f64>> {
    let quad = triangle_quadrature(degree)?;
    let np = sys.p_space.elem.basis_count();
    let p_grads: Vec<Vec<[f64; 2]>> =
        quad.points.iter().map(|&x| sys.p_space.elem.grad_all(x)).collect();
    let mut load = vec![0.0; sys.n_p_dofs()];
    for tri in 0..sys.mesh.triangles.len() {
        let geo = TriGeometry::new(&sys.mesh, tri);
        let p_dofs = sys.p_space.dofs(tri);
        for (q, (&w0, &xq)) in quad.weights.iter().zip(&quad.points).enumerate() {
            let w = w0 * geo.det * params.kappa;
            let gp = grad_p(geo.map(xq));
            for j in 0..np {
                let gj = geo.push_gradient(p_grads[q][j]);
                load[p_dofs[j]] += w * (gp[0] * gj[0] + gp[1] * gj[1]);
            }
        }
    }
    Ok(load)
}
