//! Self-contained reference implementations backing the oracle tests: a
//! dense matrix type with direct solves, Gauss-Legendre product quadrature
//! composed on the physical triangle, Lagrange bases built from centered
//! monomials, dense assembly of all four bilinear forms, and a Jacobi
//! eigensolver. Nothing in this module calls the library's element,
//! quadrature, assembly, or eigensolver code.
#![allow(dead_code)]

use std::f64::consts::PI;

use biotfe::assemble::Params;
use biotfe::casebiot::ManufacturedCase;
use biotfe::space::FeSystem;
use biotfe::sparse::CsrMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub nrows: usize,
    pub ncols: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Dense {
            nrows,
            ncols,
            a: vec![0.0; nrows * ncols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.ncols + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.ncols + j] += v;
    }

    /// Densifies an operator column by column.
    pub fn from_apply(n: usize, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let mut out = Dense::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = f(&e);
            e[j] = 0.0;
            for i in 0..n {
                out.set(i, j, col[i]);
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let row = &self.a[i * self.ncols..(i + 1) * self.ncols];
                row.iter().zip(x).map(|(r, v)| r * v).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Dense {
        let mut out = Dense::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &Dense) -> Dense {
        assert_eq!(self.ncols, other.nrows);
        let mut out = Dense::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for l in 0..self.ncols {
                let v = self.get(i, l);
                if v == 0.0 {
                    continue;
                }
                for j in 0..other.ncols {
                    out.add(i, j, v * other.get(l, j));
                }
            }
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Dense {
        let mut out = Dense::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                out.set(i, j, self.get(r, c));
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Dense) -> f64 {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        self.a
            .iter()
            .zip(&other.a)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Option<Dense> {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        let mut work = self.clone();
        let mut inv = Dense::zeros(n, n);
        for i in 0..n {
            inv.set(i, i, 1.0);
        }
        for col in 0..n {
            let pivot = (col..n).max_by(|&p, &q| {
                work.get(p, col).abs().total_cmp(&work.get(q, col).abs())
            })?;
            if work.get(pivot, col).abs() < 1e-300 {
                return None;
            }
            for j in 0..n {
                let (wp, wc) = (work.get(pivot, j), work.get(col, j));
                work.set(pivot, j, wc);
                work.set(col, j, wp);
                let (ip, ic) = (inv.get(pivot, j), inv.get(col, j));
                inv.set(pivot, j, ic);
                inv.set(col, j, ip);
            }
            let d = work.get(col, col);
            for j in 0..n {
                work.set(col, j, work.get(col, j) / d);
                inv.set(col, j, inv.get(col, j) / d);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = work.get(r, col);
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    work.add(r, j, -factor * work.get(col, j));
                    inv.add(r, j, -factor * inv.get(col, j));
                }
            }
        }
        Some(inv)
    }

    /// Lower Cholesky factor; requires symmetric positive definite input.
    pub fn cholesky_lower(&self) -> Option<Dense> {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        let mut l = Dense::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for m in 0..j {
                    sum -= l.get(i, m) * l.get(j, m);
                }
                if i == j {
                    if sum <= 0.0 {
                        return None;
                    }
                    l.set(i, i, sum.sqrt());
                } else {
                    l.set(i, j, sum / l.get(j, j));
                }
            }
        }
        Some(l)
    }

    /// Solves `L X = B` for lower-triangular `L`, column by column.
    pub fn forward_solve(l: &Dense, b: &Dense) -> Dense {
        let n = l.nrows;
        let mut x = b.clone();
        for col in 0..b.ncols {
            for i in 0..n {
                let mut v = x.get(i, col);
                for m in 0..i {
                    v -= l.get(i, m) * x.get(m, col);
                }
                x.set(i, col, v / l.get(i, i));
            }
        }
        x
    }
}

pub fn csr_to_dense(m: &CsrMatrix) -> Dense {
    let rows = m.to_dense();
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut out = Dense::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out.set(i, j, v);
        }
    }
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for m in 2..=n {
        let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_01(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            ((1.0 + x) / 2.0, w / 2.0)
        })
        .collect()
}

/// Product Gauss rule on a physical triangle through the square collapse,
/// exact for total degree `2n - 2`.
pub fn triangle_rule(v: [[f64; 2]; 3], n: usize) -> Vec<([f64; 2], f64)> {
    let g = gauss_01(n);
    let area2 = ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
        - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
        .abs();
    let mut out = Vec::with_capacity(n * n);
    for &(u, wu) in &g {
        for &(t, wt) in &g {
            let l0 = 1.0 - u;
            let l1 = u * (1.0 - t);
            let l2 = u * t;
            let x = [
                l0 * v[0][0] + l1 * v[1][0] + l2 * v[2][0],
                l0 * v[0][1] + l1 * v[1][1] + l2 * v[2][1],
            ];
            out.push((x, wu * wt * u * area2));
        }
    }
    out
}

/// Lagrange basis over given nodes of one triangle, represented in centered
/// and scaled monomials so the Vandermonde system stays well conditioned.
pub struct NodalBasis {
    center: [f64; 2],
    scale: f64,
    exps: Vec<(u32, u32)>,
    coeff: Dense,
}

impl NodalBasis {
    pub fn lagrange(nodes: &[[f64; 2]], degree: usize) -> NodalBasis {
        let nd = (degree + 1) * (degree + 2) / 2;
        assert_eq!(nodes.len(), nd, "node count for degree {degree}");
        let mut center = [0.0, 0.0];
        for x in nodes {
            center[0] += x[0] / nd as f64;
            center[1] += x[1] / nd as f64;
        }
        let scale = nodes
            .iter()
            .map(|x| ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        let mut exps = Vec::with_capacity(nd);
        for total in 0..=degree as u32 {
            for ax in (0..=total).rev() {
                exps.push((ax, total - ax));
            }
        }
        let mut v = Dense::zeros(nd, nd);
        for (m, x) in nodes.iter().enumerate() {
            let sx = (x[0] - center[0]) / scale;
            let sy = (x[1] - center[1]) / scale;
            for (j, &(ax, ay)) in exps.iter().enumerate() {
                v.set(m, j, sx.powi(ax as i32) * sy.powi(ay as i32));
            }
        }
        let coeff = v.inverse().expect("unisolvent Lagrange nodes");
        NodalBasis {
            center,
            scale,
            exps,
            coeff,
        }
    }

    pub fn eval(&self, i: usize, x: [f64; 2]) -> f64 {
        let sx = (x[0] - self.center[0]) / self.scale;
        let sy = (x[1] - self.center[1]) / self.scale;
        self.exps
            .iter()
            .enumerate()
            .map(|(j, &(ax, ay))| {
                self.coeff.get(j, i) * sx.powi(ax as i32) * sy.powi(ay as i32)
            })
            .sum()
    }

    pub fn grad(&self, i: usize, x: [f64; 2]) -> [f64; 2] {
        let sx = (x[0] - self.center[0]) / self.scale;
        let sy = (x[1] - self.center[1]) / self.scale;
        let mut g = [0.0, 0.0];
        for (j, &(ax, ay)) in self.exps.iter().enumerate() {
            let c = self.coeff.get(j, i);
            if ax > 0 {
                g[0] += c * ax as f64 * sx.powi(ax as i32 - 1) * sy.powi(ay as i32);
            }
            if ay > 0 {
                g[1] += c * ay as f64 * sx.powi(ax as i32) * sy.powi(ay as i32 - 1);
            }
        }
        [g[0] / self.scale, g[1] / self.scale]
    }
}

/// The four dense full-DOF operators.
pub struct DenseOps {
    pub a: Dense,
    pub b: Dense,
    pub k: Dense,
    pub m: Dense,
}

fn strain(g: [f64; 2], comp: usize) -> [[f64; 2]; 2] {
    let mut e = [[0.0; 2]; 2];
    for m in 0..2 {
        for n in 0..2 {
            let mut v = 0.0;
            if n == comp {
                v += 0.5 * g[m];
            }
            if m == comp {
                v += 0.5 * g[n];
            }
            e[m][n] = v;
        }
    }
    e
}

/// Assembles all four forms densely from scratch: bases constructed in
/// physical coordinates, explicit strain tensors, independent quadrature.
pub fn dense_operators(sys: &FeSystem, params: &Params) -> DenseOps {
    let n_u = 2 * sys.u_space.ndof;
    let n_p = sys.p_space.ndof;
    let mut a = Dense::zeros(n_u, n_u);
    let mut b = Dense::zeros(n_p, n_u);
    let mut k = Dense::zeros(n_p, n_p);
    let mut m = Dense::zeros(n_p, n_p);
    let nu = sys.u_space.elem.basis_count();
    let np = sys.p_space.elem.basis_count();
    for tri in 0..sys.mesh.triangles.len() {
        let t = sys.mesh.triangles[tri];
        let verts = [
            sys.mesh.vertices[t[0]],
            sys.mesh.vertices[t[1]],
            sys.mesh.vertices[t[2]],
        ];
        let u_dofs = sys.u_space.dofs(tri);
        let p_dofs = sys.p_space.dofs(tri);
        let u_nodes: Vec<[f64; 2]> = u_dofs.iter().map(|&d| sys.u_space.node_coords[d]).collect();
        let p_nodes: Vec<[f64; 2]> = p_dofs.iter().map(|&d| sys.p_space.node_coords[d]).collect();
        let ub = NodalBasis::lagrange(&u_nodes, sys.k + 1);
        let pb = NodalBasis::lagrange(&p_nodes, sys.k);
        for (x, w) in triangle_rule(verts, sys.k + 4) {
            let gu: Vec<[f64; 2]> = (0..nu).map(|i| ub.grad(i, x)).collect();
            let pv: Vec<f64> = (0..np).map(|j| pb.eval(j, x)).collect();
            let gp: Vec<[f64; 2]> = (0..np).map(|j| pb.grad(j, x)).collect();
            for i in 0..nu {
                for ca in 0..2 {
                    let ei = strain(gu[i], ca);
                    let divi = gu[i][ca];
                    let gi = 2 * u_dofs[i] + ca;
                    for j in 0..nu {
                        for cb in 0..2 {
                            let ej = strain(gu[j], cb);
                            let divj = gu[j][cb];
                            let mut frob = 0.0;
                            for mm in 0..2 {
                                for nn in 0..2 {
                                    frob += ei[mm][nn] * ej[mm][nn];
                                }
                            }
                            let gj = 2 * u_dofs[j] + cb;
                            a.add(
                                gi,
                                gj,
                                w * (2.0 * params.mu * frob + params.lambda * divi * divj),
                            );
                        }
                    }
                    for jp in 0..np {
                        b.add(p_dofs[jp], gi, w * params.alpha * pv[jp] * divi);
                    }
                }
            }
            for jp in 0..np {
                for lp in 0..np {
                    k.add(
                        p_dofs[jp],
                        p_dofs[lp],
                        w * params.kappa * (gp[jp][0] * gp[lp][0] + gp[jp][1] * gp[lp][1]),
                    );
                    m.add(p_dofs[jp], p_dofs[lp], w * pv[jp] * pv[lp]);
                }
            }
        }
    }
    DenseOps { a, b, k, m }
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
pub fn jacobi_eigenvalues(mat: &Dense) -> Vec<f64> {
    assert_eq!(mat.nrows, mat.ncols);
    let n = mat.nrows;
    let mut a = mat.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a.get(i, j) * a.get(i, j);
                }
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for j in 0..n {
                    let ajp = a.get(j, p);
                    let ajq = a.get(j, q);
                    a.set(j, p, c * ajp - s * ajq);
                    a.set(j, q, s * ajp + c * ajq);
                }
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, c * apj - s * aqj);
                    a.set(q, j, s * apj + c * aqj);
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Smallest eigenvalue of the symmetric pencil `S q = lambda M q`, through
/// Cholesky whitening of `M` and the Jacobi eigensolver.
pub fn min_pencil_eigenvalue(s: &Dense, m: &Dense) -> f64 {
    let l = m.cholesky_lower().expect("positive definite mass");
    let x = Dense::forward_solve(&l, s);
    let w = Dense::forward_solve(&l, &x.transpose());
    let mut sym = w.clone();
    for i in 0..sym.nrows {
        for j in 0..sym.ncols {
            sym.set(i, j, 0.5 * (w.get(i, j) + w.get(j, i)));
        }
    }
    jacobi_eigenvalues(&sym)[0]
}

fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// Fourth-order finite-difference stencils over the exact fields of a
/// manufactured case, exposing both balance-equation defects.
pub struct Stencil<'c> {
    pub case: &'c ManufacturedCase,
    pub h: f64,
}

impl Stencil<'_> {
    fn u(&self, c: usize, t: f64, x: [f64; 2]) -> f64 {
        (self.case.u)(t, x)[c]
    }

    fn du(&self, c: usize, dir: usize, t: f64, x: [f64; 2]) -> f64 {
        d1(
            |s| {
                let mut y = x;
                y[dir] = s;
                self.u(c, t, y)
            },
            x[dir],
            self.h,
        )
    }

    fn dduu(&self, c: usize, dir1: usize, dir2: usize, t: f64, x: [f64; 2]) -> f64 {
        if dir1 == dir2 {
            return d2(
                |s| {
                    let mut y = x;
                    y[dir1] = s;
                    self.u(c, t, y)
                },
                x[dir1],
                self.h,
            );
        }
        d1(
            |s| {
                let mut y = x;
                y[dir2] = s;
                self.du(c, dir1, t, y)
            },
            x[dir2],
            self.h,
        )
    }

    fn dp(&self, dir: usize, t: f64, x: [f64; 2]) -> f64 {
        d1(
            |s| {
                let mut y = x;
                y[dir] = s;
                (self.case.p)(t, y)
            },
            x[dir],
            self.h,
        )
    }

    fn ddp(&self, dir: usize, t: f64, x: [f64; 2]) -> f64 {
        d2(
            |s| {
                let mut y = x;
                y[dir] = s;
                (self.case.p)(t, y)
            },
            x[dir],
            self.h,
        )
    }

    fn div_u_dot(&self, t: f64, x: [f64; 2]) -> f64 {
        d1(|s| self.du(0, 0, s, x) + self.du(1, 1, s, x), t, self.h)
    }

    /// Momentum balance defect in component `c`.
    pub fn momentum(&self, c: usize, t: f64, x: [f64; 2]) -> f64 {
        let pm = &self.case.params;
        let laplace = self.dduu(c, 0, 0, t, x) + self.dduu(c, 1, 1, t, x);
        let grad_div = self.dduu(0, c, 0, t, x) + self.dduu(1, c, 1, t, x);
        -pm.mu * laplace - (pm.mu + pm.lambda) * grad_div + pm.alpha * self.dp(c, t, x)
            - (self.case.f)(t, x)[c]
    }

    /// Mass balance defect.
    pub fn mass(&self, t: f64, x: [f64; 2]) -> f64 {
        let pm = &self.case.params;
        pm.alpha * self.div_u_dot(t, x) - pm.kappa * (self.ddp(0, t, x) + self.ddp(1, t, x))
            - (self.case.g)(t, x)
    }
}

/// Evaluates both balance defects at 100 seeded-random space-time points and
/// asserts each stays under `tol`.
pub fn check_case_residuals(case: &ManufacturedCase, h: f64, tol: f64, seed: u64) {
    let stencil = Stencil { case, h };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..100 {
        let x = [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)];
        let t = rng.gen_range(0.2..1.0);
        let r = [
            stencil.momentum(0, t, x),
            stencil.momentum(1, t, x),
            stencil.mass(t, x),
        ];
        for (what, v) in ["momentum x", "momentum y", "mass"].iter().zip(r) {
            assert!(
                v.abs() <= tol,
                "{0} trial {trial}: {what} defect {v:.3e} at t={t:.4} x=({1:.4},{2:.4})",
                case.name,
                x[0],
                x[1]
            );
        }
    }
}
