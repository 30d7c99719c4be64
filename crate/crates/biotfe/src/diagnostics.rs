//! Energy balance of computed trajectories, error norms against exact
//! solutions, and observed convergence rates.

use crate::assemble::{ReducedOperators, TriGeometry};
use crate::casebiot::ManufacturedCase;
use crate::element::triangle_quadrature;
use crate::space::FeSystem;
use crate::sparse::{axpy, dot};
use crate::timeint::{ButcherTableau, DaeRhs, Trajectory};
use crate::{Error, Result};

/// Legendre polynomial of degree `m` shifted to `[0, 1]`.
fn shifted_legendre(m: usize, x: f64) -> f64 {
    let y = 2.0 * x - 1.0;
    let mut prev = 1.0;
    let mut cur = y;
    if m == 0 {
        return prev;
    }
    for n in 1..m {
        let next = ((2 * n + 1) as f64 * y * cur - n as f64 * prev) / (n + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// First-derivative collocation matrix of the interpolant through the nodes
/// `c`: row `i` gives the derivative at `c[i]` from the nodal values.
fn differentiation_matrix(c: &[f64]) -> Vec<Vec<f64>> {
    let s = c.len();
    let mut w = vec![1.0; s];
    for j in 0..s {
        for m in 0..s {
            if m != j {
                w[j] /= c[j] - c[m];
            }
        }
    }
    let mut d = vec![vec![0.0; s]; s];
    for i in 0..s {
        let mut diag = 0.0;
        for j in 0..s {
            if j != i {
                d[i][j] = (w[j] / w[i]) / (c[i] - c[j]);
                diag -= d[i][j];
            }
        }
        d[i][i] = diag;
    }
    d
}

/// Node-to-node matrix of the weighted least-squares projection onto
/// polynomials of degree at most `s - 2`, with the quadrature weights of the
/// tableau as the inner product.
fn projection_matrix(tableau: &ButcherTableau) -> Vec<Vec<f64>> {
    let s = tableau.s;
    let mut pi = vec![vec![0.0; s]; s];
    for m in 0..s.saturating_sub(1) {
        let scale = (2 * m + 1) as f64;
        for i in 0..s {
            let li = shifted_legendre(m, tableau.c[i]);
            for j in 0..s {
                pi[i][j] += scale * li * tableau.b[j] * shifted_legendre(m, tableau.c[j]);
            }
        }
    }
    pi
}

/// Per-node bookkeeping of the discrete energy balance: the elastic energy
/// plus accumulated dissipation on the left, the initial energy plus
/// accumulated work of the sources on the right.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    /// Elastic energy at each grid node.
    pub energies: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `|lhs - rhs| / max(1, |rhs|)` per node.
    pub residual: Vec<f64>,
    pub max_residual: f64,
}

/// Evaluates the energy balance of a trajectory from its stage records.
///
/// Within each step the pressure is projected in time onto degree `s - 2`
/// and the displacement rate is taken as the derivative of the interpolant
/// through the stage values; all time integrals then reduce to the node
/// weights of the tableau. The balance closes to round-off whenever the
/// sources are polynomials in time of degree at most `s - 2`.
pub fn energy_residual(
    traj: &Trajectory,
    red: &ReducedOperators,
    data: &DaeRhs,
    tableau: &ButcherTableau,
) -> Result<EnergyReport> {
    let s = tableau.s;
    if traj.records.len() != traj.grid.n_steps
        || traj.states.len() != traj.grid.n_steps + 1
    {
        return Err(Error::MissingStageRecords);
    }
    for rec in &traj.records {
        if rec.k_u.len() != s || rec.k_p.len() != s {
            return Err(Error::DimensionMismatch {
                context: "stage records per step",
                expected: s,
                got: rec.k_u.len(),
            });
        }
    }
    let f_at = data.f.ok_or_else(|| {
        Error::InvalidInput("the energy balance needs the momentum source f(t)".into())
    })?;

    let tau = traj.grid.tau();
    let nu = red.a_ff.nrows;
    let np = red.k_ff.nrows;
    let dmat = differentiation_matrix(&tableau.c);
    let pi0 = projection_matrix(tableau);

    let energies: Vec<f64> = traj
        .states
        .iter()
        .map(|st| 0.5 * red.a_ff.bilinear(&st.u, &st.u))
        .collect();
    let mut lhs = vec![energies[0]];
    let mut rhs = vec![energies[0]];
    let mut dissipated = 0.0;
    let mut worked = 0.0;

    for (n, rec) in traj.records.iter().enumerate() {
        let base = &traj.states[n];
        let mut stage_u = Vec::with_capacity(s);
        let mut stage_p = Vec::with_capacity(s);
        for i in 0..s {
            let mut su = base.u.clone();
            let mut sp = base.p.clone();
            for j in 0..s {
                let w = tau * tableau.a[i][j];
                if w != 0.0 {
                    axpy(w, &rec.k_u[j], &mut su);
                    axpy(w, &rec.k_p[j], &mut sp);
                }
            }
            stage_u.push(su);
            stage_p.push(sp);
        }
        for i in 0..s {
            let mut q = vec![0.0; np];
            let mut du = vec![0.0; nu];
            for j in 0..s {
                axpy(pi0[i][j], &stage_p[j], &mut q);
                axpy(dmat[i][j] / tau, &stage_u[j], &mut du);
            }
            let w = tau * tableau.b[i];
            dissipated += w * red.k_ff.bilinear(&q, &q);
            worked += w * (dot(&f_at(rec.t_stages[i]), &du) + dot(&(data.g)(rec.t_stages[i]), &q));
        }
        lhs.push(energies[n + 1] + dissipated);
        rhs.push(energies[0] + worked);
    }

    let residual: Vec<f64> = lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l - r).abs() / r.abs().max(1.0))
        .collect();
    let max_residual = residual.iter().cloned().fold(0.0, f64::max);
    Ok(EnergyReport { energies, lhs, rhs, residual, max_residual })
}

/// Relative discrete-in-time error norms of a trajectory.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    /// `max_n |u(t^n) - U^n|_{H1}`, relative.
    pub e_u_inf_h1: f64,
    /// `max_n |p(t^n) - P^n|_{L2}`, relative.
    pub e_p_inf_l2: f64,
    /// `(sum_{n>=1} tau |p(t^n) - P^n|_{H1}^2)^{1/2}`, relative.
    pub e_p_l2_h1: f64,
    /// Unknowns actually solved for.
    pub dofs_u: usize,
    pub dofs_p: usize,
    /// Wall-clock seconds of the producing run, filled in by drivers.
    pub runtime_s: Option<f64>,
}

/// Measures a trajectory against the exact fields of a case.
///
/// All norms are evaluated by elementwise quadrature with the exact solution
/// sampled at the quadrature points; time is sampled at the grid nodes only.
/// The `H1` norms carry both the value and the gradient part, and every
/// error is scaled by the same norm of the exact solution over the same
/// nodes.
pub fn error_norms(
    traj: &Trajectory,
    sys: &FeSystem,
    case: &ManufacturedCase,
) -> Result<ErrorReport> {
    let quad = triangle_quadrature((2 * sys.k + 2).max(8))?;
    let nu_b = sys.u_space.elem.basis_count();
    let np_b = sys.p_space.elem.basis_count();
    let u_vals: Vec<Vec<f64>> =
        quad.points.iter().map(|&x| sys.u_space.elem.eval_all(x)).collect();
    let u_grads: Vec<Vec<[f64; 2]>> =
        quad.points.iter().map(|&x| sys.u_space.elem.grad_all(x)).collect();
    let p_vals: Vec<Vec<f64>> =
        quad.points.iter().map(|&x| sys.p_space.elem.eval_all(x)).collect();
    let p_grads: Vec<Vec<[f64; 2]>> =
        quad.points.iter().map(|&x| sys.p_space.elem.grad_all(x)).collect();

    let nn = traj.states.len();
    let mut err_u_h1 = vec![0.0; nn];
    let mut ref_u_h1 = vec![0.0; nn];
    let mut err_p_l2 = vec![0.0; nn];
    let mut ref_p_l2 = vec![0.0; nn];
    let mut err_p_h1 = vec![0.0; nn];
    let mut ref_p_h1 = vec![0.0; nn];

    for (n, state) in traj.states.iter().enumerate() {
        let t = state.t;
        let u_full = sys.expand_u(&state.u, &sys.boundary_displacement(|x| (case.u)(t, x)));
        let p_full = sys.expand_p(&state.p, &sys.boundary_pressure(|x| (case.p)(t, x)));
        for tri in 0..sys.mesh.triangles.len() {
            let geo = TriGeometry::new(&sys.mesh, tri);
            let u_dofs = sys.u_space.dofs(tri);
            let p_dofs = sys.p_space.dofs(tri);
            for (q, (&w0, &xq)) in quad.weights.iter().zip(&quad.points).enumerate() {
                let w = w0 * geo.det;
                let x = geo.map(xq);

                let mut uh = [0.0; 2];
                let mut guh = [[0.0; 2]; 2];
                for i in 0..nu_b {
                    let phi = u_vals[q][i];
                    let gp = geo.push_gradient(u_grads[q][i]);
                    let c = [u_full[2 * u_dofs[i]], u_full[2 * u_dofs[i] + 1]];
                    for a in 0..2 {
                        uh[a] += c[a] * phi;
                        guh[a][0] += c[a] * gp[0];
                        guh[a][1] += c[a] * gp[1];
                    }
                }
                let mut ph = 0.0;
                let mut gph = [0.0; 2];
                for j in 0..np_b {
                    let c = p_full[p_dofs[j]];
                    ph += c * p_vals[q][j];
                    let gp = geo.push_gradient(p_grads[q][j]);
                    gph[0] += c * gp[0];
                    gph[1] += c * gp[1];
                }

                let ue = (case.u)(t, x);
                let gue = (case.grad_u)(t, x);
                let pe = (case.p)(t, x);
                let gpe = (case.grad_p)(t, x);

                let mut eu = 0.0;
                let mut ru = 0.0;
                for a in 0..2 {
                    eu += (uh[a] - ue[a]).powi(2);
                    ru += ue[a].powi(2);
                    for b in 0..2 {
                        eu += (guh[a][b] - gue[a][b]).powi(2);
                        ru += gue[a][b].powi(2);
                    }
                }
                err_u_h1[n] += w * eu;
                ref_u_h1[n] += w * ru;
                err_p_l2[n] += w * (ph - pe).powi(2);
                ref_p_l2[n] += w * pe * pe;
                let ep = (gph[0] - gpe[0]).powi(2) + (gph[1] - gpe[1]).powi(2);
                let rp = gpe[0] * gpe[0] + gpe[1] * gpe[1];
                err_p_h1[n] += w * ((ph - pe).powi(2) + ep);
                ref_p_h1[n] += w * (pe * pe + rp);
            }
        }
    }

    let max_sqrt = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max).sqrt();
    let tau = traj.grid.tau();
    let sum_tail = |v: &[f64]| v.iter().skip(1).map(|e| tau * e).sum::<f64>().sqrt();
    Ok(ErrorReport {
        e_u_inf_h1: max_sqrt(&err_u_h1) / max_sqrt(&ref_u_h1),
        e_p_inf_l2: max_sqrt(&err_p_l2) / max_sqrt(&ref_p_l2),
        e_p_l2_h1: sum_tail(&err_p_h1) / sum_tail(&ref_p_h1),
        dofs_u: sys.u_free.len(),
        dofs_p: sys.p_free.len(),
        runtime_s: None,
    })
}

/// Observed convergence rates of an error sequence against mesh sizes.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() {
        return Err(Error::DimensionMismatch {
            context: "errors versus mesh sizes",
            expected: hs.len(),
            got: errors.len(),
        });
    }
    if errors.len() < 2 {
        return Err(Error::InvalidInput("need at least two levels for rates".into()));
    }
    if errors.iter().chain(hs).any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::InvalidInput("rates need positive finite inputs".into()));
    }
    Ok((1..errors.len())
        .map(|i| (errors[i - 1] / errors[i]).ln() / (hs[i - 1] / hs[i]).ln())
        .collect())
}
