//! Static solves: initial conditions, elliptic projection, compatibility
//! residual, the discrete inf-sup constant, and a Schur-complement pressure
//! integrator used to cross-validate the coupled time integrator.

use crate::assemble::{
    assemble_diffusion_load, assemble_divergence_load, assemble_elastic_load, Params,
    ReducedOperators,
};
use crate::solver::{factor, min_generalized_eig, solve, MatrixRole};
use crate::space::FeSystem;
use crate::sparse::{axpy, block_compose, dot, norm2, CsrMatrix};
use crate::timeint::{ButcherTableau, DaeRhs, TimeGrid};
use crate::{Error, Result};

/// Free-DOF coefficient vectors of both fields at one time.
#[derive(Debug, Clone)]
pub struct State {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

/// The discrete inf-sup constant of one configuration.
#[derive(Debug, Clone, Copy)]
pub struct InfSupResult {
    pub beta_h: f64,
    pub level: usize,
    pub k: usize,
}

/// Exact fields of one time slice, used for projections and boundary data.
pub struct ExactFields<'a> {
    pub u: &'a dyn Fn([f64; 2]) -> [f64; 2],
    pub grad_u: &'a dyn Fn([f64; 2]) -> [[f64; 2]; 2],
    pub p: &'a dyn Fn([f64; 2]) -> f64,
    pub grad_p: &'a dyn Fn([f64; 2]) -> [f64; 2],
}

/// The indefinite two-field block matrix on free DOFs.
pub(crate) fn saddle_matrix(red: &ReducedOperators) -> CsrMatrix {
    let nu = red.a_ff.nrows;
    let np = red.b_ff.nrows;
    block_compose(
        nu + np,
        nu + np,
        &[
            (0, 0, 1.0, &red.a_ff),
            (0, nu, -1.0, &red.bt_ff),
            (nu, 0, 1.0, &red.b_ff),
        ],
    )
}

/// Initial state for a prescribed pressure: the displacement solves the
/// elliptic balance against the effective load `f0` at time zero.
pub fn solve_initial_given_p0(
    red: &ReducedOperators,
    f0: &[f64],
    p0: &[f64],
) -> Result<State> {
    let a_fact = factor(&red.a_ff, MatrixRole::Spd)?;
    let mut rhs = red.bt_ff.apply(p0);
    for (r, f) in rhs.iter_mut().zip(f0) {
        *r += f;
    }
    let u0 = solve(&a_fact, &rhs);
    Ok(State {
        u: u0,
        p: p0.to_vec(),
        t: 0.0,
    })
}

/// Initial state for a prescribed volumetric fluid content: both fields
/// solve the saddle system with second block row `B u0 = phi0`.
pub fn solve_initial_given_phi0(
    red: &ReducedOperators,
    f0: &[f64],
    phi0: &[f64],
) -> Result<State> {
    let nu = red.a_ff.nrows;
    let np = red.b_ff.nrows;
    let saddle = saddle_matrix(red);
    let fact = factor(&saddle, MatrixRole::Saddle)?;
    let mut rhs = vec![0.0; nu + np];
    rhs[..nu].copy_from_slice(f0);
    rhs[nu..].copy_from_slice(phi0);
    let x = solve(&fact, &rhs);
    Ok(State {
        u: x[..nu].to_vec(),
        p: x[nu..].to_vec(),
        t: 0.0,
    })
}

/// Projects exact fields onto the discrete spaces: the pressure through its
/// diffusion form, the displacement through the elastic form with the exact
/// coupling on the right-hand side.
pub fn elliptic_projection(
    sys: &FeSystem,
    params: &Params,
    red: &ReducedOperators,
    fields: &ExactFields,
    t: f64,
) -> Result<State> {
    let degree = (2 * sys.k + 2).max(8);
    let p_c = sys.boundary_pressure(fields.p);
    let u_c = sys.boundary_displacement(fields.u);

    let k_load = assemble_diffusion_load(sys, params, degree, fields.grad_p)?;
    let mut rhs_p = sys.restrict_p(&k_load);
    let lift_p = red.k_fc.apply(&p_c);
    axpy(-1.0, &lift_p, &mut rhs_p);
    let k_fact = factor(&red.k_ff, MatrixRole::Spd)?;
    let p_f = solve(&k_fact, &rhs_p);

    let a_load = assemble_elastic_load(sys, params, degree, fields.grad_u)?;
    let div_load = assemble_divergence_load(sys, params, degree, fields.p)?;
    let mut rhs_u = sys.restrict_u(&a_load);
    let div_f = sys.restrict_u(&div_load);
    axpy(-1.0, &div_f, &mut rhs_u);
    axpy(1.0, &red.bt_ff.apply(&p_f), &mut rhs_u);
    axpy(1.0, &red.bt_fc.apply(&p_c), &mut rhs_u);
    axpy(-1.0, &red.a_fc.apply(&u_c), &mut rhs_u);
    let a_fact = factor(&red.a_ff, MatrixRole::Spd)?;
    let u_f = solve(&a_fact, &rhs_u);

    Ok(State { u: u_f, p: p_f, t })
}

/// Relative residual of the elastic balance `A u - B^T p = f` at one time.
pub fn compatibility_residual(red: &ReducedOperators, state: &State, f_eff: &[f64]) -> f64 {
    let mut r = red.a_ff.apply(&state.u);
    axpy(-1.0, &red.bt_ff.apply(&state.p), &mut r);
    axpy(-1.0, f_eff, &mut r);
    norm2(&r) / norm2(f_eff).max(1.0)
}

/// Discrete inf-sup constant: square root of the smallest eigenvalue of the
/// Schur complement against the pressure mass matrix, with the elastic
/// inverse applied through its factorization.
pub fn infsup_constant(sys: &FeSystem, red: &ReducedOperators) -> Result<InfSupResult> {
    let a_fact = factor(&red.a_ff, MatrixRole::Spd)?;
    let s_apply = |x: &[f64]| red.b_ff.apply(&solve(&a_fact, &red.bt_ff.apply(x)));
    let (lambda, _) = min_generalized_eig(s_apply, &red.m_ff)?;
    if lambda <= 0.0 {
        return Err(Error::NonConvergence(format!(
            "nonpositive smallest eigenvalue {lambda:.3e}"
        )));
    }
    Ok(InfSupResult {
        beta_h: lambda.sqrt(),
        level: sys.mesh.level as usize,
        k: sys.k,
    })
}

/// Full-orthogonalization GMRES without restart, for operators only
/// available through their action.
fn gmres(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / bnorm).collect()];
    let mut h_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![bnorm];
    for j in 0..max_iter {
        let mut w = apply(&basis[j]);
        let mut hcol = Vec::with_capacity(j + 2);
        for vi in basis.iter() {
            let hij = dot(&w, vi);
            axpy(-hij, vi, &mut w);
            hcol.push(hij);
        }
        let hnext = norm2(&w);
        hcol.push(hnext);
        for i in 0..j {
            let t = cs[i] * hcol[i] + sn[i] * hcol[i + 1];
            hcol[i + 1] = -sn[i] * hcol[i] + cs[i] * hcol[i + 1];
            hcol[i] = t;
        }
        let denom = (hcol[j] * hcol[j] + hcol[j + 1] * hcol[j + 1]).sqrt();
        let (c, s) = if denom == 0.0 {
            (1.0, 0.0)
        } else {
            (hcol[j] / denom, hcol[j + 1] / denom)
        };
        hcol[j] = denom;
        hcol[j + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[j]);
        g[j] *= c;
        h_cols.push(hcol);
        let res = g[j + 1].abs();
        if res <= rel_tol * bnorm || hnext == 0.0 || j + 1 == max_iter {
            if res > rel_tol * bnorm && hnext != 0.0 {
                return Err(Error::NonConvergence(format!(
                    "gmres stalled at relative residual {:.3e}",
                    res / bnorm
                )));
            }
            let m = j + 1;
            let mut y = vec![0.0; m];
            for i in (0..m).rev() {
                let mut acc = g[i];
                for (l, yl) in y.iter().enumerate().skip(i + 1) {
                    acc -= h_cols[l][i] * yl;
                }
                y[i] = acc / h_cols[i][i];
            }
            let mut x = vec![0.0; n];
            for (yi, vi) in y.iter().zip(&basis) {
                axpy(*yi, vi, &mut x);
            }
            return Ok(x);
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
    }
    unreachable!("gmres loop exits through the convergence branch");
}

/// Integrates the reduced pressure equation with the same Lobatto tableau as
/// the coupled integrator, applying the Schur complement only through
/// factorized elastic solves. Returns the pressure at every grid node.
pub fn schur_pressure_check(
    red: &ReducedOperators,
    tableau: &ButcherTableau,
    grid: &TimeGrid,
    p0: &[f64],
    rhs: &DaeRhs,
) -> Result<Vec<Vec<f64>>> {
    let np = red.k_ff.nrows;
    if p0.len() != np {
        return Err(Error::DimensionMismatch {
            context: "schur_pressure_check initial pressure",
            expected: np,
            got: p0.len(),
        });
    }
    let a_fact = factor(&red.a_ff, MatrixRole::Spd)?;
    let s_apply = |x: &[f64]| red.b_ff.apply(&solve(&a_fact, &red.bt_ff.apply(x)));
    let reduced_rhs = |t: f64| -> Vec<f64> {
        let mut r = (rhs.g)(t);
        let fd = (rhs.f_dot)(t);
        axpy(-1.0, &red.b_ff.apply(&solve(&a_fact, &fd)), &mut r);
        r
    };
    let s = tableau.s;
    let sm1 = s - 1;
    let tau = grid.tau();
    let coupled = |x: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; sm1 * np];
        for jj in 0..sm1 {
            let kx = red.k_ff.apply(&x[jj * np..(jj + 1) * np]);
            for ii in 0..sm1 {
                let scale = tau * tableau.a[ii + 1][jj + 1];
                axpy(scale, &kx, &mut out[ii * np..(ii + 1) * np]);
            }
        }
        for ii in 0..sm1 {
            let sx = s_apply(&x[ii * np..(ii + 1) * np]);
            axpy(1.0, &sx, &mut out[ii * np..(ii + 1) * np]);
        }
        out
    };

    let mut p = p0.to_vec();
    let mut trajectory = vec![p.clone()];
    for n in 0..grid.n_steps {
        let tn = grid.node(n);
        let kp = red.k_ff.apply(&p);
        let mut r1 = reduced_rhs(tn);
        axpy(-1.0, &kp, &mut r1);
        let k1 = gmres(&s_apply, &r1, 1e-13, 2 * np + 50)?;
        let kk1 = red.k_ff.apply(&k1);
        let mut big_rhs = vec![0.0; sm1 * np];
        for ii in 0..sm1 {
            let ti = tn + tableau.c[ii + 1] * tau;
            let mut ri = reduced_rhs(ti);
            axpy(-1.0, &kp, &mut ri);
            axpy(-tau * tableau.a[ii + 1][0], &kk1, &mut ri);
            big_rhs[ii * np..(ii + 1) * np].copy_from_slice(&ri);
        }
        let kappa = gmres(&coupled, &big_rhs, 1e-13, 2 * sm1 * np + 50)?;
        axpy(tau * tableau.b[0], &k1, &mut p);
        for ii in 0..sm1 {
            axpy(
                tau * tableau.b[ii + 1],
                &kappa[ii * np..(ii + 1) * np],
                &mut p,
            );
        }
        trajectory.push(p.clone());
    }
    Ok(trajectory)
}
