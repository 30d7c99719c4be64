//! Lobatto-IIIA implicit Runge-Kutta integration of the coupled two-field
//! evolution, written for the differentiated system so that the elastic
//! balance acts through the saddle block and the diffusion term through the
//! algebraic part.
//!
//! The first stage of every step is explicit (the first tableau row is
//! zero); the remaining stages couple into one sparse block system whose
//! factorization is built once and reused across all steps.

use crate::assemble::ReducedOperators;
use crate::solver::{factor, solve, Factorization, MatrixRole};

use crate::sparse::{axpy, block_compose, CsrMatrix};
use crate::stationary::{compatibility_residual, saddle_matrix, State};
use crate::{Error, Result};

/// Butcher data of an s-stage method.
#[derive(Debug, Clone)]
pub struct ButcherTableau {
    pub s: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Uniform partition of `[0, t_end]` into `n_steps` steps.
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn tau(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.tau()
    }
}

/// Right-hand-side callables on free DOFs. `f_dot` is the time derivative of
/// the effective elastic load, `g` the effective source, and `f` the elastic
/// load itself where a compatibility check needs it.
pub struct DaeRhs<'a> {
    pub f_dot: &'a dyn Fn(f64) -> Vec<f64>,
    pub g: &'a dyn Fn(f64) -> Vec<f64>,
    pub f: Option<&'a dyn Fn(f64) -> Vec<f64>>,
}

/// Stage data of one step: stage times and the stage-derivative vectors of
/// both fields.
#[derive(Debug, Clone)]
pub struct StageRecord {
    pub t_stages: Vec<f64>,
    pub k_u: Vec<Vec<f64>>,
    pub k_p: Vec<Vec<f64>>,
}

/// Grid states plus per-step stage records.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<State>,
    pub records: Vec<StageRecord>,
}

fn lagrange_integral(c: &[f64], j: usize, upper: f64) -> f64 {
    // integrate the j-th Lagrange polynomial on the nodes c from 0 to upper
    // by mapping Gauss-Legendre quadrature of sufficient order
    let quad = crate::element::gauss_legendre_01(c.len());
    let mut acc = 0.0;
    for (&x, &w) in quad.0.iter().zip(&quad.1) {
        let t = upper * x;
        let mut val = 1.0;
        for (m, &cm) in c.iter().enumerate() {
            if m != j {
                val *= (t - cm) / (c[j] - cm);
            }
        }
        acc += w * val;
    }
    upper * acc
}

/// Butcher tableau of the s-stage Lobatto-IIIA collocation method.
pub fn lobatto_tableau(s: usize) -> Result<ButcherTableau> {
    let c: Vec<f64> = match s {
        2 => vec![0.0, 1.0],
        3 => vec![0.0, 0.5, 1.0],
        4 => {
            let r = 5.0f64.sqrt() / 10.0;
            vec![0.0, 0.5 - r, 0.5 + r, 1.0]
        }
        _ => return Err(Error::StageCountOutOfRange(s)),
    };
    let a = c
        .iter()
        .map(|&ci| (0..s).map(|j| lagrange_integral(&c, j, ci)).collect())
        .collect::<Vec<Vec<f64>>>();
    let b = (0..s).map(|j| lagrange_integral(&c, j, 1.0)).collect();
    Ok(ButcherTableau { s, a, b, c })
}

/// The reusable linear algebra of one (operators, tableau, step size)
/// combination.
pub struct StageSolver<'a> {
    red: &'a ReducedOperators,
    tableau: &'a ButcherTableau,
    tau: f64,
    nu: usize,
    np: usize,
    saddle_fact: Factorization,
    coupled_fact: Factorization,
}

impl<'a> StageSolver<'a> {
    pub fn new(
        red: &'a ReducedOperators,
        tableau: &'a ButcherTableau,
        tau: f64,
    ) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::NonPositiveStep(tau));
        }
        let nu = red.a_ff.nrows;
        let np = red.b_ff.nrows;
        let nb = nu + np;
        let saddle = saddle_matrix(red);
        let saddle_fact = factor(&saddle, MatrixRole::Saddle)?;
        let sm1 = tableau.s - 1;
        let mut blocks: Vec<(usize, usize, f64, &CsrMatrix)> = Vec::new();
        for i in 0..sm1 {
            blocks.push((i * nb, i * nb, 1.0, &red.a_ff));
            blocks.push((i * nb, i * nb + nu, -1.0, &red.bt_ff));
            blocks.push((i * nb + nu, i * nb, 1.0, &red.b_ff));
            for j in 0..sm1 {
                let w = tau * tableau.a[i + 1][j + 1];
                if w != 0.0 {
                    blocks.push((i * nb + nu, j * nb + nu, w, &red.k_ff));
                }
            }
        }
        let coupled = block_compose(sm1 * nb, sm1 * nb, &blocks);
        let coupled_fact = factor(&coupled, MatrixRole::StageBlock)?;
        Ok(Self {
            red,
            tableau,
            tau,
            nu,
            np,
            saddle_fact,
            coupled_fact,
        })
    }

    /// Advances one step and returns the new state with its stage record.
    pub fn step(&self, state: &State, rhs: &DaeRhs) -> Result<(State, StageRecord)> {
        let (nu, np, tau) = (self.nu, self.np, self.tau);
        let nb = nu + np;
        let s = self.tableau.s;
        let tn = state.t;

        let kp_n = self.red.k_ff.apply(&state.p);
        let mut r1 = vec![0.0; nb];
        r1[..nu].copy_from_slice(&(rhs.f_dot)(tn));
        let g_n = (rhs.g)(tn);
        for i in 0..np {
            r1[nu + i] = g_n[i] - kp_n[i];
        }
        let k1 = solve(&self.saddle_fact, &r1);

        let kk1 = self.red.k_ff.apply(&k1[nu..]);
        let mut big_rhs = vec![0.0; (s - 1) * nb];
        for i in 1..s {
            let ti = tn + self.tableau.c[i] * tau;
            let fd = (rhs.f_dot)(ti);
            let g = (rhs.g)(ti);
            let off = (i - 1) * nb;
            big_rhs[off..off + nu].copy_from_slice(&fd);
            let a_i1 = tau * self.tableau.a[i][0];
            for l in 0..np {
                big_rhs[off + nu + l] = g[l] - kp_n[l] - a_i1 * kk1[l];
            }
        }
        let kappa = solve(&self.coupled_fact, &big_rhs);

        let mut t_stages = Vec::with_capacity(s);
        let mut k_u = Vec::with_capacity(s);
        let mut k_p = Vec::with_capacity(s);
        t_stages.push(tn);
        k_u.push(k1[..nu].to_vec());
        k_p.push(k1[nu..].to_vec());
        for i in 1..s {
            let off = (i - 1) * nb;
            t_stages.push(tn + self.tableau.c[i] * tau);
            k_u.push(kappa[off..off + nu].to_vec());
            k_p.push(kappa[off + nu..off + nb].to_vec());
        }

        let mut u = state.u.clone();
        let mut p = state.p.clone();
        for i in 0..s {
            axpy(tau * self.tableau.b[i], &k_u[i], &mut u);
            axpy(tau * self.tableau.b[i], &k_p[i], &mut p);
        }
        let new_state = State {
            u,
            p,
            t: tn + tau,
        };
        Ok((
            new_state,
            StageRecord {
                t_stages,
                k_u,
                k_p,
            },
        ))
    }
}

/// One step with a freshly built stage solver.
pub fn step(
    red: &ReducedOperators,
    tableau: &ButcherTableau,
    state: &State,
    tau: f64,
    rhs: &DaeRhs,
) -> Result<State> {
    let solver = StageSolver::new(red, tableau, tau)?;
    Ok(solver.step(state, rhs)?.0)
}

/// Integrates over the whole grid, retaining stage records for diagnostics.
pub fn integrate(
    red: &ReducedOperators,
    tableau: &ButcherTableau,
    grid: &TimeGrid,
    initial: State,
    rhs: &DaeRhs,
) -> Result<Trajectory> {
    if let Some(f) = rhs.f {
        let r = compatibility_residual(red, &initial, &f(initial.t));
        if r > 1e-8 {
            eprintln!("warning: initial compatibility residual {r:.3e}");
        }
    }
    let solver = StageSolver::new(red, tableau, grid.tau())?;
    let mut states = Vec::with_capacity(grid.n_steps + 1);
    let mut records = Vec::with_capacity(grid.n_steps);
    states.push(initial);
    for _ in 0..grid.n_steps {
        let (next, record) = solver.step(states.last().expect("nonempty"), rhs)?;
        states.push(next);
        records.push(record);
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        records,
    })
}
