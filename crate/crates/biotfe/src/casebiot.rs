//! Manufactured solutions with closed-form data, and their discretization
//! into right-hand sides and initial states for a particular system.

use std::f64::consts::PI;

use crate::assemble::{
    assemble_load, assemble_scalar_load, Params, ReducedOperators,
};
use crate::element::triangle_quadrature;
use crate::space::{BcSpec, FeSystem};
use crate::stationary::{solve_initial_given_p0, solve_initial_given_phi0, State};
use crate::Result;

pub type VecField = Box<dyn Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync>;
pub type ScalarField = Box<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>;
pub type VecGradField = Box<dyn Fn(f64, [f64; 2]) -> [[f64; 2]; 2] + Send + Sync>;
pub type ScalarGradField = Box<dyn Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync>;

/// An exact solution pair together with the source data it induces.
///
/// `grad_u[a][b]` is the derivative of component `a` in direction `b`. The
/// sources satisfy the two balance equations for the exact fields, so a
/// discrete run against `f`, `g` can be compared with `u`, `p` directly.
pub struct ManufacturedCase {
    pub name: String,
    pub params: Params,
    pub bc: BcSpec,
    pub u: VecField,
    pub u_dot: VecField,
    pub grad_u: VecGradField,
    pub p: ScalarField,
    pub p_dot: ScalarField,
    pub grad_p: ScalarGradField,
    pub f: VecField,
    pub f_dot: VecField,
    pub g: ScalarField,
}

/// The smooth trigonometric benchmark on the unit square.
///
/// With `phi = sin(2 pi x) sin(2 pi y)` the pair `p = psi(t) phi`,
/// `u = psi(t) / (8 pi^2) grad phi` solves the system for unit parameters
/// and the sources `f = 4 psi grad phi`, `g = (8 pi^2 psi - psi') phi`.
/// The amplitude starts at rest, `psi(0) = psi'(0) = 0`, and both fields
/// honour homogeneous boundary values: the tangential displacement trace
/// and the pressure trace vanish on all four sides.
pub fn biot_sine_case() -> ManufacturedCase {
    let den = 64.0 * PI.powi(4) + 4.0 * PI * PI;
    let psi = move |t: f64| {
        (8.0 * PI * PI * (2.0 * PI * t).sin() - 2.0 * PI * (2.0 * PI * t).cos()
            + 2.0 * PI * (-8.0 * PI * PI * t).exp())
            / den
    };
    let psi_dot = move |t: f64| {
        (16.0 * PI.powi(3) * (2.0 * PI * t).cos() + 4.0 * PI * PI * (2.0 * PI * t).sin()
            - 16.0 * PI.powi(3) * (-8.0 * PI * PI * t).exp())
            / den
    };
    fn phi(x: [f64; 2]) -> f64 {
        (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
    }
    fn grad_phi(x: [f64; 2]) -> [f64; 2] {
        [
            2.0 * PI * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin(),
            2.0 * PI * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos(),
        ]
    }
    fn hess_phi(x: [f64; 2]) -> [[f64; 2]; 2] {
        let s = 4.0 * PI * PI;
        let mixed = s * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos();
        [[-s * phi(x), mixed], [mixed, -s * phi(x)]]
    }
    let scale = 1.0 / (8.0 * PI * PI);

    ManufacturedCase {
        name: "biot_sine".to_string(),
        params: Params { mu: 1.0, lambda: 1.0, alpha: 1.0, kappa: 1.0 },
        bc: BcSpec::tangential_dirichlet(),
        u: Box::new(move |t, x| {
            let g = grad_phi(x);
            let c = scale * psi(t);
            [c * g[0], c * g[1]]
        }),
        u_dot: Box::new(move |t, x| {
            let g = grad_phi(x);
            let c = scale * psi_dot(t);
            [c * g[0], c * g[1]]
        }),
        grad_u: Box::new(move |t, x| {
            let h = hess_phi(x);
            let c = scale * psi(t);
            [[c * h[0][0], c * h[0][1]], [c * h[1][0], c * h[1][1]]]
        }),
        p: Box::new(move |t, x| psi(t) * phi(x)),
        p_dot: Box::new(move |t, x| psi_dot(t) * phi(x)),
        grad_p: Box::new(move |t, x| {
            let g = grad_phi(x);
            [psi(t) * g[0], psi(t) * g[1]]
        }),
        f: Box::new(move |t, x| {
            let g = grad_phi(x);
            let c = 4.0 * psi(t);
            [c * g[0], c * g[1]]
        }),
        f_dot: Box::new(move |t, x| {
            let g = grad_phi(x);
            let c = 4.0 * psi_dot(t);
            [c * g[0], c * g[1]]
        }),
        g: Box::new(move |t, x| (8.0 * PI * PI * psi(t) - psi_dot(t)) * phi(x)),
    }
}

/// A case that lies in the discrete spaces: `u` of polynomial degree `k + 1`,
/// `p` of degree `k`, both scaled by `1 + rate * t`.
///
/// A discrete run reproduces the nodal interpolant of these fields up to
/// solver tolerances, which pins down assembly, lifting of inhomogeneous
/// boundary values, and time stepping at once. With `rate = 0` the data is
/// stationary and a compatible start must not move.
fn polynomial_family(k: usize, rate: f64, name: String) -> ManufacturedCase {
    assert!((1..=3).contains(&k), "polynomial case needs 1 <= k <= 3");
    let params = Params { mu: 1.3, lambda: 0.7, alpha: 0.9, kappa: 2.0 };
    let ku = k as i32 + 1;
    let kp = k as i32;
    let theta = move |t: f64| 1.0 + rate * t;
    let f_coef = k as f64 * (params.alpha - (2.0 * params.mu + params.lambda) * (ku as f64));
    let diff_coef = params.kappa * (k * (k.max(1) - 1)) as f64;
    let g_poly = move |t: f64, x: [f64; 2]| {
        // Guarded so k = 1 never evaluates a negative power at the origin.
        if k < 2 {
            0.0
        } else {
            diff_coef * theta(t) * (x[0].powi(kp - 2) + x[1].powi(kp - 2))
        }
    };
    ManufacturedCase {
        name,
        params,
        bc: BcSpec::full_dirichlet(),
        u: Box::new(move |t, x| [theta(t) * x[0].powi(ku), theta(t) * x[1].powi(ku)]),
        u_dot: Box::new(move |t, x| {
            let _ = t;
            [rate * x[0].powi(ku), rate * x[1].powi(ku)]
        }),
        grad_u: Box::new(move |t, x| {
            let c = theta(t) * ku as f64;
            [[c * x[0].powi(ku - 1), 0.0], [0.0, c * x[1].powi(ku - 1)]]
        }),
        p: Box::new(move |t, x| theta(t) * (x[0].powi(kp) + x[1].powi(kp))),
        p_dot: Box::new(move |t, x| {
            let _ = t;
            rate * (x[0].powi(kp) + x[1].powi(kp))
        }),
        grad_p: Box::new(move |t, x| {
            let c = theta(t) * kp as f64;
            [c * x[0].powi(kp - 1), c * x[1].powi(kp - 1)]
        }),
        f: Box::new(move |t, x| {
            let c = f_coef * theta(t);
            [c * x[0].powi(kp - 1), c * x[1].powi(kp - 1)]
        }),
        f_dot: Box::new(move |t, x| {
            let _ = t;
            let c = f_coef * rate;
            [c * x[0].powi(kp - 1), c * x[1].powi(kp - 1)]
        }),
        g: Box::new(move |t, x| {
            params.alpha * rate * (ku as f64) * (x[0].powi(kp) + x[1].powi(kp))
                - g_poly(t, x)
        }),
    }
}

/// The polynomial case growing linearly in time.
pub fn polynomial_case(k: usize) -> ManufacturedCase {
    polynomial_family(k, 1.0, format!("polynomial_k{k}"))
}

/// The polynomial case with time-independent data.
pub fn polynomial_case_steady(k: usize) -> ManufacturedCase {
    polynomial_family(k, 0.0, format!("polynomial_steady_k{k}"))
}

/// A manufactured case bound to one assembled system: produces the free-DOF
/// right-hand sides with inhomogeneous boundary values lifted into them, the
/// boundary traces themselves, and compatible initial states.
pub struct DiscreteCase<'a> {
    pub sys: &'a FeSystem,
    pub red: &'a ReducedOperators,
    pub case: &'a ManufacturedCase,
    pub quad_degree: usize,
}

impl<'a> DiscreteCase<'a> {
    pub fn new(
        sys: &'a FeSystem,
        red: &'a ReducedOperators,
        case: &'a ManufacturedCase,
    ) -> Result<Self> {
        let quad_degree = (2 * sys.k + 2).max(8);
        triangle_quadrature(quad_degree)?;
        Ok(Self { sys, red, case, quad_degree })
    }

    /// Exact displacement trace on the constrained DOFs at time `t`.
    pub fn boundary_u(&self, t: f64) -> Vec<f64> {
        self.sys.boundary_displacement(|x| (self.case.u)(t, x))
    }

    /// Exact pressure trace on the constrained DOFs at time `t`.
    pub fn boundary_p(&self, t: f64) -> Vec<f64> {
        self.sys.boundary_pressure(|x| (self.case.p)(t, x))
    }

    fn boundary_u_dot(&self, t: f64) -> Vec<f64> {
        self.sys.boundary_displacement(|x| (self.case.u_dot)(t, x))
    }

    fn boundary_p_dot(&self, t: f64) -> Vec<f64> {
        self.sys.boundary_pressure(|x| (self.case.p_dot)(t, x))
    }

    /// Momentum right-hand side on free DOFs, boundary terms lifted.
    pub fn f_free(&self, t: f64) -> Vec<f64> {
        let full = assemble_load(self.sys, self.quad_degree, |x| (self.case.f)(t, x))
            .expect("quadrature degree was validated on construction");
        let mut v = self.sys.restrict_u(&full);
        self.red.a_fc.matvec_add_scaled(-1.0, &self.boundary_u(t), &mut v);
        self.red.bt_fc.matvec_add_scaled(1.0, &self.boundary_p(t), &mut v);
        v
    }

    /// Time derivative of [`Self::f_free`].
    pub fn f_dot_free(&self, t: f64) -> Vec<f64> {
        let full = assemble_load(self.sys, self.quad_degree, |x| (self.case.f_dot)(t, x))
            .expect("quadrature degree was validated on construction");
        let mut v = self.sys.restrict_u(&full);
        self.red.a_fc.matvec_add_scaled(-1.0, &self.boundary_u_dot(t), &mut v);
        self.red.bt_fc.matvec_add_scaled(1.0, &self.boundary_p_dot(t), &mut v);
        v
    }

    /// Mass-balance right-hand side on free DOFs, boundary terms lifted.
    pub fn g_free(&self, t: f64) -> Vec<f64> {
        let full = assemble_scalar_load(self.sys, self.quad_degree, |x| (self.case.g)(t, x))
            .expect("quadrature degree was validated on construction");
        let mut v = self.sys.restrict_p(&full);
        self.red.b_fc.matvec_add_scaled(-1.0, &self.boundary_u_dot(t), &mut v);
        self.red.k_fc.matvec_add_scaled(-1.0, &self.boundary_p(t), &mut v);
        v
    }

    /// Compatible start from the interpolated initial pressure.
    pub fn initial_state(&self) -> Result<State> {
        let p_full = self.sys.interpolate_pressure(|x| (self.case.p)(0.0, x));
        let p0 = self.sys.restrict_p(&p_full);
        solve_initial_given_p0(self.red, &self.f_free(0.0), &p0)
    }

    /// Compatible start prescribing the coupling row of the interpolated
    /// initial displacement instead of the pressure.
    pub fn initial_state_phi0(&self) -> Result<State> {
        let u_full = self.sys.interpolate_displacement(|x| (self.case.u)(0.0, x));
        let mut phi0 = self.red.b_ff.apply(&self.sys.restrict_u(&u_full));
        self.red.b_fc.matvec_add_scaled(1.0, &self.boundary_u(0.0), &mut phi0);
        solve_initial_given_phi0(self.red, &self.f_free(0.0), &phi0)
    }
}
