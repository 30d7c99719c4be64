//! Reference-triangle Lagrange elements of degree 1..4, triangle quadrature
//! rules of prescribed polynomial exactness, and Gauss-Lobatto points on the
//! unit interval.

use crate::{Error, Result};

/// Lagrange element on the reference triangle with vertices (0,0), (1,0),
/// (0,1) and nodes on the principal lattice.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub degree: usize,
    /// Node coordinates in reference space.
    pub nodes: Vec<[f64; 2]>,
    /// Barycentric multi-index (a,b,c) of each node, a+b+c = degree.
    pub multi: Vec<[usize; 3]>,
}

/// Builds the degree-1..4 Lagrange element.
pub fn reference_element(degree: usize) -> Result<ReferenceElement> {
    if !(1..=4).contains(&degree) {
        return Err(Error::DegreeOutOfRange(degree, 1, 4));
    }
    let m = degree;
    let mut nodes = Vec::new();
    let mut multi = Vec::new();
    for j in 0..=m {
        for i in 0..=(m - j) {
            nodes.push([i as f64 / m as f64, j as f64 / m as f64]);
            multi.push([m - i - j, i, j]);
        }
    }
    Ok(ReferenceElement {
        degree,
        nodes,
        multi,
    })
}

// Value and derivative of P_q(xi) = prod_{r<q} (xi - r)/(q - r).
fn silvester(q: usize, xi: f64) -> (f64, f64) {
    let mut val = 1.0;
    let mut dval = 0.0;
    for r in 0..q {
        let denom = (q - r) as f64;
        dval = dval * (xi - r as f64) / denom + val / denom;
        val *= (xi - r as f64) / denom;
    }
    (val, dval)
}

impl ReferenceElement {
    pub fn basis_count(&self) -> usize {
        self.nodes.len()
    }

    /// Value of basis function `i` at a reference point.
    pub fn eval(&self, i: usize, x: [f64; 2]) -> f64 {
        let m = self.degree as f64;
        let lam = [1.0 - x[0] - x[1], x[0], x[1]];
        let [a, b, c] = self.multi[i];
        let (p0, _) = silvester(a, m * lam[0]);
        let (p1, _) = silvester(b, m * lam[1]);
        let (p2, _) = silvester(c, m * lam[2]);
        p0 * p1 * p2
    }

    /// Gradient of basis function `i` at a reference point.
    pub fn grad(&self, i: usize, x: [f64; 2]) -> [f64; 2] {
        let m = self.degree as f64;
        let lam = [1.0 - x[0] - x[1], x[0], x[1]];
        let [a, b, c] = self.multi[i];
        let (p0, d0) = silvester(a, m * lam[0]);
        let (p1, d1) = silvester(b, m * lam[1]);
        let (p2, d2) = silvester(c, m * lam[2]);
        // lambda gradients: d(lam0) = (-1,-1), d(lam1) = (1,0), d(lam2) = (0,1)
        let gx = m * (-d0 * p1 * p2 + p0 * d1 * p2);
        let gy = m * (-d0 * p1 * p2 + p0 * p1 * d2);
        [gx, gy]
    }

    /// Values of all basis functions at a reference point.
    pub fn eval_all(&self, x: [f64; 2]) -> Vec<f64> {
        (0..self.basis_count()).map(|i| self.eval(i, x)).collect()
    }

    /// Gradients of all basis functions at a reference point.
    pub fn grad_all(&self, x: [f64; 2]) -> Vec<[f64; 2]> {
        (0..self.basis_count()).map(|i| self.grad(i, x)).collect()
    }
}

/// Quadrature rule on the reference triangle.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

/// Rule integrating all monomials of total degree up to `exactness_degree`
/// exactly. Degrees 0..=2 use symmetric rules with rational weights; degrees
/// 3..=10 use a collapsed-coordinate tensor Gauss rule, which keeps all
/// weights positive at every degree.
pub fn triangle_quadrature(exactness_degree: usize) -> Result<QuadratureRule> {
    if exactness_degree > 10 {
        return Err(Error::QuadratureDegreeUnsupported(exactness_degree));
    }
    let (points, weights) = match exactness_degree {
        0 | 1 => (vec![[1.0 / 3.0, 1.0 / 3.0]], vec![0.5]),
        2 => (
            vec![[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]],
            vec![1.0 / 6.0; 3],
        ),
        d => {
            // x = xi (1 - eta), y = eta maps the unit square onto the
            // triangle with Jacobian (1 - eta); monomial x^a y^b pulls back
            // to degree a in xi and a + b + 1 in eta
            let n_xi = (d + 2) / 2;
            let n_eta = (d + 3) / 2;
            let (xi, wxi) = gauss_legendre_01(n_xi);
            let (eta, weta) = gauss_legendre_01(n_eta);
            let mut points = Vec::with_capacity(n_xi * n_eta);
            let mut weights = Vec::with_capacity(n_xi * n_eta);
            for (j, &e) in eta.iter().enumerate() {
                for (i, &x) in xi.iter().enumerate() {
                    points.push([x * (1.0 - e), e]);
                    weights.push(wxi[i] * weta[j] * (1.0 - e));
                }
            }
            (points, weights)
        }
    };
    Ok(QuadratureRule {
        points,
        weights,
        exactness_degree,
    })
}

/// Gauss-Legendre nodes and weights on `[0,1]`.
pub(crate) fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton iteration on P_n over [-1,1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

// Value and derivative of the Legendre polynomial P_n on [-1,1].
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Lobatto nodes and weights on `[0,1]` for 2..4 points.
#[derive(Debug, Clone)]
pub struct LobattoPoints {
    pub s: usize,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
}

/// Standard Gauss-Lobatto points, exact for polynomials of degree `2s - 3`.
pub fn lobatto_points(s: usize) -> Result<LobattoPoints> {
    let (c, b) = match s {
        2 => (vec![0.0, 1.0], vec![0.5, 0.5]),
        3 => (vec![0.0, 0.5, 1.0], vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]),
        4 => {
            let r = 5.0f64.sqrt();
            (
                vec![0.0, (5.0 - r) / 10.0, (5.0 + r) / 10.0, 1.0],
                vec![1.0 / 12.0, 5.0 / 12.0, 5.0 / 12.0, 1.0 / 12.0],
            )
        }
        _ => return Err(Error::StageCountOutOfRange(s)),
    };
    Ok(LobattoPoints { s, c, b })
}

/// Exact integral of `x^a y^b` over the reference triangle.
pub fn monomial_integral(a: usize, b: usize) -> f64 {
    // a! b! / (a + b + 2)!
    let mut val = 1.0;
    for i in 1..=a {
        val *= i as f64;
    }
    for i in 1..=b {
        val *= i as f64;
    }
    for i in 1..=(a + b + 2) {
        val /= i as f64;
    }
    val
}
