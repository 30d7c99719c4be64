//! Finite-element library for the quasistatic Biot consolidation system.
//!
//! The discretization combines inf-sup stable Taylor-Hood pairs (vector
//! `P_{k+1}` for the displacement, scalar `P_k` for the pore pressure) on
//! uniformly refined triangulations of the unit square with stiffly accurate
//! Lobatto-IIIA collocation in time, applied to the index-1
//! differential-algebraic system obtained by differentiating the elastic
//! constraint. The crate exposes the building blocks (meshes, reference
//! elements, global spaces, assembled block operators, direct solvers, time
//! integration) together with the diagnostics used to verify them: discrete
//! energy balance, compatibility drift, inf-sup constants, and convergence
//! error norms against manufactured solutions.

pub mod assemble;
pub mod casebiot;
pub mod diagnostics;
pub mod element;
pub mod mesh;
pub mod solver;
pub mod space;
pub mod sparse;
pub mod stationary;
pub mod timeint;

use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial degree {0} is outside the supported range {1}..={2}")]
    DegreeOutOfRange(usize, usize, usize),
    #[error("stage count {0} is outside the supported range 2..=4")]
    StageCountOutOfRange(usize),
    #[error("quadrature exactness degree {0} is unsupported (max 10)")]
    QuadratureDegreeUnsupported(usize),
    #[error("matrix is singular: {0}")]
    Singular(String),
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("trajectory carries no stage records")]
    MissingStageRecords,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
