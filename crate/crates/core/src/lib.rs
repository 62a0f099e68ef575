//! Constrained estimation for superposition models `y = X·Σθᵢ + ω`.
//!
//! Each component `θᵢ` is constrained to a norm ball `Rᵢ(θᵢ) ≤ αᵢ`; the
//! estimator minimizes `‖y − X·Σθᵢ‖²` with an accelerated projected gradient
//! method. Alongside the solver, the crate estimates the geometry that governs
//! recovery (structural coherence between error cones, restricted eigenvalues,
//! Gaussian widths) and reproduces the synthetic recovery experiments.

pub mod error;
pub mod linalg;
pub mod norms;
pub mod random;
pub mod solver;
pub mod geometry;
pub mod experiments;

pub use error::{Error, Result};
pub use linalg::{dct_matrix, random_orthogonal, svd, DenseMatrix, SvdFactors};
pub use norms::{ComponentSpec, NormKind};
pub use solver::{
    apg_solve, apg_solve_observed, gradient_component, objective, solve_penalized, SolverConfig,
    SolverResult, SolverState, SuperpositionProblem,
};
pub use geometry::{ConeSample, GeometryReport, WidthEstimate, WidthMethod};
pub use experiments::{LowRankSparseConfig, McaConfig, McaNorm, QKind, Summary, TrialRecord};
