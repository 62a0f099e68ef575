use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::norms::{ComponentSpec, NormKind};
use crate::solver::{apg_solve, solve_penalized, SolverConfig, SolverResult, SuperpositionProblem};

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorComparison {
    pub constrained: SolverResult,
    pub penalized: SolverResult,
    /// `Σᵢ ‖θ̂ᵢ^con − θ̂ᵢ^pen‖₂`.
    pub decomposition_difference: f64,
}

/// Solves the same instance with the norm-ball constraints and with the
/// penalties `λᵢRᵢ`.
pub fn compare_estimators(
    problem: &SuperpositionProblem,
    lambdas: &[f64],
    solver: &SolverConfig,
) -> Result<EstimatorComparison> {
    if problem.components().iter().any(|c| c.kind() == NormKind::KSupport) {
        return Err(Error::Unsupported("estimator comparison with a k-support component"));
    }
    let constrained = apg_solve(problem, solver)?;
    let penalized = solve_penalized(problem, lambdas, solver)?;
    let decomposition_difference = constrained
        .estimates
        .iter()
        .zip(&penalized.estimates)
        .map(|(a, b)| norm2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()))
        .sum();
    Ok(EstimatorComparison {
        constrained,
        penalized,
        decomposition_difference,
    })
}

/// `min over θ₁ + θ₂ = θ of λ₁R₁(θ₁) + λ₂R₂(θ₂)` by exhaustive grid search
/// of `θ₁` over `[−2‖θ‖∞, 2‖θ‖∞]^d`, `d ≤ 3`. Test oracle only.
pub fn infimal_convolution_norm_bruteforce(
    norms: &[(ComponentSpec, f64)],
    theta: &[f64],
    grid_step: f64,
) -> Result<f64> {
    if norms.len() != 2 {
        return Err(Error::Unsupported("brute-force infimal convolution needs exactly two norms"));
    }
    let d = theta.len();
    if d == 0 || d > 3 {
        return Err(Error::Unsupported("brute-force infimal convolution is limited to dimension ≤ 3"));
    }
    if !(grid_step > 0.0 && grid_step <= 0.05) {
        return Err(Error::InvalidArgument(format!("grid_step must lie in (0, 0.05], got {grid_step}")));
    }
    for (spec, lambda) in norms {
        if spec.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "infimal convolution norm dimension",
                expected: d,
                found: spec.dim(),
            });
        }
        if !(*lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("weights must be positive, got {lambda}")));
        }
    }
    let half = 2.0 * theta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if half == 0.0 {
        return Ok(0.0);
    }
    let steps = (2.0 * half / grid_step).round() as usize;
    let coord = |i: usize| -half + 2.0 * half * i as f64 / steps as f64;
    let (r1, l1) = &norms[0];
    let (r2, l2) = &norms[1];

    let mut best = f64::INFINITY;
    let mut first = vec![0.0; d];
    let mut second = vec![0.0; d];
    let total = (steps + 1).pow(d as u32);
    for flat in 0..total {
        let mut rest = flat;
        for j in 0..d {
            first[j] = coord(rest % (steps + 1));
            rest /= steps + 1;
            second[j] = theta[j] - first[j];
        }
        let value = l1 * r1.eval(&first)? + l2 * r2.eval(&second)?;
        best = best.min(value);
    }
    Ok(best)
}

/// Gauge of `conv({R₁ ≤ 1/λ₁} ∪ {R₂ ≤ 1/λ₂})` at a planar `θ`, from the
/// support function `h(u) = maxᵢ R_i°(u)/λᵢ` sampled at `angles` unit
/// directions: `γ(θ) ≈ max_u ⟨θ, u⟩ / h(u)`.
pub fn hull_gauge_by_support(norms: &[(ComponentSpec, f64)], theta: &[f64], angles: usize) -> Result<f64> {
    if theta.len() != 2 {
        return Err(Error::Unsupported("support-function gauge is planar only"));
    }
    if angles == 0 {
        return Err(Error::InvalidArgument("angles must be at least 1".into()));
    }
    let mut best = 0.0f64;
    for j in 0..angles {
        let a = 2.0 * std::f64::consts::PI * j as f64 / angles as f64;
        let u = [a.cos(), a.sin()];
        let mut h = 0.0f64;
        for (spec, lambda) in norms {
            h = h.max(spec.dual_eval(&u)? / lambda);
        }
        best = best.max((theta[0] * u[0] + theta[1] * u[1]) / h);
    }
    Ok(best)
}
