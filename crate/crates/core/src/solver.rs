//! Accelerated projected gradient for
//! `min ‖y − X·Σθᵢ‖²  s.t.  Rᵢ(θᵢ) ≤ αᵢ`, plus a penalized variant that
//! replaces each ball projection by the proximal map of `λᵢRᵢ`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix};
use crate::norms::{ComponentSpec, NormKind};

/// Relative slack when checking that a ground-truth component fits its ball.
const GROUND_TRUTH_SLACK: f64 = 1e-8;

/// Observation `y`, design `X`, and one constraint per component.
#[derive(Debug, Clone)]
pub struct SuperpositionProblem {
    y: Vec<f64>,
    design: DenseMatrix,
    components: Vec<ComponentSpec>,
    ground_truth: Option<Vec<Vec<f64>>>,
}

impl SuperpositionProblem {
    pub fn new(y: Vec<f64>, design: DenseMatrix, components: Vec<ComponentSpec>) -> Result<Self> {
        check_len("observation length vs design rows", design.rows(), y.len())?;
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one component is required".into(),
            ));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("observation entry {i}")));
        }
        for spec in &components {
            check_len("component dimension vs design columns", design.cols(), spec.dim())?;
        }
        Ok(Self {
            y,
            design,
            components,
            ground_truth: None,
        })
    }

    /// Attaches the true components; each must lie in its ball.
    pub fn with_ground_truth(mut self, truth: Vec<Vec<f64>>) -> Result<Self> {
        check_len("ground truth component count", self.components.len(), truth.len())?;
        for (i, (spec, theta)) in self.components.iter().zip(&truth).enumerate() {
            let value = spec.eval(theta)?;
            if value > spec.radius() * (1.0 + GROUND_TRUTH_SLACK) + 1e-300 {
                return Err(Error::InvalidArgument(format!(
                    "ground truth component {i} has norm {value} above radius {}",
                    spec.radius()
                )));
            }
        }
        self.ground_truth = Some(truth);
        Ok(self)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn design(&self) -> &DenseMatrix {
        &self.design
    }

    pub fn components(&self) -> &[ComponentSpec] {
        &self.components
    }

    pub fn ground_truth(&self) -> Option<&[Vec<f64>]> {
        self.ground_truth.as_deref()
    }

    pub fn n(&self) -> usize {
        self.design.rows()
    }

    pub fn p(&self) -> usize {
        self.design.cols()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    fn check_thetas(&self, thetas: &[Vec<f64>]) -> Result<()> {
        check_len("component count", self.k(), thetas.len())?;
        for t in thetas {
            check_len("component length", self.p(), t.len())?;
        }
        Ok(())
    }

    /// `‖θ̂ᵢ − θᵢ*‖₂` per component, when ground truth is attached.
    pub fn componentwise_error(&self, estimates: &[Vec<f64>]) -> Option<Vec<f64>> {
        self.ground_truth.as_ref().map(|truth| {
            truth
                .iter()
                .zip(estimates)
                .map(|(t, e)| {
                    t.iter()
                        .zip(e)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial step size, restored at every iteration.
    pub eta0: f64,
    /// Backtracking shrink factor in (0, 1).
    pub beta: f64,
    pub max_iter: usize,
    /// Stop when `|f_t − f_{t−1}| ≤ rel_tol·max(1, f_{t−1})`.
    pub rel_tol: f64,
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta0: 1.0,
            beta: 0.5,
            max_iter: 5000,
            rel_tol: 1e-10,
            max_backtracks: 60,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta0 must be positive, got {}", self.eta0)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidArgument(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if self.max_iter == 0 || self.max_backtracks == 0 {
            return Err(Error::InvalidArgument(
                "max_iter and max_backtracks must be positive".into(),
            ));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("rel_tol must be nonnegative, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

/// Loop variables of the accelerated method.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Extrapolated points `θᵢᵗ` (may be infeasible).
    pub theta: Vec<Vec<f64>>,
    /// Latest feasible iterates `θ̃ᵢᵗ`.
    pub theta_tilde_prev: Vec<Vec<f64>>,
    /// Momentum sequence value `α_t`.
    pub momentum: f64,
    pub iter: usize,
    pub objective_trace: Vec<f64>,
}

/// What an observer sees after each accepted step.
#[derive(Debug)]
pub struct IterationEvent<'a> {
    pub iteration: usize,
    pub step_size: f64,
    pub backtracks: usize,
    /// `f(θ̃ᵗ⁺¹)` as evaluated by the sufficient-decrease test.
    pub armijo_lhs: f64,
    /// `f(θᵗ) + ∇f(θᵗ)ᵀ(θ̃ᵗ⁺¹ − θᵗ) + Σ‖θ̃ᵢᵗ⁺¹ − θᵢᵗ‖²/(2η)` as evaluated.
    pub armijo_rhs: f64,
    pub state: &'a SolverState,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverResult {
    pub estimates: Vec<Vec<f64>>,
    /// Final data-fit value `‖y − X·Σθ̂ᵢ‖²`.
    pub objective: f64,
    pub iterations: usize,
    pub total_backtracks: usize,
    pub objective_trace: Vec<f64>,
    pub componentwise_error: Option<Vec<f64>>,
    pub total_error: Option<f64>,
}

/// `‖y − X·Σθᵢ‖²`.
pub fn objective(problem: &SuperpositionProblem, thetas: &[Vec<f64>]) -> Result<f64> {
    problem.check_thetas(thetas)?;
    let mut ws = Workspace::new(problem);
    Ok(ws.objective_at(problem, thetas))
}

/// Gradient of the data fit with respect to any single component:
/// `−2·Xᵀ(y − X·Σθᵢ)`.
pub fn gradient_component(problem: &SuperpositionProblem, thetas: &[Vec<f64>]) -> Result<Vec<f64>> {
    problem.check_thetas(thetas)?;
    let mut ws = Workspace::new(problem);
    ws.objective_at(problem, thetas);
    ws.gradient(problem);
    Ok(ws.grad)
}

/// Constrained estimator: accelerated projected gradient with backtracking.
pub fn apg_solve(problem: &SuperpositionProblem, config: &SolverConfig) -> Result<SolverResult> {
    apg_solve_observed(problem, config, |_| {})
}

pub fn apg_solve_observed(
    problem: &SuperpositionProblem,
    config: &SolverConfig,
    observer: impl FnMut(&IterationEvent<'_>),
) -> Result<SolverResult> {
    run(problem, config, &Update::Project, observer)
}

/// Penalized estimator `min ‖y − X·Σθᵢ‖² + Σλᵢ·Rᵢ(θᵢ)`; component radii are
/// ignored. The returned `objective` is the data fit alone.
pub fn solve_penalized(
    problem: &SuperpositionProblem,
    lambdas: &[f64],
    config: &SolverConfig,
) -> Result<SolverResult> {
    check_len("penalty weights", problem.k(), lambdas.len())?;
    if problem.components().iter().any(|c| c.kind() == NormKind::KSupport) {
        return Err(Error::Unsupported("penalized estimation with a k-support component"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(format!("penalty weights must be positive, got {l}")));
    }
    run(problem, config, &Update::Prox(lambdas), |_| {})
}

enum Update<'a> {
    Project,
    Prox(&'a [f64]),
}

impl Update<'_> {
    fn apply(&self, spec: &ComponentSpec, i: usize, v: &[f64], eta: f64) -> Result<Vec<f64>> {
        match self {
            Update::Project => spec.project(v),
            Update::Prox(lambdas) => spec.prox(v, eta * lambdas[i]),
        }
    }

    fn penalty(&self, specs: &[ComponentSpec], thetas: &[Vec<f64>]) -> Result<f64> {
        match self {
            Update::Project => Ok(0.0),
            Update::Prox(lambdas) => {
                let mut total = 0.0;
                for ((spec, t), l) in specs.iter().zip(thetas).zip(lambdas.iter()) {
                    total += l * spec.eval(t)?;
                }
                Ok(total)
            }
        }
    }
}

struct Workspace {
    sum: Vec<f64>,
    resid: Vec<f64>,
    grad: Vec<f64>,
}

impl Workspace {
    fn new(problem: &SuperpositionProblem) -> Self {
        Self {
            sum: vec![0.0; problem.p()],
            resid: vec![0.0; problem.n()],
            grad: vec![0.0; problem.p()],
        }
    }

    /// Fills `sum` and `resid` for `thetas` and returns the data fit.
    fn objective_at(&mut self, problem: &SuperpositionProblem, thetas: &[Vec<f64>]) -> f64 {
        self.sum.iter_mut().for_each(|x| *x = 0.0);
        for t in thetas {
            for (s, x) in self.sum.iter_mut().zip(t) {
                *s += x;
            }
        }
        problem.design.matvec_into(&self.sum, &mut self.resid);
        for (r, y) in self.resid.iter_mut().zip(&problem.y) {
            *r = y - *r;
        }
        dot(&self.resid, &self.resid)
    }

    /// `grad = −2·Xᵀ·resid` from the last `objective_at`.
    fn gradient(&mut self, problem: &SuperpositionProblem) {
        problem.design.tr_matvec_into(&self.resid, &mut self.grad);
        self.grad.iter_mut().for_each(|g| *g *= -2.0);
    }
}

fn run(
    problem: &SuperpositionProblem,
    config: &SolverConfig,
    update: &Update<'_>,
    mut observer: impl FnMut(&IterationEvent<'_>),
) -> Result<SolverResult> {
    config.validate()?;
    let (p, k) = (problem.p(), problem.k());
    let specs = problem.components();

    let mut state = SolverState {
        theta: vec![vec![0.0; p]; k],
        theta_tilde_prev: vec![vec![0.0; p]; k],
        momentum: 0.0,
        iter: 0,
        objective_trace: Vec::new(),
    };
    let mut at_theta = Workspace::new(problem);
    let mut at_tilde = Workspace::new(problem);
    let mut total_backtracks = 0;
    let mut last_fit = f64::NAN;

    for t in 0..config.max_iter {
        let f_theta = at_theta.objective_at(problem, &state.theta);
        if !f_theta.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: t });
        }
        at_theta.gradient(problem);
        let grad = &at_theta.grad;

        let mut eta = config.eta0;
        let mut backtracks = 0;
        let (tilde, f_tilde, rhs) = loop {
            let mut tilde = Vec::with_capacity(k);
            for (i, (spec, theta)) in specs.iter().zip(&state.theta).enumerate() {
                let step: Vec<f64> = theta.iter().zip(grad).map(|(x, g)| x - eta * g).collect();
                tilde.push(update.apply(spec, i, &step, eta)?);
            }
            let f_tilde = at_tilde.objective_at(problem, &tilde);
            let linear = dot(grad, &at_tilde.sum) - dot(grad, &at_theta.sum);
            let quad: f64 = tilde
                .iter()
                .zip(&state.theta)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .sum();
            let rhs = f_theta + linear + quad / (2.0 * eta);
            if f_tilde <= rhs {
                break (tilde, f_tilde, rhs);
            }
            backtracks += 1;
            if backtracks > config.max_backtracks {
                return Err(Error::BacktrackingExhausted {
                    iteration: t,
                    max_backtracks: config.max_backtracks,
                });
            }
            eta *= config.beta;
        };
        total_backtracks += backtracks;

        let alpha = state.momentum;
        let alpha_next = 0.5 * (1.0 + (1.0 + 4.0 * alpha * alpha).sqrt());
        let coef = (alpha - 1.0) / alpha_next;
        for ((theta, new), old) in state.theta.iter_mut().zip(&tilde).zip(&state.theta_tilde_prev) {
            for ((x, a), b) in theta.iter_mut().zip(new).zip(old) {
                *x = a + coef * (a - b);
            }
        }
        state.theta_tilde_prev = tilde;
        state.momentum = alpha_next;
        state.iter = t + 1;

        let tracked = f_tilde + update.penalty(specs, &state.theta_tilde_prev)?;
        if !tracked.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: t });
        }
        let previous = state.objective_trace.last().copied();
        state.objective_trace.push(tracked);
        last_fit = f_tilde;

        observer(&IterationEvent {
            iteration: t,
            step_size: eta,
            backtracks,
            armijo_lhs: f_tilde,
            armijo_rhs: rhs,
            state: &state,
        });

        if f_tilde == 0.0 {
            break;
        }
        // The first momentum coefficient is −1, which resets θ¹ to θ̃⁰ and makes
        // the second step repeat the first; the change test starts after it.
        if let Some(prev) = previous {
            if t >= 2 && (tracked - prev).abs() <= config.rel_tol * prev.max(1.0) {
                break;
            }
        }
    }

    let estimates = state.theta_tilde_prev;
    let componentwise_error = problem.componentwise_error(&estimates);
    let total_error = componentwise_error.as_ref().map(|e| e.iter().sum());
    Ok(SolverResult {
        objective: last_fit,
        iterations: state.iter,
        total_backtracks,
        objective_trace: state.objective_trace,
        estimates,
        componentwise_error,
        total_error,
    })
}

/// `‖v‖₂` of each estimate; convenience for reports.
pub fn estimate_norms(result: &SolverResult) -> Vec<f64> {
    result.estimates.iter().map(|e| norm2(e)).collect()
}
