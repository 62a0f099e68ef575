use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::generate::{gen_lowrank_sparse_instance, gen_mca_instance_with, mca_rotation};
use super::{LowRankSparseConfig, McaConfig, McaNorm, TrialRecord, RECOVERY_THRESHOLD};
use crate::error::{Error, Result};
use crate::random::trial_seed;
use crate::solver::{apg_solve, SolverConfig, SuperpositionProblem};

/// Records of one labelled sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub label: String,
    pub records: Vec<TrialRecord>,
}

fn solve_trial(problem: &SuperpositionProblem, n: usize, trial: usize, seed: u64, solver: &SolverConfig, timed: bool) -> TrialRecord {
    let start = timed.then(Instant::now);
    let outcome = apg_solve(problem, solver);
    let wall_ms = start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
    match outcome {
        Ok(result) => {
            let componentwise_error = result.componentwise_error.unwrap_or_default();
            let total_error: f64 = componentwise_error.iter().sum();
            TrialRecord {
                n,
                trial,
                seed,
                total_error,
                recovered: total_error <= RECOVERY_THRESHOLD,
                componentwise_error,
                iterations: result.iterations,
                wall_ms,
            }
        }
        Err(_) => TrialRecord {
            n,
            trial,
            seed,
            total_error: f64::NAN,
            componentwise_error: vec![f64::NAN; problem.k()],
            recovered: false,
            iterations: 0,
            wall_ms,
        },
    }
}

/// Runs every `(n, trial)` cell on the rayon pool and returns the records
/// sorted by `(n, trial)`. Solver failures become NaN records.
fn sweep<F>(
    n_grid: &[usize],
    trials: usize,
    base_seed: u64,
    timed: bool,
    solver: &SolverConfig,
    make: F,
) -> Result<Vec<TrialRecord>>
where
    F: Fn(usize, usize) -> Result<SuperpositionProblem> + Sync,
{
    solver.validate()?;
    let cells: Vec<(usize, usize)> = n_grid
        .iter()
        .flat_map(|&n| (0..trials).map(move |t| (n, t)))
        .collect();
    let mut records = cells
        .into_par_iter()
        .map(|(n, trial)| {
            let problem = make(n, trial)?;
            Ok(solve_trial(&problem, n, trial, trial_seed(base_seed, n, trial), solver, timed))
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| (r.n, r.trial));
    Ok(records)
}

fn mca_sweep(config: &McaConfig, solver: &SolverConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let fixed = Arc::new(mca_rotation(config, config.base_seed));
    sweep(
        &config.n_grid,
        config.trials,
        config.base_seed,
        config.record_wall_time,
        solver,
        |n, trial| {
            let q = if config.fresh_q_per_trial {
                Arc::new(mca_rotation(config, trial_seed(config.base_seed, n, trial)))
            } else {
                fixed.clone()
            };
            gen_mca_instance_with(config, q, n, trial)
        },
    )
}

/// Estimation error against sample size for one rotation.
pub fn run_error_vs_n(config: &McaConfig, solver: &SolverConfig) -> Result<Vec<TrialRecord>> {
    mca_sweep(config, solver)
}

/// Noiseless recovery sweeps, one curve per config, with a fresh rotation
/// in every trial.
pub fn run_phase_transition(configs: &[McaConfig], solver: &SolverConfig) -> Result<Vec<Curve>> {
    configs
        .iter()
        .map(|c| {
            if c.noise_sigma != 0.0 {
                return Err(Error::InvalidSpec("phase transition sweeps must be noiseless".into()));
            }
            let config = McaConfig {
                fresh_q_per_trial: true,
                ..c.clone()
            };
            Ok(Curve {
                label: format!("p{}", c.p),
                records: mca_sweep(&config, solver)?,
            })
        })
        .collect()
}

/// k-support sweep over dimensions and sparsity pairs; every other field
/// comes from `base`.
pub fn run_ksupport_experiment(
    base: &McaConfig,
    ps: &[usize],
    sparsities: &[(usize, usize)],
    solver: &SolverConfig,
) -> Result<Vec<Curve>> {
    if base.norm_kind != McaNorm::KSupport {
        return Err(Error::InvalidSpec("k-support sweep needs norm_kind = ksupport".into()));
    }
    let mut curves = Vec::new();
    for &p in ps {
        for &(s1, s2) in sparsities {
            let config = McaConfig {
                p,
                s1,
                s2,
                ..base.clone()
            };
            curves.push(Curve {
                label: format!("p{p}_s{s1}_{s2}"),
                records: mca_sweep(&config, solver)?,
            });
        }
    }
    Ok(curves)
}

pub fn run_lowrank_sparse(config: &LowRankSparseConfig, solver: &SolverConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    sweep(
        &config.n_grid,
        config.trials,
        config.base_seed,
        config.record_wall_time,
        solver,
        |n, trial| gen_lowrank_sparse_instance(config, n, trial),
    )
}

/// A sweep as selected by name or configuration file.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// One curve per labelled config.
    ErrorVsN(Vec<(String, McaConfig)>),
    Phase(Vec<McaConfig>),
    KSupport {
        base: McaConfig,
        ps: Vec<usize>,
        sparsities: Vec<(usize, usize)>,
    },
    LowRankSparse(LowRankSparseConfig),
}

impl Sweep {
    /// Applies `f` to every McaConfig in the sweep.
    pub fn map_mca(&mut self, mut f: impl FnMut(&mut McaConfig)) {
        match self {
            Sweep::ErrorVsN(curves) => curves.iter_mut().for_each(|(_, c)| f(c)),
            Sweep::Phase(configs) => configs.iter_mut().for_each(f),
            Sweep::KSupport { base, .. } => f(base),
            Sweep::LowRankSparse(_) => {}
        }
    }
}

pub fn run_sweep(sweep: &Sweep, solver: &SolverConfig) -> Result<Vec<Curve>> {
    match sweep {
        Sweep::ErrorVsN(curves) => curves
            .iter()
            .map(|(label, c)| {
                Ok(Curve {
                    label: label.clone(),
                    records: run_error_vs_n(c, solver)?,
                })
            })
            .collect(),
        Sweep::Phase(configs) => run_phase_transition(configs, solver),
        Sweep::KSupport { base, ps, sparsities } => run_ksupport_experiment(base, ps, sparsities, solver),
        Sweep::LowRankSparse(c) => Ok(vec![Curve {
            label: "lowrank_sparse".into(),
            records: run_lowrank_sparse(c, solver)?,
        }]),
    }
}
