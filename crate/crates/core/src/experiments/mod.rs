//! Synthetic instances and trial sweeps for two-component separation
//! (sparse + rotated sparse, k-support variants, low-rank + sparse), with CSV
//! and gnuplot output.

mod compare;
mod generate;
mod output;
mod run;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use compare::{
    compare_estimators, hull_gauge_by_support, infimal_convolution_norm_bruteforce, EstimatorComparison,
};
pub use generate::{gen_lowrank_sparse_instance, gen_mca_instance, gen_mca_instance_with, mca_rotation, rpca_example_instance};
pub use output::{emit_csv, emit_gnuplot, parse_csv, records_to_csv, PlotKind, CSV_HEADER_PREFIX};
pub use run::{
    run_error_vs_n, run_ksupport_experiment, run_lowrank_sparse, run_phase_transition, run_sweep, Curve, Sweep,
};

/// Total error at or below which a trial counts as recovered.
pub const RECOVERY_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QKind {
    Identity,
    NegativeIdentity,
    RandomOrthogonal,
    Dct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McaNorm {
    L1,
    #[serde(rename = "ksupport")]
    KSupport,
}

/// `θ₁*` has `s1` leading ones, `Qθ₂*` has `s2` leading ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McaConfig {
    pub p: usize,
    pub s1: usize,
    pub s2: usize,
    pub q_kind: QKind,
    pub noise_sigma: f64,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default = "default_norm")]
    pub norm_kind: McaNorm,
    /// Draw a new random Q for every trial instead of one per sweep.
    #[serde(default)]
    pub fresh_q_per_trial: bool,
    /// Measure wall time per trial; off keeps output byte-reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
}

fn default_norm() -> McaNorm {
    McaNorm::L1
}

fn check_grid(n_grid: &[usize], trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidSpec("trials must be at least 1".into()));
    }
    if n_grid.contains(&0) {
        return Err(Error::InvalidSpec("n_grid entries must be positive".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpec("n_grid must be strictly increasing".into()));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSpec(format!("noise_sigma must be nonnegative, got {sigma}")));
    }
    Ok(())
}

impl McaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.s1 == 0 || self.s2 == 0 {
            return Err(Error::InvalidSpec("p, s1 and s2 must be positive".into()));
        }
        if self.s1 + self.s2 > self.p {
            return Err(Error::InvalidSpec(format!(
                "s1 + s2 = {} exceeds p = {}",
                self.s1 + self.s2,
                self.p
            )));
        }
        check_sigma(self.noise_sigma)?;
        check_grid(&self.n_grid, self.trials)
    }
}

/// `L* = A·Bᵀ` of rank `rank` plus `S*` with `sparsity` entries of ±1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowRankSparseConfig {
    pub d1: usize,
    pub d2: usize,
    pub rank: usize,
    pub sparsity: usize,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub noise_sigma: f64,
    pub base_seed: u64,
    #[serde(default)]
    pub record_wall_time: bool,
}

impl LowRankSparseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 || self.d2 == 0 {
            return Err(Error::InvalidSpec("matrix dimensions must be positive".into()));
        }
        if self.rank == 0 || self.rank > self.d1.min(self.d2) {
            return Err(Error::InvalidSpec(format!(
                "rank must lie in [1, {}], got {}",
                self.d1.min(self.d2),
                self.rank
            )));
        }
        if self.sparsity == 0 || self.sparsity > self.d1 * self.d2 {
            return Err(Error::InvalidSpec(format!(
                "sparsity must lie in [1, {}], got {}",
                self.d1 * self.d2,
                self.sparsity
            )));
        }
        check_sigma(self.noise_sigma)?;
        check_grid(&self.n_grid, self.trials)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    /// `Σ‖θ̂ᵢ − θᵢ*‖₂`; NaN when the solver failed.
    pub total_error: f64,
    pub componentwise_error: Vec<f64>,
    pub recovered: bool,
    pub iterations: usize,
    pub wall_ms: f64,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.total_error.is_nan()
    }
}

/// Per-n aggregate of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub trials: usize,
    pub failures: usize,
    /// Mean total error over trials that did not fail.
    pub mean_error: f64,
    pub recovery_fraction: f64,
}

/// Groups records by `n` (ascending) and aggregates each group.
pub fn summarize(records: &[TrialRecord]) -> Vec<Summary> {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let group: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
            let ok: Vec<f64> = group.iter().filter(|r| !r.failed()).map(|r| r.total_error).collect();
            let recovered = group.iter().filter(|r| r.recovered).count();
            Summary {
                n,
                trials: group.len(),
                failures: group.len() - ok.len(),
                mean_error: if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().sum::<f64>() / ok.len() as f64
                },
                recovery_fraction: recovered as f64 / group.len() as f64,
            }
        })
        .collect()
}

/// Least-squares slope of `ln(mean error)` against `ln n`.
pub fn loglog_slope(summaries: &[Summary]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = summaries
        .iter()
        .filter(|s| s.mean_error > 0.0 && s.mean_error.is_finite())
        .map(|s| ((s.n as f64).ln(), s.mean_error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Desk-scale sweeps selectable by name.
pub mod presets {
    use super::*;
    use crate::solver::SolverConfig;

    /// Error vs n for the three rotations at p = 200, σ = 1.
    pub fn fig_noise_desk() -> Vec<(String, McaConfig)> {
        [
            ("identity", QKind::Identity),
            ("random", QKind::RandomOrthogonal),
            ("negative_identity", QKind::NegativeIdentity),
        ]
        .into_iter()
        .map(|(label, q_kind)| {
            (
                label.to_string(),
                McaConfig {
                    p: 200,
                    s1: 1,
                    s2: 1,
                    q_kind,
                    noise_sigma: 1.0,
                    n_grid: vec![25, 50, 100, 200],
                    trials: 20,
                    base_seed: 2016,
                    norm_kind: McaNorm::L1,
                    fresh_q_per_trial: false,
                    record_wall_time: false,
                },
            )
        })
        .collect()
    }

    /// Noiseless recovery fraction for p ∈ {20, 40, 80, 160}, fresh Q per trial.
    pub fn fig_phase_desk() -> Vec<McaConfig> {
        [20, 40, 80, 160]
            .into_iter()
            .map(|p| McaConfig {
                p,
                s1: 1,
                s2: 1,
                q_kind: QKind::RandomOrthogonal,
                noise_sigma: 0.0,
                n_grid: (1..=8).map(|i| 5 * i).collect(),
                trials: 50,
                base_seed: 2016,
                norm_kind: McaNorm::L1,
                fresh_q_per_trial: true,
                record_wall_time: false,
            })
            .collect()
    }

    /// Solver settings for noiseless recovery: the 1e-4 recovery test needs
    /// the iterates to settle well below it.
    pub fn noiseless_solver() -> SolverConfig {
        SolverConfig {
            rel_tol: 1e-15,
            max_iter: 20_000,
            ..SolverConfig::default()
        }
    }

    /// k-support sweep: DCT rotation, (s1, s2) ∈ {2, 3}², p ∈ {100, 150}.
    pub fn fig_ksupport_desk() -> (McaConfig, Vec<usize>, Vec<(usize, usize)>) {
        (
            McaConfig {
                p: 100,
                s1: 2,
                s2: 2,
                q_kind: QKind::Dct,
                noise_sigma: 1.0,
                n_grid: vec![30, 40, 50, 60, 70],
                trials: 20,
                base_seed: 2016,
                norm_kind: McaNorm::KSupport,
                fresh_q_per_trial: false,
                record_wall_time: false,
            },
            vec![100, 150],
            vec![(2, 2), (2, 3), (3, 2), (3, 3)],
        )
    }

    pub const NAMES: [&str; 3] = ["fig-noise-desk", "fig-phase-desk", "fig-ksupport-desk"];

    /// The sweep and solver settings behind a preset name.
    pub fn by_name(name: &str) -> Option<(Sweep, SolverConfig)> {
        match name {
            "fig-noise-desk" => Some((Sweep::ErrorVsN(fig_noise_desk()), SolverConfig::default())),
            "fig-phase-desk" => Some((Sweep::Phase(fig_phase_desk()), noiseless_solver())),
            "fig-ksupport-desk" => {
                let (base, ps, sparsities) = fig_ksupport_desk();
                Some((Sweep::KSupport { base, ps, sparsities }, SolverConfig::default()))
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> McaConfig {
        presets::fig_noise_desk().remove(0).1
    }

    #[test]
    fn config_validation() {
        assert!(base().validate().is_ok());
        for bad in [
            McaConfig { trials: 0, ..base() },
            McaConfig { n_grid: vec![50, 25], ..base() },
            McaConfig { s1: 150, s2: 60, ..base() },
            McaConfig { noise_sigma: -1.0, ..base() },
        ] {
            assert!(bad.validate().is_err());
        }
        let lrs = LowRankSparseConfig {
            d1: 4,
            d2: 5,
            rank: 1,
            sparsity: 0,
            n_grid: vec![10],
            trials: 1,
            noise_sigma: 0.0,
            base_seed: 0,
            record_wall_time: false,
        };
        assert!(lrs.validate().is_err());
        assert!(LowRankSparseConfig { sparsity: 2, ..lrs.clone() }.validate().is_ok());
        assert!(LowRankSparseConfig { sparsity: 2, rank: 5, ..lrs }.validate().is_err());
    }

    #[test]
    fn summaries_and_slope() {
        let rec = |n, trial, e: f64| TrialRecord {
            n,
            trial,
            seed: 0,
            total_error: e,
            componentwise_error: vec![e],
            recovered: e <= RECOVERY_THRESHOLD,
            iterations: 1,
            wall_ms: 0.0,
        };
        let records = vec![rec(10, 0, 1.0), rec(10, 1, f64::NAN), rec(40, 0, 0.5), rec(40, 1, 1e-5)];
        let s = summarize(&records);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].trials, s[0].failures, s[0].mean_error), (2, 1, 1.0));
        assert_eq!(s[1].recovery_fraction, 0.5);

        let exact: Vec<Summary> = [10usize, 40, 160]
            .iter()
            .map(|&n| Summary {
                n,
                trials: 1,
                failures: 0,
                mean_error: 3.0 / (n as f64).sqrt(),
                recovery_fraction: 0.0,
            })
            .collect();
        assert!((loglog_slope(&exact).unwrap() + 0.5).abs() < 1e-12);
    }
}
