use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;

use super::{LowRankSparseConfig, McaConfig, McaNorm, QKind};
use crate::error::{Error, Result};
use crate::linalg::{dct_matrix, random_orthogonal, DenseMatrix};
use crate::norms::ComponentSpec;
use crate::random::{gaussian_vec, seeded_rng, substream, trial_seed, SeededRng};
use crate::solver::SuperpositionProblem;

/// The rotation for a sweep (or, with `fresh_q_per_trial`, for the trial
/// whose seed is given). A random rotation shared by a whole sweep is
/// flipped so that `Q₀₀ > 0`; per-trial rotations are plain Haar draws.
pub fn mca_rotation(config: &McaConfig, seed: u64) -> DenseMatrix {
    let p = config.p;
    match config.q_kind {
        QKind::Identity => DenseMatrix::identity(p),
        QKind::NegativeIdentity => DenseMatrix::identity(p).scaled(-1.0),
        QKind::Dct => dct_matrix(p),
        QKind::RandomOrthogonal => {
            let q = random_orthogonal(p, substream(seed, 0x51));
            if q.get(0, 0) < 0.0 && !config.fresh_q_per_trial {
                q.scaled(-1.0)
            } else {
                q
            }
        }
    }
}

fn leading_ones(p: usize, s: usize) -> Vec<f64> {
    (0..p).map(|i| if i < s { 1.0 } else { 0.0 }).collect()
}

fn gaussian_design(rng: &mut SeededRng, n: usize, p: usize) -> Result<DenseMatrix> {
    DenseMatrix::new(n, p, gaussian_vec(rng, n * p))
}

fn observe(rng: &mut SeededRng, x: &DenseMatrix, truth: &[Vec<f64>], sigma: f64) -> Result<Vec<f64>> {
    let mut total = vec![0.0; x.cols()];
    for t in truth {
        for (s, v) in total.iter_mut().zip(t) {
            *s += v;
        }
    }
    let mut y = x.matvec(&total)?;
    let noise = gaussian_vec(rng, y.len());
    for (yi, w) in y.iter_mut().zip(noise) {
        *yi += sigma * w;
    }
    Ok(y)
}

/// One sparse + rotated-sparse instance. The rotation is drawn from the sweep
/// seed, or from the trial seed when `fresh_q_per_trial` is set.
pub fn gen_mca_instance(config: &McaConfig, n: usize, trial: usize) -> Result<SuperpositionProblem> {
    config.validate()?;
    let q = if config.fresh_q_per_trial {
        mca_rotation(config, trial_seed(config.base_seed, n, trial))
    } else {
        mca_rotation(config, config.base_seed)
    };
    gen_mca_instance_with(config, Arc::new(q), n, trial)
}

/// As [`gen_mca_instance`] with the rotation supplied by the caller.
pub fn gen_mca_instance_with(
    config: &McaConfig,
    q: Arc<DenseMatrix>,
    n: usize,
    trial: usize,
) -> Result<SuperpositionProblem> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let p = config.p;
    let seed = trial_seed(config.base_seed, n, trial);
    let mut rng = seeded_rng(seed);

    let theta1 = leading_ones(p, config.s1);
    let theta2 = q.tr_matvec(&leading_ones(p, config.s2))?;
    let x = gaussian_design(&mut rng, n, p)?;
    let truth = vec![theta1, theta2];
    let y = observe(&mut rng, &x, &truth, config.noise_sigma)?;

    let (first, second) = match config.norm_kind {
        McaNorm::L1 => {
            let first = ComponentSpec::l1(p, 1.0)?;
            let second = if config.q_kind == QKind::Identity {
                ComponentSpec::l1(p, 1.0)?
            } else {
                ComponentSpec::rotated_l1(q, 1.0)?
            };
            (first, second)
        }
        McaNorm::KSupport => (
            ComponentSpec::ksupport(p, config.s1, 1.0)?,
            ComponentSpec::rotated_ksupport(q, config.s2, 1.0)?,
        ),
    };
    let first = first.with_radius(first.eval(&truth[0])?)?;
    let second = second.with_radius(second.eval(&truth[1])?)?;
    SuperpositionProblem::new(y, x, vec![first, second])?.with_ground_truth(truth)
}

/// Low-rank + sparse instance on `d1 × d2` matrices (row-major vectorized).
pub fn gen_lowrank_sparse_instance(
    config: &LowRankSparseConfig,
    n: usize,
    trial: usize,
) -> Result<SuperpositionProblem> {
    config.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let (d1, d2, r) = (config.d1, config.d2, config.rank);
    let mut rng = seeded_rng(trial_seed(config.base_seed, n, trial));
    let scale = 1.0 / (r as f64).sqrt();
    let a = DenseMatrix::new(d1, r, gaussian_vec(&mut rng, d1 * r))?.scaled(scale);
    let b = DenseMatrix::new(d2, r, gaussian_vec(&mut rng, d2 * r))?.scaled(scale);
    let low_rank = a.matmul(&b.transpose())?.into_data();

    let mut sparse = vec![0.0; d1 * d2];
    for i in sample(&mut rng, d1 * d2, config.sparsity) {
        sparse[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    let x = gaussian_design(&mut rng, n, d1 * d2)?;
    let truth = vec![low_rank, sparse];
    let y = observe(&mut rng, &x, &truth, config.noise_sigma)?;
    lowrank_sparse_problem(y, x, truth, d1, d2, config.sparsity)
}

fn lowrank_sparse_problem(
    y: Vec<f64>,
    x: DenseMatrix,
    truth: Vec<Vec<f64>>,
    d1: usize,
    d2: usize,
    sparsity: usize,
) -> Result<SuperpositionProblem> {
    let nuclear = ComponentSpec::nuclear(d1, d2, 1.0)?;
    let nuclear = nuclear.with_radius(nuclear.eval(&truth[0])?)?;
    let ksp = ComponentSpec::ksupport(d1 * d2, sparsity, 1.0)?;
    let ksp = ksp.with_radius(ksp.eval(&truth[1])?)?;
    SuperpositionProblem::new(y, x, vec![nuclear, ksp])?.with_ground_truth(truth)
}

/// Noiseless instance with `L* = S* = e₁e₁ᵀ`, a low-rank matrix that is as
/// coherent as possible.
pub fn rpca_example_instance(d1: usize, d2: usize, n: usize, seed: u64) -> Result<SuperpositionProblem> {
    if d1 == 0 || d2 == 0 || n == 0 {
        return Err(Error::InvalidArgument("dimensions and n must be positive".into()));
    }
    let mut e11 = vec![0.0; d1 * d2];
    e11[0] = 1.0;
    let mut rng = seeded_rng(seed);
    let x = gaussian_design(&mut rng, n, d1 * d2)?;
    let truth = vec![e11.clone(), e11];
    let y = observe(&mut rng, &x, &truth, 0.0)?;
    lowrank_sparse_problem(y, x, truth, d1, d2, 1)
}
