//! Fixed inputs shared by the benchmarks.

use superpose::experiments::{gen_mca_instance, McaConfig};
use superpose::random::{gaussian_vec, seeded_rng};
use superpose::{DenseMatrix, McaNorm, QKind, SuperpositionProblem};

pub fn gaussian(len: usize, seed: u64) -> Vec<f64> {
    gaussian_vec(&mut seeded_rng(seed), len)
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    DenseMatrix::new(rows, cols, gaussian(rows * cols, seed)).expect("positive dimensions")
}

/// Sparse + rotated-sparse instance of dimension `p` with `n` samples.
pub fn mca_problem(p: usize, n: usize, q_kind: QKind, norm_kind: McaNorm) -> SuperpositionProblem {
    let config = McaConfig {
        p,
        s1: 2,
        s2: 2,
        q_kind,
        noise_sigma: 0.1,
        n_grid: vec![n],
        trials: 1,
        base_seed: 1,
        norm_kind,
        fresh_q_per_trial: false,
        record_wall_time: false,
    };
    gen_mca_instance(&config, n, 0).expect("valid benchmark config")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(mca_problem(20, 10, QKind::Dct, McaNorm::KSupport).p(), 20);
        assert_eq!(gaussian_matrix(3, 4, 0).cols(), 4);
    }
}
