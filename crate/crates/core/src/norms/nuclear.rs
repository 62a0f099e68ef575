//! Nuclear norm on row-major vectorized matrices.

use crate::error::Result;
use crate::linalg::{svd, DenseMatrix, SvdFactors};
use crate::norms::l1::project_l1_ball;

fn factor(v: &[f64], rows: usize, cols: usize) -> Result<SvdFactors> {
    svd(&DenseMatrix::new(rows, cols, v.to_vec())?)
}

pub fn nuclear_norm(v: &[f64], rows: usize, cols: usize) -> Result<f64> {
    Ok(factor(v, rows, cols)?.singular_values.iter().sum())
}

pub fn spectral_norm(v: &[f64], rows: usize, cols: usize) -> Result<f64> {
    Ok(factor(v, rows, cols)?.singular_values[0])
}

/// Projection onto the nuclear ball: project the singular values onto the
/// ℓ₁ ball and recompose.
pub fn project_nuclear_ball(v: &[f64], rows: usize, cols: usize, radius: f64) -> Result<Vec<f64>> {
    if radius <= 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let f = factor(v, rows, cols)?;
    if f.singular_values.iter().sum::<f64>() <= radius {
        return Ok(v.to_vec());
    }
    let shrunk = project_l1_ball(&f.singular_values, radius);
    Ok(f.compose(&shrunk).into_data())
}

/// Singular value soft thresholding.
pub fn singular_value_threshold(v: &[f64], rows: usize, cols: usize, lambda: f64) -> Result<Vec<f64>> {
    let f = factor(v, rows, cols)?;
    let shrunk: Vec<f64> = f.singular_values.iter().map(|s| (s - lambda).max(0.0)).collect();
    Ok(f.compose(&shrunk).into_data())
}

/// Relative cutoff below which singular values count as zero when forming
/// the tangent space.
pub const RANK_CUTOFF: f64 = 1e-10;

/// `⟨UVᵀ, D⟩ + ‖P_{T⊥}(D)‖_*` with `(U, V)` the numerically nonzero singular
/// pairs of the anchor.
pub fn nuclear_directional_derivative(
    anchor: &[f64],
    d: &[f64],
    rows: usize,
    cols: usize,
) -> Result<f64> {
    let f = factor(anchor, rows, cols)?;
    let s_max = f.singular_values[0];
    let rank = f
        .singular_values
        .iter()
        .take_while(|&&s| s > RANK_CUTOFF * s_max)
        .count();
    let u = f.u.select(&(0..rows).collect::<Vec<_>>(), &(0..rank).collect::<Vec<_>>());
    let v = f.v.select(&(0..cols).collect::<Vec<_>>(), &(0..rank).collect::<Vec<_>>());
    let dm = DenseMatrix::new(rows, cols, d.to_vec())?;

    let uvt = u.matmul(&v.transpose())?;
    let inner: f64 = uvt.data().iter().zip(dm.data()).map(|(a, b)| a * b).sum();

    // (I − UUᵀ) D (I − VVᵀ)
    let left = complement_projector(&u);
    let right = complement_projector(&v);
    let residual = left.matmul(&dm)?.matmul(&right)?;
    let tail: f64 = svd(&residual)?.singular_values.iter().sum();
    Ok(inner + tail)
}

fn complement_projector(basis: &DenseMatrix) -> DenseMatrix {
    let n = basis.rows();
    let r = basis.cols();
    DenseMatrix::from_fn(n, n, |i, j| {
        let mut s = if i == j { 1.0 } else { 0.0 };
        for k in 0..r {
            s -= basis.get(i, k) * basis.get(j, k);
        }
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let diag23 = [2.0, 0.0, 0.0, 3.0];
        assert!((nuclear_norm(&diag23, 2, 2).unwrap() - 5.0).abs() < 1e-12);
        let eye = [1.0, 0.0, 0.0, 1.0];
        assert!((spectral_norm(&eye, 2, 2).unwrap() - 1.0).abs() < 1e-12);

        let p = project_nuclear_ball(&eye, 2, 2, 1.0).unwrap();
        for (a, b) in p.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }

        let svt = singular_value_threshold(&[3.0, 0.0, 0.0, 0.5], 2, 2, 1.0).unwrap();
        for (a, b) in svt.iter().zip([2.0, 0.0, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_rank_one_anchor() {
        // anchor e1e1ᵀ: UVᵀ = e1e1ᵀ, T⊥ is the lower-right block
        let anchor = [1.0, 0.0, 0.0, 0.0];
        let d = [-1.0, 0.0, 0.0, 0.0];
        assert!((nuclear_directional_derivative(&anchor, &d, 2, 2).unwrap() + 1.0).abs() < 1e-12);
        let d = [0.0, 0.0, 0.0, 2.0];
        assert!((nuclear_directional_derivative(&anchor, &d, 2, 2).unwrap() - 2.0).abs() < 1e-12);
        let d = [0.0, 0.0, 0.0, -2.0];
        assert!((nuclear_directional_derivative(&anchor, &d, 2, 2).unwrap() - 2.0).abs() < 1e-12);
    }
}
