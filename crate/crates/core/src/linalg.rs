//! Dense row-major kernels sized for desk-scale problems (dimensions up to a
//! few hundred).

use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};
use crate::random::{gaussian, seeded_rng};

/// Dense real matrix stored row-major. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        check_len("DenseMatrix::new", rows * cols, data.len())?;
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "matrix entry ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for row in rows {
            check_len("DenseMatrix::from_rows", ncols, row.len())?;
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), ncols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(p: usize) -> Self {
        let mut m = Self::zeros(p, p);
        for i in 0..p {
            m.data[i * p + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let p = values.len();
        Self::from_fn(p, p, |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// `A·v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("matvec", self.cols, v.len())?;
        let mut out = vec![0.0; self.rows];
        self.matvec_into(v, &mut out);
        Ok(out)
    }

    /// `Aᵀ·v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("tr_matvec", self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        self.tr_matvec_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, v);
        }
    }

    pub(crate) fn tr_matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        out.iter_mut().for_each(|x| *x = 0.0);
        for (&vi, row) in v.iter().zip(self.data.chunks_exact(self.cols)) {
            if vi != 0.0 {
                axpy(vi, row, out);
            }
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("matmul", self.cols, other.rows)?;
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, factor: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Submatrix picking the given rows and columns, in order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    /// Largest entrywise deviation of `AᵀA` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.cols {
            for b in a..self.cols {
                let mut s = 0.0;
                for i in 0..self.rows {
                    s += self.get(i, a) * self.get(i, b);
                }
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// `y += alpha·x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], factor: f64) -> Vec<f64> {
    a.iter().map(|x| x * factor).collect()
}

/// Thin singular value decomposition `A = U·diag(s)·Vᵀ` with
/// `r = min(rows, cols)` columns in both factors.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    /// Number of singular triplets, `min(rows, cols)`.
    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }

    /// Singular values above `rel_tol · σ_max`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|&&s| s > rel_tol * top).count()
    }

    /// `U·diag(values)·Vᵀ` for replacement singular values.
    pub fn compose(&self, values: &[f64]) -> DenseMatrix {
        let (m, n, r) = (self.u.rows(), self.v.rows(), self.len());
        let mut out = DenseMatrix::zeros(m, n);
        for k in 0..r {
            let s = values[k];
            if s == 0.0 {
                continue;
            }
            for i in 0..m {
                let ui = self.u.get(i, k) * s;
                if ui == 0.0 {
                    continue;
                }
                let row = &mut out.data[i * n..(i + 1) * n];
                for (j, x) in row.iter_mut().enumerate() {
                    *x += ui * self.v.get(j, k);
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.compose(&self.singular_values)
    }
}

const SVD_MAX_SWEEPS: usize = 80;

/// One-sided Jacobi SVD.
pub fn svd(a: &DenseMatrix) -> Result<SvdFactors> {
    if a.rows >= a.cols {
        jacobi_tall(a)
    } else {
        let f = jacobi_tall(&a.transpose())?;
        Ok(SvdFactors {
            u: f.v,
            singular_values: f.singular_values,
            v: f.u,
        })
    }
}

fn jacobi_tall(a: &DenseMatrix) -> Result<SvdFactors> {
    let (m, n) = (a.rows, a.cols);
    // column-major working copies
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = f64::EPSILON * m as f64;
    let fro2: f64 = w.iter().map(|c| dot(c, c)).sum();
    let negligible = (f64::EPSILON * f64::EPSILON) * fro2;

    let mut converged = n == 1;
    for _ in 0..SVD_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if gamma == 0.0
                    || gamma.abs() <= tol * (alpha * beta).sqrt()
                    || alpha.min(beta) <= negligible
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, i, j, c, s);
                rotate_pair(&mut v, i, j, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::SvdNonConvergence {
            sweeps: SVD_MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let s_max = norms[order[0]];

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > s_max * 1e-12 && norms[j] > 0.0 {
            u_cols.push(scale(&w[j], 1.0 / norms[j]));
        } else {
            deficient.push(k);
            u_cols.push(vec![0.0; m]);
        }
    }
    for &k in &deficient {
        u_cols[k] = orthonormal_complement(&u_cols, k, m);
    }

    let singular_values = order.iter().map(|&j| norms[j]).collect();
    let u = DenseMatrix::from_fn(m, n, |i, k| u_cols[k][i]);
    let v = DenseMatrix::from_fn(n, n, |i, k| v[order[k]][i]);
    Ok(SvdFactors {
        u,
        singular_values,
        v,
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(j);
    let (ci, cj) = (&mut left[i], &mut right[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// A unit vector orthogonal to every nonzero column of `cols` except `skip`.
fn orthonormal_complement(cols: &[Vec<f64>], skip: usize, m: usize) -> Vec<f64> {
    let mut best = vec![0.0; m];
    let mut best_norm = -1.0;
    for e in 0..m {
        let mut cand = vec![0.0; m];
        cand[e] = 1.0;
        for _ in 0..2 {
            for (k, col) in cols.iter().enumerate() {
                if k == skip {
                    continue;
                }
                let d = dot(col, &cand);
                axpy(-d, col, &mut cand);
            }
        }
        let nrm = norm2(&cand);
        if nrm > best_norm {
            best_norm = nrm;
            best = cand;
        }
        if nrm > 0.7 {
            break;
        }
    }
    scale(&best, 1.0 / best_norm)
}

/// Haar-distributed orthogonal matrix: Gram–Schmidt QR of an i.i.d. standard
/// Gaussian matrix. Gram–Schmidt yields a positive R diagonal, which is the
/// sign normalization that makes the distribution Haar.
pub fn random_orthogonal(p: usize, seed: u64) -> DenseMatrix {
    assert!(p > 0, "dimension must be positive");
    let mut rng = seeded_rng(seed);
    let g: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..p).map(|_| gaussian(&mut rng)).collect())
        .collect();
    // g[j] is column j
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    for col in g {
        let mut c = col;
        // two passes of classical Gram–Schmidt
        for _ in 0..2 {
            for prev in &q {
                let d = dot(prev, &c);
                axpy(-d, prev, &mut c);
            }
        }
        let nrm = norm2(&c);
        q.push(scale(&c, 1.0 / nrm));
    }
    DenseMatrix::from_fn(p, p, |i, j| q[j][i])
}

/// Orthonormal DCT-II matrix.
pub fn dct_matrix(p: usize) -> DenseMatrix {
    assert!(p > 0, "dimension must be positive");
    let pf = p as f64;
    DenseMatrix::from_fn(p, p, |i, j| {
        let c = if i == 0 {
            (1.0 / pf).sqrt()
        } else {
            (2.0 / pf).sqrt()
        };
        c * (PI * (2 * j + 1) as f64 * i as f64 / (2.0 * pf)).cos()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::gaussian_vec;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = seeded_rng(seed);
        DenseMatrix::new(rows, cols, gaussian_vec(&mut rng, rows * cols)).unwrap()
    }

    #[test]
    fn matvec_examples() {
        let i3 = DenseMatrix::identity(3);
        assert_eq!(i3.matvec(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let z = DenseMatrix::zeros(2, 2);
        assert_eq!(z.matvec(&[5.0, 7.0]).unwrap(), vec![0.0, 0.0]);
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.matvec(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert_eq!(a.tr_matvec(&[1.0, 1.0]).unwrap(), vec![4.0, 6.0]);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = DenseMatrix::identity(3);
        assert!(matches!(
            a.matvec(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn svd_diagonal() {
        let f = svd(&DenseMatrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(f.singular_values, vec![3.0, 1.0]);
        for i in 0..2 {
            assert!((f.u.get(i, i).abs() - 1.0).abs() < 1e-15);
            assert!((f.v.get(i, i).abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn svd_zero_matrix() {
        let f = svd(&DenseMatrix::zeros(2, 3)).unwrap();
        assert_eq!(f.singular_values, vec![0.0, 0.0]);
        assert!(f.u.orthogonality_defect() < 1e-12);
        assert!(f.v.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn svd_swap_matrix() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let f = svd(&a).unwrap();
        for s in &f.singular_values {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn svd_round_trip_random() {
        for (seed, (r, c)) in [(20, 30), (30, 20), (1, 7), (9, 9)].into_iter().enumerate() {
            let a = random_matrix(r, c, seed as u64);
            let f = svd(&a).unwrap();
            assert_eq!(f.len(), r.min(c));
            assert!(f.u.orthogonality_defect() < 1e-10);
            assert!(f.v.orthogonality_defect() < 1e-10);
            assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let mut diff = f.reconstruct();
            for (d, x) in diff.data.iter_mut().zip(a.data()) {
                *d -= x;
            }
            assert!(diff.frobenius_norm() / a.frobenius_norm().max(1.0) <= 1e-8);
        }
    }

    #[test]
    fn svd_rank_deficient() {
        // rank one 4x3 matrix
        let a = DenseMatrix::from_fn(4, 3, |i, j| (i + 1) as f64 * (j as f64 - 1.5));
        let f = svd(&a).unwrap();
        assert!(f.u.orthogonality_defect() < 1e-10);
        assert!(f.singular_values[1] < 1e-12 * f.singular_values[0]);
        let rec = f.reconstruct();
        for (x, y) in rec.data().iter().zip(a.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn nuclear_norm_matches_trace_on_psd() {
        for seed in 0..5 {
            let b = random_matrix(6, 4, 100 + seed);
            let psd = b.matmul(&b.transpose()).unwrap();
            let trace: f64 = (0..6).map(|i| psd.get(i, i)).sum();
            let nuclear: f64 = svd(&psd).unwrap().singular_values.iter().sum();
            assert!((trace - nuclear).abs() <= 1e-8 * trace.max(1.0));
        }
    }

    #[test]
    fn random_orthogonal_properties() {
        let q1 = random_orthogonal(1, 4);
        assert_eq!(q1.data()[0].abs(), 1.0);

        assert_eq!(random_orthogonal(13, 99), random_orthogonal(13, 99));
        assert_ne!(random_orthogonal(13, 99), random_orthogonal(13, 100));

        let q = random_orthogonal(50, 5);
        assert!(q.orthogonality_defect() < 1e-10);
        for j in 0..50 {
            let col: Vec<f64> = (0..50).map(|i| q.get(i, j)).collect();
            assert!((norm2(&col) - 1.0).abs() < 1e-10);
        }
        let v = gaussian_vec(&mut seeded_rng(3), 50);
        assert!((norm2(&q.matvec(&v).unwrap()) - norm2(&v)).abs() < 1e-9);
    }

    #[test]
    fn dct_properties() {
        assert!((dct_matrix(1).get(0, 0) - 1.0).abs() < 1e-15);
        let d2 = dct_matrix(2);
        let r = 1.0 / 2f64.sqrt();
        assert!((d2.get(0, 0) - r).abs() < 1e-15 && (d2.get(0, 1) - r).abs() < 1e-15);
        for p in [3, 8, 100] {
            assert!(dct_matrix(p).orthogonality_defect() < 1e-10);
        }
    }
}
