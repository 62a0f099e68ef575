//! Norm families used as component constraints: evaluation, dual norm,
//! ball projection, proximal map, and one-sided directional derivatives.

pub mod ksupport;
pub mod l1;
pub mod nuclear;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{norm1, norm2, DenseMatrix};

/// Orthogonality tolerance for rotation matrices.
pub const ROTATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    L1,
    RotatedL1,
    Nuclear,
    KSupport,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            NormKind::L1 => "l1",
            NormKind::RotatedL1 => "rotated_l1",
            NormKind::Nuclear => "nuclear",
            NormKind::KSupport => "ksupport",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
enum Family {
    L1,
    RotatedL1(Arc<DenseMatrix>),
    Nuclear { rows: usize, cols: usize },
    KSupport { k: usize, rotation: Option<Arc<DenseMatrix>> },
}

/// One component constraint `R(θ) ≤ radius` on vectors of length `dim`.
///
/// A rotated family evaluates `R(Q·v)`. Nuclear-norm vectors are row-major
/// `rows × cols` matrices.
#[derive(Debug, Clone)]
pub struct ComponentSpec {
    family: Family,
    radius: f64,
    dim: usize,
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "radius must be finite and nonnegative, got {radius}"
        )));
    }
    Ok(())
}

fn check_rotation(q: &DenseMatrix) -> Result<()> {
    if !q.is_square() {
        return Err(Error::InvalidSpec(format!(
            "rotation must be square, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    let defect = q.orthogonality_defect();
    if defect > ROTATION_TOLERANCE {
        return Err(Error::InvalidSpec(format!(
            "rotation is not orthogonal (max |QᵀQ − I| = {defect:.3e})"
        )));
    }
    Ok(())
}

impl ComponentSpec {
    pub fn l1(dim: usize, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        Ok(Self {
            family: Family::L1,
            radius,
            dim,
        })
    }

    pub fn rotated_l1(rotation: impl Into<Arc<DenseMatrix>>, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        let q = rotation.into();
        check_rotation(&q)?;
        Ok(Self {
            dim: q.rows(),
            family: Family::RotatedL1(q),
            radius,
        })
    }

    pub fn nuclear(rows: usize, cols: usize, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidSpec("matrix shape must be positive".into()));
        }
        Ok(Self {
            family: Family::Nuclear { rows, cols },
            radius,
            dim: rows * cols,
        })
    }

    pub fn ksupport(dim: usize, k: usize, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        if k == 0 || k > dim {
            return Err(Error::InvalidSpec(format!(
                "k-support requires 1 ≤ k ≤ {dim}, got k = {k}"
            )));
        }
        Ok(Self {
            family: Family::KSupport { k, rotation: None },
            radius,
            dim,
        })
    }

    /// k-support norm of `Q·v`.
    pub fn rotated_ksupport(
        rotation: impl Into<Arc<DenseMatrix>>,
        k: usize,
        radius: f64,
    ) -> Result<Self> {
        let q = rotation.into();
        check_rotation(&q)?;
        let mut spec = Self::ksupport(q.rows(), k, radius)?;
        spec.family = Family::KSupport {
            k,
            rotation: Some(q),
        };
        Ok(spec)
    }

    /// Same norm, different radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self {
            radius,
            ..self.clone()
        })
    }

    pub fn kind(&self) -> NormKind {
        match self.family {
            Family::L1 => NormKind::L1,
            Family::RotatedL1(_) => NormKind::RotatedL1,
            Family::Nuclear { .. } => NormKind::Nuclear,
            Family::KSupport { .. } => NormKind::KSupport,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> Option<usize> {
        match self.family {
            Family::KSupport { k, .. } => Some(k),
            _ => None,
        }
    }

    pub fn rotation(&self) -> Option<&DenseMatrix> {
        match &self.family {
            Family::RotatedL1(q) => Some(q),
            Family::KSupport { rotation, .. } => rotation.as_deref(),
            _ => None,
        }
    }

    pub fn matrix_shape(&self) -> Option<(usize, usize)> {
        match self.family {
            Family::Nuclear { rows, cols } => Some((rows, cols)),
            _ => None,
        }
    }

    fn check(&self, context: &'static str, v: &[f64]) -> Result<()> {
        check_len(context, self.dim, v.len())
    }

    fn rotate(&self, v: &[f64]) -> Vec<f64> {
        match self.rotation() {
            Some(q) => {
                let mut out = vec![0.0; self.dim];
                q.matvec_into(v, &mut out);
                out
            }
            None => v.to_vec(),
        }
    }

    fn unrotate(&self, w: Vec<f64>) -> Vec<f64> {
        match self.rotation() {
            Some(q) => {
                let mut out = vec![0.0; self.dim];
                q.tr_matvec_into(&w, &mut out);
                out
            }
            None => w,
        }
    }

    /// `R(v)`.
    pub fn eval(&self, v: &[f64]) -> Result<f64> {
        self.check("norm_eval", v)?;
        match &self.family {
            Family::L1 => Ok(l1_norm(v)),
            Family::RotatedL1(_) => Ok(l1_norm(&self.rotate(v))),
            Family::Nuclear { rows, cols } => nuclear::nuclear_norm(v, *rows, *cols),
            Family::KSupport { k, .. } => Ok(ksupport::ksupport_norm(&self.rotate(v), *k)),
        }
    }

    /// Dual norm `R*(v)`.
    pub fn dual_eval(&self, v: &[f64]) -> Result<f64> {
        self.check("norm_dual_eval", v)?;
        match &self.family {
            Family::L1 => Ok(linf_norm(v)),
            Family::RotatedL1(_) => Ok(linf_norm(&self.rotate(v))),
            Family::Nuclear { rows, cols } => nuclear::spectral_norm(v, *rows, *cols),
            Family::KSupport { k, .. } => Ok(ksupport::ksupport_dual_norm(&self.rotate(v), *k)),
        }
    }

    /// Euclidean projection onto `{x : R(x) ≤ radius}`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.project_certified(v)?.point)
    }

    /// Projection together with its optimality certificate. The gap is zero
    /// for the exact families and the Frank–Wolfe duality gap for k-support.
    pub fn project_certified(&self, v: &[f64]) -> Result<Projection> {
        self.check("project_ball", v)?;
        let r = self.radius;
        let exact = |point| Projection { point, gap: 0.0 };
        match &self.family {
            Family::L1 => Ok(exact(l1::project_l1_ball(v, r))),
            Family::RotatedL1(_) => {
                let w = self.rotate(v);
                if norm1(&w) <= r {
                    return Ok(exact(v.to_vec()));
                }
                Ok(exact(self.unrotate(l1::project_l1_ball(&w, r))))
            }
            Family::Nuclear { rows, cols } => {
                Ok(exact(nuclear::project_nuclear_ball(v, *rows, *cols, r)?))
            }
            Family::KSupport { k, .. } => {
                let w = self.rotate(v);
                if ksupport::ksupport_norm(&w, *k) <= r {
                    return Ok(exact(v.to_vec()));
                }
                let p = ksupport::project_ksupport_ball(&w, *k, r);
                Ok(Projection {
                    point: self.unrotate(p.point),
                    gap: p.gap,
                })
            }
        }
    }

    /// `argmin_u ½‖u − v‖² + λ·R(u)`. Not available for k-support.
    pub fn prox(&self, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
        self.check("prox", v)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "prox weight must be positive, got {lambda}"
            )));
        }
        match &self.family {
            Family::L1 => Ok(l1::soft_threshold(v, lambda)),
            Family::RotatedL1(_) => {
                let w = self.rotate(v);
                Ok(self.unrotate(l1::soft_threshold(&w, lambda)))
            }
            Family::Nuclear { rows, cols } => {
                nuclear::singular_value_threshold(v, *rows, *cols, lambda)
            }
            Family::KSupport { .. } => Err(Error::Unsupported("prox of the k-support norm")),
        }
    }

    /// One-sided directional derivative `R′(anchor; d)`. Directions with a
    /// nonpositive value generate the error cone at `anchor`.
    pub fn descent_derivative(&self, anchor: &[f64], d: &[f64]) -> Result<f64> {
        self.check("descent_directional_derivative", anchor)?;
        self.check("descent_directional_derivative", d)?;
        if anchor.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidArgument(
                "directional derivative requires a nonzero anchor".into(),
            ));
        }
        match &self.family {
            Family::L1 => Ok(l1::l1_directional_derivative(anchor, d)),
            Family::RotatedL1(_) => Ok(l1::l1_directional_derivative(
                &self.rotate(anchor),
                &self.rotate(d),
            )),
            Family::Nuclear { rows, cols } => {
                nuclear::nuclear_directional_derivative(anchor, d, *rows, *cols)
            }
            Family::KSupport { k, .. } => {
                let a = self.rotate(anchor);
                let dd = self.rotate(d);
                let eps = 1e-7 * norm2(&a) / norm2(&dd).max(1e-30);
                let moved: Vec<f64> = a.iter().zip(&dd).map(|(x, y)| x + eps * y).collect();
                Ok((ksupport::ksupport_norm(&moved, *k) - ksupport::ksupport_norm(&a, *k)) / eps)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub point: Vec<f64>,
    pub gap: f64,
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
