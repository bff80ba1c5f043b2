//! Dense symmetric matrices and block-diagonal extraction.
//!
//! All covariance-like objects in this crate (population and sample
//! covariances, precision matrices, ADMM iterates) are carried by
//! [`SymmetricMatrix`]. Constructors symmetrize via `(A + A^T)/2` and reject
//! inputs whose asymmetry exceeds a relative tolerance, so downstream code can
//! rely on exact entry-wise symmetry.

use nalgebra::{DMatrix, DVector};

use crate::error::{IsaError, Result};
use crate::partition::GroupPartition;

/// Relative asymmetry above which a constructor rejects its input.
pub const ASYMMETRY_TOL: f64 = 1e-6;

/// A dense `d x d` matrix of `f64` with enforced exact symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    m: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Builds from a square matrix, symmetrizing via `(A + A^T)/2`.
    ///
    /// Rejects non-square shapes, non-finite entries, and inputs whose
    /// asymmetry exceeds [`ASYMMETRY_TOL`] relative to `max(1, |A|_max)`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(IsaError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        check_finite(&m)?;
        let scale = 1.0_f64.max(m.amax());
        let mut max_asym = 0.0_f64;
        for j in 0..m.nrows() {
            for k in (j + 1)..m.ncols() {
                max_asym = max_asym.max((m[(j, k)] - m[(k, j)]).abs());
            }
        }
        if max_asym > ASYMMETRY_TOL * scale {
            return Err(IsaError::Asymmetric {
                max_asym,
                tol: ASYMMETRY_TOL,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes unconditionally, without the asymmetry check. For results
    /// that are symmetric analytically but carry rounding drift (e.g.
    /// `V T V^T`).
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        let mut s = m;
        for j in 0..s.nrows() {
            for k in (j + 1)..s.ncols() {
                let avg = 0.5 * (s[(j, k)] + s[(k, j)]);
                s[(j, k)] = avg;
                s[(k, j)] = avg;
            }
        }
        Self { m: s }
    }

    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(IsaError::DimensionMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn inner(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[(row, col)]
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for j in 0..d {
            for k in 0..d {
                out.push(self.m[(j, k)]);
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.m.amax()
    }

    pub fn fro_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn l11_norm(&self) -> f64 {
        self.m.iter().map(|v| v.abs()).sum()
    }

    /// Number of entries with absolute value above `threshold`.
    pub fn nnz(&self, threshold: f64) -> usize {
        self.m.iter().filter(|v| v.abs() > threshold).count()
    }

    /// Eigendecomposition `A = V diag(vals) V^T`.
    pub fn symmetric_eigen(&self) -> (DMatrix<f64>, DVector<f64>) {
        let eig = nalgebra::SymmetricEigen::new(self.m.clone());
        (eig.eigenvectors, eig.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(self.m.clone());
        eig.eigenvalues.min()
    }

    /// Inverse via Cholesky; fails when the matrix is not positive definite.
    pub fn pd_inverse(&self) -> Result<SymmetricMatrix> {
        let chol = nalgebra::Cholesky::new(self.m.clone()).ok_or_else(|| {
            IsaError::NotPositiveDefinite("Cholesky factorization failed".to_string())
        })?;
        Ok(SymmetricMatrix::symmetrized(chol.inverse()))
    }
}

impl std::ops::Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;
    fn index(&self, index: (usize, usize)) -> &f64 {
        &self.m[index]
    }
}

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.nrows() {
        for k in 0..m.ncols() {
            if !m[(j, k)].is_finite() {
                return Err(IsaError::NonFinite { row: j, col: k });
            }
        }
    }
    Ok(())
}

/// Keeps within-group entries of `m`, zeroing every cross-group pair.
pub fn block_diagonal(m: &SymmetricMatrix, p: &GroupPartition) -> Result<SymmetricMatrix> {
    if m.dim() != p.d() {
        return Err(IsaError::DimensionMismatch(format!(
            "matrix dim {} vs partition dim {}",
            m.dim(),
            p.d()
        )));
    }
    let d = m.dim();
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            if p.group_of(j) == p.group_of(k) {
                out[(j, k)] = m.get(j, k);
            }
        }
    }
    Ok(SymmetricMatrix { m: out })
}
