//! Ground-truth model bundle and the sparse reparametrization.
//!
//! The estimand is `Theta = Omega - inv(Sigma_G)`, where `Sigma_G` keeps the
//! within-group blocks of the covariance. Its cross-group block coincides with
//! the cross-group block of the precision matrix, and it stays sparse even
//! when the within-group precision blocks are dense: with at most `s` nonzero
//! cross-group precision entries, `Theta` has at most `2s^2 + 2s` nonzeros.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{IsaError, Result};
use crate::matrix::{block_diagonal, SymmetricMatrix};
use crate::partition::{GroupPartition, InterBlockIndex};

/// Numeric zero threshold for support counting on ground-truth matrices,
/// which are produced by direct inversion rather than optimization.
pub const GROUND_TRUTH_ZERO_TOL: f64 = 1e-10;

/// Ground truth produced by the generator and consumed by metrics, coverage,
/// and diagnostics.
#[derive(Debug, Clone)]
pub struct IsaModel {
    /// Population covariance.
    pub sigma: SymmetricMatrix,
    /// Population precision `inv(sigma)`.
    pub omega: SymmetricMatrix,
    /// `omega - inv(block_diagonal(sigma))`.
    pub theta: SymmetricMatrix,
    /// Support of the cross-group precision block.
    pub support: BTreeSet<InterBlockIndex>,
    pub partition: GroupPartition,
    /// Number of cross-group nonzeros per group pair.
    pub s: usize,
}

/// Inverts each diagonal block of `sigma` in place of a full inversion; the
/// result has exactly zero cross-group entries.
pub fn block_inverse(sigma: &SymmetricMatrix, p: &GroupPartition) -> Result<SymmetricMatrix> {
    if sigma.dim() != p.d() {
        return Err(IsaError::DimensionMismatch(format!(
            "matrix dim {} vs partition dim {}",
            sigma.dim(),
            p.d()
        )));
    }
    let d = sigma.dim();
    let mut out = DMatrix::zeros(d, d);
    for (g, members) in p.groups().iter().enumerate() {
        let dg = members.len();
        let mut block = DMatrix::zeros(dg, dg);
        for (a, &ja) in members.iter().enumerate() {
            for (b, &jb) in members.iter().enumerate() {
                block[(a, b)] = sigma.get(ja, jb);
            }
        }
        let inv = nalgebra::Cholesky::new(block)
            .ok_or(IsaError::SingularBlock { block: g })?
            .inverse();
        for (a, &ja) in members.iter().enumerate() {
            for (b, &jb) in members.iter().enumerate() {
                out[(ja, jb)] = inv[(a, b)];
            }
        }
    }
    Ok(SymmetricMatrix::symmetrized(out))
}

/// `Theta = Omega - inv(Sigma_G)` with `Sigma_G = block_diagonal(sigma, p)`.
///
/// The cross-group blocks of the result equal those of `omega` exactly, since
/// the block inverse vanishes off the diagonal blocks.
pub fn theta_from_omega(
    omega: &SymmetricMatrix,
    sigma: &SymmetricMatrix,
    p: &GroupPartition,
) -> Result<SymmetricMatrix> {
    if omega.dim() != sigma.dim() {
        return Err(IsaError::DimensionMismatch(format!(
            "omega dim {} vs sigma dim {}",
            omega.dim(),
            sigma.dim()
        )));
    }
    let ginv = block_inverse(sigma, p)?;
    Ok(SymmetricMatrix::symmetrized(
        omega.inner() - ginv.inner(),
    ))
}

impl IsaModel {
    /// Block diagonal of the population covariance.
    pub fn sigma_g(&self) -> SymmetricMatrix {
        block_diagonal(&self.sigma, &self.partition).expect("partition matches model dimension")
    }

    pub fn d(&self) -> usize {
        self.sigma.dim()
    }
}
