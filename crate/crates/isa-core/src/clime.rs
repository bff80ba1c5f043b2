//! Row-wise constrained L1 programs for the bias-correction matrices.
//!
//! For a symmetric target `S` and budget `lambda'`, each row `j` solves
//!
//! ```text
//! minimize |m|_1   subject to   |S m - e_j|_inf <= lambda'
//! ```
//!
//! The rows decouple, so stacking per-row minimizers attains the min-max
//! objective `|M|_inf`. The blocked variant restricts each row to its own
//! group's columns (forced exact zeros elsewhere), which is the right shape
//! when the target itself is block diagonal.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{IsaError, Result};
use crate::lp::{self, LpError};
use crate::matrix::SymmetricMatrix;
use crate::partition::GroupPartition;

/// An assembled solution of the row programs.
#[derive(Debug, Clone)]
pub struct ClimeSolution {
    /// Row-stacked minimizers; not symmetric in general.
    pub m: DMatrix<f64>,
    pub lambda_prime: f64,
    /// `max_j |M_{j*}|_1`, the attained objective.
    pub max_row_l1: f64,
    /// `|M S - I|_max`, recomputed from the assembled matrix.
    pub feasibility_gap: f64,
}

/// Solves one row program restricted to `cols`, with constraint coordinates
/// `coords`. Returns the dense row of length `d`.
fn solve_row(
    target: &SymmetricMatrix,
    row: usize,
    cols: &[usize],
    coords: &[usize],
    lambda_prime: f64,
) -> Result<Vec<f64>> {
    let d = target.dim();
    let na = cols.len();
    let nc = coords.len();
    // variables: positive and negative parts of m over the allowed columns
    let mut a = DMatrix::zeros(2 * nc, 2 * na);
    let mut b = vec![0.0; 2 * nc];
    for (ci, &i) in coords.iter().enumerate() {
        let e = if i == row { 1.0 } else { 0.0 };
        for (t, &col) in cols.iter().enumerate() {
            let v = target.get(i, col);
            a[(ci, t)] = v;
            a[(ci, na + t)] = -v;
            a[(nc + ci, t)] = -v;
            a[(nc + ci, na + t)] = v;
        }
        b[ci] = lambda_prime + e;
        b[nc + ci] = lambda_prime - e;
    }
    let c = vec![1.0; 2 * na];
    let sol = lp::solve_min(&c, &a, &b).map_err(|e| match e {
        LpError::Infeasible => IsaError::ClimeRowInfeasible {
            row: row + 1,
            lambda_prime,
        },
        LpError::Unbounded => IsaError::InvalidArgument(format!(
            "row {} program unbounded, which cannot happen with an L1 objective",
            row + 1
        )),
    })?;
    let mut out = vec![0.0; d];
    for (t, &col) in cols.iter().enumerate() {
        out[col] = sol.x[t] - sol.x[na + t];
    }
    Ok(out)
}

fn assemble(target: &SymmetricMatrix, rows: Vec<Vec<f64>>, lambda_prime: f64) -> ClimeSolution {
    let d = target.dim();
    let mut m = DMatrix::zeros(d, d);
    for (j, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            m[(j, k)] = v;
        }
    }
    let max_row_l1 = (0..d)
        .map(|j| m.row(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let gap = (&m * target.inner() - DMatrix::identity(d, d)).amax();
    ClimeSolution {
        m,
        lambda_prime,
        max_row_l1,
        feasibility_gap: gap,
    }
}

fn validate_lambda_prime(lambda_prime: f64) -> Result<()> {
    if !(lambda_prime > 0.0) {
        return Err(IsaError::InvalidArgument(format!(
            "lambda_prime must be positive, got {lambda_prime}"
        )));
    }
    Ok(())
}

/// Solves all `d` unrestricted row programs against `target`. Rows run in
/// parallel; assembly order is by row index, so the output is deterministic.
pub fn solve_clime(target: &SymmetricMatrix, lambda_prime: f64) -> Result<ClimeSolution> {
    validate_lambda_prime(lambda_prime)?;
    let d = target.dim();
    let all: Vec<usize> = (0..d).collect();
    let rows: Vec<Result<Vec<f64>>> = (0..d)
        .into_par_iter()
        .map(|j| solve_row(target, j, &all, &all, lambda_prime))
        .collect();
    Ok(assemble(target, first_error_in_order(rows)?, lambda_prime))
}

/// Surfaces the lowest-index failure so error reporting does not depend on
/// scheduling.
fn first_error_in_order(rows: Vec<Result<Vec<f64>>>) -> Result<Vec<Vec<f64>>> {
    rows.into_iter().collect()
}

/// The blocked variant: row `j` may only use columns in its own group, so the
/// assembled matrix is block diagonal with exactly zero cross-group entries.
/// Requires a block-diagonal target (cross-group entries exactly zero), under
/// which the cross-group constraints hold trivially and the per-row program
/// reduces to the row's group.
pub fn solve_clime_block_diagonal(
    target: &SymmetricMatrix,
    lambda_prime: f64,
    p: &GroupPartition,
) -> Result<ClimeSolution> {
    validate_lambda_prime(lambda_prime)?;
    if target.dim() != p.d() {
        return Err(IsaError::DimensionMismatch(format!(
            "target dim {} vs partition dim {}",
            target.dim(),
            p.d()
        )));
    }
    for j in 0..target.dim() {
        for k in 0..target.dim() {
            if p.group_of(j) != p.group_of(k) && target.get(j, k) != 0.0 {
                return Err(IsaError::InvalidArgument(format!(
                    "blocked program needs a block-diagonal target; entry ({j}, {k}) is {}",
                    target.get(j, k)
                )));
            }
        }
    }
    let d = target.dim();
    let rows: Vec<Result<Vec<f64>>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let members = p.group(p.group_of(j));
            solve_row(target, j, members, members, lambda_prime)
        })
        .collect();
    Ok(assemble(target, first_error_in_order(rows)?, lambda_prime))
}

/// Smallest budget for which row `j` is feasible: the Chebyshev value
/// `min_m |S m - e_j|_inf`. Used to suggest a workable `lambda_prime` after
/// an infeasible run.
pub fn min_feasible_lambda(target: &SymmetricMatrix, row: usize) -> Result<f64> {
    let d = target.dim();
    // variables: (u, v, t); minimize t subject to
    //   S(u - v) - t 1 <= e_j  and  -S(u - v) - t 1 <= -e_j
    let mut a = DMatrix::zeros(2 * d, 2 * d + 1);
    let mut b = vec![0.0; 2 * d];
    for i in 0..d {
        let e = if i == row { 1.0 } else { 0.0 };
        for t in 0..d {
            let v = target.get(i, t);
            a[(i, t)] = v;
            a[(i, d + t)] = -v;
            a[(d + i, t)] = -v;
            a[(d + i, d + t)] = v;
        }
        a[(i, 2 * d)] = -1.0;
        a[(d + i, 2 * d)] = -1.0;
        b[i] = e;
        b[d + i] = -e;
    }
    let mut c = vec![0.0; 2 * d + 1];
    c[2 * d] = 1.0;
    let sol = lp::solve_min(&c, &a, &b).map_err(|_| {
        IsaError::InvalidArgument("Chebyshev program failed".to_string())
    })?;
    Ok(sol.objective)
}
