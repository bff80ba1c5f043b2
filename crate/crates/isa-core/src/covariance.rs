//! Sample covariance, the block-diagonal plug-in with its positive-definite
//! perturbation, and the rank-correlation estimator for nonparanormal data.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{IsaError, Result};
use crate::matrix::{block_diagonal, check_finite, SymmetricMatrix};
use crate::partition::GroupPartition;

/// Eigenvalue below which the block-diagonal plug-in is considered rank
/// deficient and gets the ridge. Floating point never yields an exact zero,
/// so the trigger is a small positive threshold.
pub const PERTURBATION_TRIGGER: f64 = 1e-8;

/// Full and block-diagonal covariance estimates for one sample.
#[derive(Debug, Clone)]
pub struct CovariancePair {
    /// Sample covariance of the full vector.
    pub full: SymmetricMatrix,
    /// Block diagonal of `full`, ridged by `epsilon * I` when rank deficient.
    pub blocked: SymmetricMatrix,
    pub perturbation_applied: bool,
    /// The added ridge; 0 when no perturbation was needed.
    pub epsilon: f64,
    /// Sample count behind the estimates.
    pub n: usize,
    pub partition: GroupPartition,
}

impl CovariancePair {
    /// The unperturbed block diagonal of `full`. The estimating-equation and
    /// de-biasing formulas use this plain plug-in; the ridge exists only to
    /// keep the log-determinant solver inside its domain.
    pub fn blocked_raw(&self) -> SymmetricMatrix {
        block_diagonal(&self.full, &self.partition).expect("partition matches covariance dim")
    }

    pub fn dim(&self) -> usize {
        self.full.dim()
    }
}

/// `(1/n) X^T X`, optionally after column centering.
///
/// The uncentered form matches the zero-mean sampling model; centering is for
/// real data whose mean is unknown.
pub fn sample_covariance(data: &DMatrix<f64>, center: bool) -> Result<SymmetricMatrix> {
    let (n, d) = (data.nrows(), data.ncols());
    if n < 2 || d < 2 {
        return Err(IsaError::InvalidArgument(format!(
            "sample covariance needs n >= 2 and d >= 2, got {n} x {d}"
        )));
    }
    check_finite(data)?;
    let cov = if center {
        let mut centered = data.clone();
        for j in 0..d {
            let mean = centered.column(j).sum() / n as f64;
            for i in 0..n {
                centered[(i, j)] -= mean;
            }
        }
        centered.transpose() * &centered / n as f64
    } else {
        data.transpose() * data / n as f64
    };
    Ok(SymmetricMatrix::symmetrized(cov))
}

/// Minimum eigenvalue of a block-diagonal matrix, computed block by block.
fn block_min_eigenvalue(m: &SymmetricMatrix, p: &GroupPartition) -> f64 {
    let mut min = f64::INFINITY;
    for members in p.groups() {
        let dg = members.len();
        let block = DMatrix::from_fn(dg, dg, |a, b| m.get(members[a], members[b]));
        let eig = nalgebra::SymmetricEigen::new(block);
        min = min.min(eig.eigenvalues.min());
    }
    min
}

/// Extracts the block diagonal of `full` and, when its smallest eigenvalue
/// falls below [`PERTURBATION_TRIGGER`], adds `sqrt(log d / n) * I` so the
/// result is positive definite.
pub fn blocked_covariance(
    full: &SymmetricMatrix,
    p: &GroupPartition,
    n: usize,
) -> Result<CovariancePair> {
    let blocked = block_diagonal(full, p)?;
    let lambda_min = block_min_eigenvalue(&blocked, p);
    let (blocked, perturbation_applied, epsilon) = if lambda_min < PERTURBATION_TRIGGER {
        let d = full.dim() as f64;
        let eps = (d.ln() / n as f64).sqrt();
        let mut ridged = blocked.into_inner();
        for j in 0..full.dim() {
            ridged[(j, j)] += eps;
        }
        (SymmetricMatrix::symmetrized(ridged), true, eps)
    } else {
        (blocked, false, 0.0)
    };
    Ok(CovariancePair {
        full: full.clone(),
        blocked,
        perturbation_applied,
        epsilon,
        n,
        partition: p.clone(),
    })
}

/// Covariance pair straight from data: sample covariance plus its
/// (possibly ridged) block diagonal.
pub fn covariance_from_data(
    data: &DMatrix<f64>,
    p: &GroupPartition,
    center: bool,
) -> Result<CovariancePair> {
    let full = sample_covariance(data, center)?;
    blocked_covariance(&full, p, data.nrows())
}

fn sign_i64(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Net concordance `sum_{i<i'} sign(dx * dy)` by the direct pair loop.
fn net_concordance_loop(x: &[f64], y: &[f64]) -> i64 {
    let n = x.len();
    let mut net = 0i64;
    for i in 0..n {
        for ip in (i + 1)..n {
            net += sign_i64(x[i] - x[ip]) * sign_i64(y[i] - y[ip]);
        }
    }
    net
}

/// Net concordance by sorting and inversion counting. Agrees exactly with the
/// pair loop: both reduce to the same integer count.
fn net_concordance_merge(x: &[f64], y: &[f64]) -> i64 {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap()
            .then(y[a].partial_cmp(&y[b]).unwrap())
    });

    let pairs = |t: u64| t * (t.saturating_sub(1)) / 2;
    let n0 = pairs(n as u64);

    // tie counts in x and joint ties, scanning x-sorted order
    let mut n1 = 0u64;
    let mut n3 = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        n1 += pairs((j - i) as u64);
        // within an x-tie run, entries are y-sorted; count joint ties
        let mut a = i;
        while a < j {
            let mut b = a + 1;
            while b < j && y[idx[b]] == y[idx[a]] {
                b += 1;
            }
            n3 += pairs((b - a) as u64);
            a = b;
        }
        i = j;
    }

    // tie counts in y
    let mut ys: Vec<f64> = y.to_vec();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut n2 = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        n2 += pairs((j - i) as u64);
        i = j;
    }

    // discordant pairs = inversions of the y sequence in (x, y)-sorted order
    let mut seq: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let discordant = count_inversions(&mut seq, &mut buf);

    n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * discordant as i64
}

/// Counts strict inversions with a bottom-up stable merge sort.
fn count_inversions(seq: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = seq.len();
    let mut inversions = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo + width < n {
            let mid = lo + width;
            let hi = (lo + 2 * width).min(n);
            let (mut a, mut b, mut out) = (lo, mid, lo);
            while a < mid && b < hi {
                if seq[b] < seq[a] {
                    inversions += (mid - a) as u64;
                    buf[out] = seq[b];
                    b += 1;
                } else {
                    buf[out] = seq[a];
                    a += 1;
                }
                out += 1;
            }
            while a < mid {
                buf[out] = seq[a];
                a += 1;
                out += 1;
            }
            while b < hi {
                buf[out] = seq[b];
                b += 1;
                out += 1;
            }
            seq[lo..hi].copy_from_slice(&buf[lo..hi]);
            lo += 2 * width;
        }
        width *= 2;
    }
    inversions
}

fn kendall_with(
    data: &DMatrix<f64>,
    net: impl Fn(&[f64], &[f64]) -> i64 + Sync,
) -> Result<SymmetricMatrix> {
    let (n, d) = (data.nrows(), data.ncols());
    if n < 2 {
        return Err(IsaError::InvalidArgument(format!(
            "rank correlation needs n >= 2, got {n}"
        )));
    }
    check_finite(data)?;
    let cols: Vec<Vec<f64>> = (0..d).map(|j| data.column(j).iter().copied().collect()).collect();
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .collect();
    let denom = (n * (n - 1) / 2) as f64;
    let entries: Vec<f64> = pairs
        .par_iter()
        .map(|&(j, k)| {
            let tau = net(&cols[j], &cols[k]) as f64 / denom;
            (std::f64::consts::FRAC_PI_2 * tau).sin()
        })
        .collect();
    let mut out = DMatrix::identity(d, d);
    for (&(j, k), &v) in pairs.iter().zip(entries.iter()) {
        out[(j, k)] = v;
        out[(k, j)] = v;
    }
    Ok(SymmetricMatrix::symmetrized(out))
}

/// Rank-correlation estimate of a latent correlation matrix:
/// `sin(pi/2 * tau_jk)` off the diagonal, exactly 1 on it. Ties contribute
/// zero (`sign(0) = 0`). Pairs `(j, k)` are evaluated by the `O(n^2)` pair
/// loop, in parallel across pairs with deterministic output.
pub fn kendall_covariance(data: &DMatrix<f64>) -> Result<SymmetricMatrix> {
    kendall_with(data, net_concordance_loop)
}

/// Same estimate via an `O(n log n)` sort-and-count per pair. Agrees exactly
/// with [`kendall_covariance`]: both compute the same integer net concordance
/// before the single float division.
pub fn kendall_covariance_fast(data: &DMatrix<f64>) -> Result<SymmetricMatrix> {
    kendall_with(data, net_concordance_merge)
}
