//! Small dense linear programs: `min c^T x  s.t.  A x <= b, x >= 0`.
//!
//! Two-phase tableau simplex with Bland's pivoting rule (smallest eligible
//! entering index, smallest basic index on ratio ties), which terminates on
//! degenerate instances and always returns the same vertex for the same
//! input. The row-wise programs solved here are tiny (a few hundred
//! variables), so a dense tableau is the right tool.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_EPS: f64 = 1e-9;
const REDUCED_COST_EPS: f64 = 1e-9;

struct Tableau {
    /// m x (cols + 1); the last column is the rhs.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row, same width; its rhs slot holds minus the objective.
    cost: Vec<f64>,
    basis: Vec<usize>,
    n_struct: usize,
    n_total: usize,
    artificial_start: usize,
}

impl Tableau {
    fn pivot(&mut self, pr: usize, pc: usize) {
        let piv = self.rows[pr][pc];
        for v in self.rows[pr].iter_mut() {
            *v /= piv;
        }
        let prow = self.rows[pr].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pr {
                continue;
            }
            let f = row[pc];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        let f = self.cost[pc];
        if f != 0.0 {
            for (v, p) in self.cost.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
            self.cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Rebuilds the reduced-cost row for the given objective coefficients.
    fn price(&mut self, costs: &[f64]) {
        let width = self.n_total + 1;
        let mut cost = vec![0.0; width];
        cost[..costs.len()].copy_from_slice(costs);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = if b < costs.len() { costs[b] } else { 0.0 };
            if cb != 0.0 {
                for (v, r) in cost.iter_mut().zip(self.rows[i].iter()) {
                    *v -= cb * r;
                }
            }
        }
        self.cost = cost;
    }

    /// Bland's rule iteration until optimal or unbounded. `allow` filters
    /// entering columns.
    fn run(&mut self, allow: impl Fn(usize) -> bool) -> Result<(), LpError> {
        loop {
            let mut entering = None;
            for j in 0..self.n_total {
                if allow(j) && self.cost[j] < -REDUCED_COST_EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][pc];
                if a > PIVOT_EPS {
                    let ratio = self.rows[i][self.n_total] / a;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || ((ratio - lr).abs() <= 1e-12
                                    && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = leaving else {
                return Err(LpError::Unbounded);
            };
            self.pivot(pr, pc);
        }
    }

    fn objective(&self) -> f64 {
        -self.cost[self.n_total]
    }
}

/// Minimizes `c^T x` subject to `A x <= b`, `x >= 0`.
pub fn solve_min(c: &[f64], a: &DMatrix<f64>, b: &[f64]) -> Result<LpSolution, LpError> {
    let m = a.nrows();
    let n = a.ncols();
    assert_eq!(c.len(), n, "cost length must match column count");
    assert_eq!(b.len(), m, "rhs length must match row count");

    let neg_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let n_art = neg_rows.len();
    let n_total = n + m + n_art;
    let mut rows = vec![vec![0.0; n_total + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art = n + m;
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            rows[i][j] = flip * a[(i, j)];
        }
        rows[i][n + i] = flip; // slack (surplus when flipped)
        rows[i][n_total] = flip * b[i];
        if flip < 0.0 {
            rows[i][art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = n + i;
        }
    }

    let mut t = Tableau {
        rows,
        cost: vec![0.0; n_total + 1],
        basis,
        n_struct: n,
        n_total,
        artificial_start: n + m,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; n_total];
        phase1[t.artificial_start..].fill(1.0);
        t.price(&phase1);
        t.run(|_| true)?;
        let feas_scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if t.objective() > 1e-7 * feas_scale {
            return Err(LpError::Infeasible);
        }
        // drive any artificial still in the basis out of it
        for i in 0..m {
            if t.basis[i] >= t.artificial_start {
                let pc = (0..t.artificial_start).find(|&j| t.rows[i][j].abs() > PIVOT_EPS);
                if let Some(pc) = pc {
                    t.pivot(i, pc);
                }
                // an all-zero row is a redundant constraint; the artificial
                // stays basic at value zero and never re-enters
            }
        }
    }

    let art_start = t.artificial_start;
    t.price(c);
    t.run(|j| j < art_start)?;

    let mut x = vec![0.0; n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < t.n_struct {
            x[bv] = t.rows[i][n_total].max(0.0);
        }
    }
    let objective = c.iter().zip(x.iter()).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective })
}
