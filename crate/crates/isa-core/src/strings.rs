//! Penalized estimation of the sparse cross-group target:
//!
//! ```text
//! minimize  Tr(T S) - log|S_G T S_G + S_G| + lambda * |T|_1,1
//! ```
//!
//! solved by ADMM on the split `W = Z`, `S_G W S_G + S_G = Y`. The quadratic
//! `W` step reduces to `W + A W A = B` with `A = S_G^2`, solved element-wise
//! in the eigenbasis of `S_G`; the `Y` step is the closed-form
//! log-determinant proximal; the `Z` step is entry-wise soft thresholding.

use nalgebra::{DMatrix, DVector};

use crate::covariance::CovariancePair;
use crate::error::{IsaError, Result};
use crate::matrix::SymmetricMatrix;

/// ADMM controls. The step size is fixed; tol is the relative residual
/// tolerance that also anchors the downstream support threshold.
#[derive(Debug, Clone)]
pub struct AdmmConfig {
    pub rho: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub symmetrize_each_iter: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iters: 2000,
            tol: 1e-4,
            symmetrize_each_iter: true,
        }
    }
}

impl AdmmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(IsaError::InvalidArgument(format!(
                "step size rho must be positive, got {}",
                self.rho
            )));
        }
        if !(self.tol > 0.0) {
            return Err(IsaError::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Primal and dual iterates, reusable as a warm start for the next fit.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub w: SymmetricMatrix,
    pub y: SymmetricMatrix,
    pub z: SymmetricMatrix,
    pub u1: SymmetricMatrix,
    pub u2: SymmetricMatrix,
    pub iter: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// One solved fit.
#[derive(Debug, Clone)]
pub struct StringsFit {
    /// Final `Z`, symmetrized.
    pub theta_hat: SymmetricMatrix,
    pub lambda: f64,
    pub iters_used: usize,
    /// `(primal, dual)` at exit.
    pub final_residuals: (f64, f64),
    /// Penalized objective at `theta_hat`; `+inf` when the log-determinant
    /// argument is not positive definite there.
    pub objective: f64,
    pub converged: bool,
}

/// A tuning path with validation losses.
#[derive(Debug, Clone)]
pub struct LambdaSelection {
    pub grid: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub chosen_index: usize,
    pub fits: Vec<StringsFit>,
}

impl LambdaSelection {
    pub fn chosen(&self) -> &StringsFit {
        &self.fits[self.chosen_index]
    }
}

/// Cached eigendecomposition of the blocked covariance. `A = S_G^2` shares
/// the eigenvectors of `S_G`, so its eigenvalues are the squares; squaring in
/// the spectrum keeps the two factorizations exactly consistent.
#[derive(Debug, Clone)]
pub struct BlockedEig {
    pub v: DMatrix<f64>,
    /// Eigenvalues of `S_G`.
    pub g_evals: DVector<f64>,
    /// Eigenvalues of `A = S_G^2`.
    pub a_evals: DVector<f64>,
}

impl BlockedEig {
    pub fn new(cov: &CovariancePair) -> Result<Self> {
        let eig = nalgebra::SymmetricEigen::new(cov.blocked.inner().clone());
        if eig.eigenvalues.min() <= 0.0 {
            return Err(IsaError::NotPositiveDefinite(format!(
                "blocked covariance has eigenvalue {:.3e}",
                eig.eigenvalues.min()
            )));
        }
        let a_evals = eig.eigenvalues.map(|e| e * e);
        Ok(Self {
            v: eig.eigenvectors,
            g_evals: eig.eigenvalues,
            a_evals,
        })
    }
}

/// `Tr(T S) - log|S_G T S_G + S_G|`; an error marks an infeasible point
/// (non-positive-definite log-determinant argument).
pub fn empirical_loss(theta: &SymmetricMatrix, cov: &CovariancePair) -> Result<f64> {
    let sg = cov.blocked.inner();
    let arg = sg * theta.inner() * sg + sg;
    let chol = nalgebra::Cholesky::new(arg).ok_or_else(|| {
        IsaError::NotPositiveDefinite("log-determinant argument".to_string())
    })?;
    let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(theta.inner().dot(cov.full.inner()) - logdet)
}

/// `grad L(T) = S - S_G (T S_G + I)^{-1}`.
pub fn loss_gradient(theta: &SymmetricMatrix, cov: &CovariancePair) -> Result<SymmetricMatrix> {
    let sg = cov.blocked.inner();
    let k = theta.inner() * sg + DMatrix::identity(theta.dim(), theta.dim());
    // S_G K^{-1} = (K^{-T} S_G)^T
    let xt = k
        .transpose()
        .lu()
        .solve(sg)
        .ok_or_else(|| IsaError::NotPositiveDefinite("gradient linear system".to_string()))?;
    Ok(SymmetricMatrix::symmetrized(
        cov.full.inner() - xt.transpose(),
    ))
}

/// Penalized objective; `+inf` at infeasible points.
pub fn objective(theta: &SymmetricMatrix, cov: &CovariancePair, lambda: f64) -> f64 {
    match empirical_loss(theta, cov) {
        Ok(loss) => loss + lambda * theta.l11_norm(),
        Err(_) => f64::INFINITY,
    }
}

fn soft_threshold_raw(m: &DMatrix<f64>, a: f64) -> DMatrix<f64> {
    m.map(|v| {
        if v > a {
            v - a
        } else if v < -a {
            v + a
        } else {
            0.0
        }
    })
}

/// Entry-wise `tau_a(v) = (v - a)_+ - (-v - a)_+`.
pub fn soft_threshold(m: &SymmetricMatrix, a: f64) -> SymmetricMatrix {
    debug_assert!(a >= 0.0);
    SymmetricMatrix::symmetrized(soft_threshold_raw(m.inner(), a))
}

/// Solves `W + A W A = B` as `V ((V^T B V) ./ (1 + a_i a_j)) V^T`.
fn solve_w_system(b: &DMatrix<f64>, eig: &BlockedEig) -> DMatrix<f64> {
    let d = b.nrows();
    let mut t = eig.v.transpose() * b * &eig.v;
    for i in 0..d {
        for j in 0..d {
            t[(i, j)] /= 1.0 + eig.a_evals[i] * eig.a_evals[j];
        }
    }
    &eig.v * t * eig.v.transpose()
}

struct Workspace {
    s: DMatrix<f64>,
    sg: DMatrix<f64>,
    /// `S_G^3`
    sg3: DMatrix<f64>,
    eig: BlockedEig,
}

impl Workspace {
    fn new(cov: &CovariancePair) -> Result<Self> {
        let eig = BlockedEig::new(cov)?;
        let sg = cov.blocked.inner().clone();
        let sg3 = &sg * &sg * &sg;
        Ok(Self {
            s: cov.full.inner().clone(),
            sg,
            sg3,
            eig,
        })
    }

    fn w_step(
        &self,
        z: &DMatrix<f64>,
        y: &DMatrix<f64>,
        u1: &DMatrix<f64>,
        u2: &DMatrix<f64>,
        rho: f64,
    ) -> DMatrix<f64> {
        let sg_y_sg = &self.sg * y * &self.sg;
        let sg_u2_sg = &self.sg * u2 * &self.sg;
        let b = z - (&self.sg3 - sg_y_sg) - (&self.s + u1 + sg_u2_sg) / rho;
        solve_w_system(&b, &self.eig)
    }

    /// `S_G W S_G + S_G`, the quantity constrained to equal `Y`.
    fn map_w(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        &self.sg * w * &self.sg + &self.sg
    }
}

fn y_step(mw: &DMatrix<f64>, u2: &DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    let c = u2 + mw * rho;
    let eig = nalgebra::SymmetricEigen::new(c);
    let ytil = eig
        .eigenvalues
        .map(|l| (l + (l * l + 4.0 * rho).sqrt()) / (2.0 * rho));
    let mut scaled = eig.eigenvectors.clone();
    for (mut col, s) in scaled.column_iter_mut().zip(ytil.iter()) {
        col *= *s;
    }
    scaled * eig.eigenvectors.transpose()
}

/// One `W` step from the current iterates; `eig` is the cached decomposition
/// from [`BlockedEig::new`]. The result solves `W + A W A = B^k` to machine
/// accuracy.
pub fn admm_w_update(
    state: &AdmmState,
    cov: &CovariancePair,
    cfg: &AdmmConfig,
    eig: &BlockedEig,
) -> SymmetricMatrix {
    let sg = cov.blocked.inner();
    let sg3 = sg * sg * sg;
    let sg_y_sg = sg * state.y.inner() * sg;
    let sg_u2_sg = sg * state.u2.inner() * sg;
    let b = state.z.inner() - (sg3 - sg_y_sg)
        - (cov.full.inner() + state.u1.inner() + sg_u2_sg) / cfg.rho;
    SymmetricMatrix::symmetrized(solve_w_system(&b, eig))
}

/// Closed-form log-determinant proximal step, using `state.w` as the freshly
/// updated `W`. The result is positive definite by construction.
pub fn admm_y_update(state: &AdmmState, cov: &CovariancePair, cfg: &AdmmConfig) -> SymmetricMatrix {
    let sg = cov.blocked.inner();
    let mw = sg * state.w.inner() * sg + sg;
    SymmetricMatrix::symmetrized(y_step(&mw, state.u2.inner(), cfg.rho))
}

fn initial_state(cov: &CovariancePair) -> AdmmState {
    let d = cov.dim();
    AdmmState {
        w: SymmetricMatrix::zeros(d),
        y: cov.blocked.clone(),
        z: SymmetricMatrix::zeros(d),
        u1: SymmetricMatrix::zeros(d),
        u2: SymmetricMatrix::zeros(d),
        iter: 0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
    }
}

/// Runs the ADMM loop. Returns the fit together with the final state (for
/// warm-starting the next point on a tuning path) and, when `trace` is set,
/// the combined residual per iteration.
fn fit_loop(
    cov: &CovariancePair,
    lambda: f64,
    cfg: &AdmmConfig,
    warm_start: Option<&AdmmState>,
    trace: bool,
) -> Result<(StringsFit, AdmmState, Vec<f64>)> {
    cfg.validate()?;
    if lambda < 0.0 {
        return Err(IsaError::InvalidArgument(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let ws = Workspace::new(cov)?;
    let d = cov.dim();
    if let Some(s) = warm_start {
        if s.w.dim() != d {
            return Err(IsaError::DimensionMismatch(format!(
                "warm start dim {} vs covariance dim {d}",
                s.w.dim()
            )));
        }
    }
    let start = warm_start.cloned().unwrap_or_else(|| initial_state(cov));
    let mut w = start.w.into_inner();
    let mut y = start.y.into_inner();
    let mut z = start.z.into_inner();
    let mut u1 = start.u1.into_inner();
    let mut u2 = start.u2.into_inner();

    let rho = cfg.rho;
    let thresh = lambda / rho;
    let mut history = Vec::new();
    let mut iters_used = cfg.max_iters;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut converged = false;

    for iter in 1..=cfg.max_iters {
        w = ws.w_step(&z, &y, &u1, &u2, rho);
        let mw = ws.map_w(&w);
        y = y_step(&mw, &u2, rho);

        let z_prev = std::mem::replace(&mut z, DMatrix::zeros(0, 0));
        let mut z_new = soft_threshold_raw(&(&w + &u1 / rho), thresh);
        if cfg.symmetrize_each_iter {
            z_new = SymmetricMatrix::symmetrized(z_new).into_inner();
        }
        z = z_new;

        u1 += (&w - &z) * rho;
        u2 += (&mw - &y) * rho;

        let r_split = (&w - &z).norm();
        let r_map = (&mw - &y).norm();
        primal = r_split.max(r_map);
        dual = rho * (&z - &z_prev).norm();
        if trace {
            history.push(primal.max(dual));
        }
        let primal_ok = primal <= cfg.tol * (1.0 + z.norm());
        let dual_ok = dual <= cfg.tol * (1.0 + u1.norm());
        if primal_ok && dual_ok {
            iters_used = iter;
            converged = true;
            break;
        }
    }

    let theta_hat = SymmetricMatrix::symmetrized(z.clone());
    let obj = objective(&theta_hat, cov, lambda);
    let fit = StringsFit {
        theta_hat,
        lambda,
        iters_used,
        final_residuals: (primal, dual),
        objective: obj,
        converged,
    };
    let state = AdmmState {
        w: SymmetricMatrix::symmetrized(w),
        y: SymmetricMatrix::symmetrized(y),
        z: SymmetricMatrix::symmetrized(z),
        u1: SymmetricMatrix::symmetrized(u1),
        u2: SymmetricMatrix::symmetrized(u2),
        iter: iters_used,
        primal_residual: primal,
        dual_residual: dual,
    };
    Ok((fit, state, history))
}

/// Fits one penalty level. Non-convergence within `max_iters` is reported via
/// `converged = false`, not as an error.
pub fn fit_strings(
    cov: &CovariancePair,
    lambda: f64,
    cfg: &AdmmConfig,
    warm_start: Option<&AdmmState>,
) -> Result<StringsFit> {
    fit_loop(cov, lambda, cfg, warm_start, false).map(|(fit, _, _)| fit)
}

/// [`fit_strings`] plus the final iterates for warm starting.
pub fn fit_strings_with_state(
    cov: &CovariancePair,
    lambda: f64,
    cfg: &AdmmConfig,
    warm_start: Option<&AdmmState>,
) -> Result<(StringsFit, AdmmState)> {
    fit_loop(cov, lambda, cfg, warm_start, false).map(|(fit, state, _)| (fit, state))
}

/// [`fit_strings`] with the combined residual recorded per iteration.
pub fn fit_strings_traced(
    cov: &CovariancePair,
    lambda: f64,
    cfg: &AdmmConfig,
) -> Result<(StringsFit, Vec<f64>)> {
    fit_loop(cov, lambda, cfg, None, true).map(|(fit, _, trace)| (fit, trace))
}

/// Worst subgradient-condition violation at `theta`: for entries with
/// `|theta_jk| > zero_tol` the residual is `|g_jk + lambda * sign|`, otherwise
/// the excess of `|g_jk|` over `lambda`.
pub fn kkt_residual(
    theta: &SymmetricMatrix,
    cov: &CovariancePair,
    lambda: f64,
    zero_tol: f64,
) -> Result<f64> {
    let g = loss_gradient(theta, cov)?;
    let d = theta.dim();
    let mut worst = 0.0f64;
    for j in 0..d {
        for k in 0..d {
            let t = theta.get(j, k);
            let gv = g.get(j, k);
            let r = if t.abs() > zero_tol {
                (gv + lambda * t.signum()).abs()
            } else {
                (gv.abs() - lambda).max(0.0)
            };
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// Validation loss `|S_val T S_Gval + S_val - S_Gval|_F`; uses the
/// unperturbed block diagonal of the validation covariance.
pub fn validation_loss(theta: &SymmetricMatrix, cov_val: &CovariancePair) -> f64 {
    let s = cov_val.full.inner();
    let sg = cov_val.blocked_raw().into_inner();
    (s * theta.inner() * &sg + s - sg).norm()
}

/// The default tuning grid `C * sqrt(log d / n)` with `C` on 50 uniform
/// values across `[0, 5]`.
pub fn default_lambda_grid(d: usize, n: usize) -> Vec<f64> {
    let scale = ((d as f64).ln() / n as f64).sqrt();
    (0..50).map(|i| 5.0 * i as f64 / 49.0 * scale).collect()
}

/// Fits every grid point (descending, warm-started) and selects the smallest
/// validation loss; exact ties go to the smaller lambda.
pub fn select_lambda(
    cov_train: &CovariancePair,
    cov_val: &CovariancePair,
    grid: &[f64],
    cfg: &AdmmConfig,
) -> Result<LambdaSelection> {
    if grid.is_empty() {
        return Err(IsaError::InvalidArgument("empty lambda grid".to_string()));
    }
    if grid.iter().any(|&l| l < 0.0) {
        return Err(IsaError::InvalidArgument(
            "lambda grid contains negative values".to_string(),
        ));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].partial_cmp(&grid[a]).unwrap());

    let mut fits: Vec<Option<StringsFit>> = vec![None; grid.len()];
    let mut state: Option<AdmmState> = None;
    for &idx in &order {
        let (fit, next) = fit_strings_with_state(cov_train, grid[idx], cfg, state.as_ref())?;
        fits[idx] = Some(fit);
        state = Some(next);
    }
    let fits: Vec<StringsFit> = fits.into_iter().map(|f| f.unwrap()).collect();
    let val_losses: Vec<f64> = fits
        .iter()
        .map(|f| validation_loss(&f.theta_hat, cov_val))
        .collect();

    if fits.iter().all(|f| !f.converged) {
        return Err(IsaError::AllFitsDiverged);
    }
    let mut chosen_index = None;
    for (i, &loss) in val_losses.iter().enumerate() {
        if !loss.is_finite() {
            continue;
        }
        chosen_index = match chosen_index {
            None => Some(i),
            Some(best) => {
                let better = loss < val_losses[best]
                    || (loss == val_losses[best] && grid[i] < grid[best]);
                Some(if better { i } else { best })
            }
        };
    }
    let chosen_index = chosen_index.ok_or(IsaError::AllFitsDiverged)?;
    Ok(LambdaSelection {
        grid: grid.to_vec(),
        val_losses,
        chosen_index,
        fits,
    })
}
