//! Python bindings: ground-truth models, the penalized estimator, and the
//! de-biased inference pipeline, with plain lists at the boundary.
//!
//! Group indices are 1-based on the Python side, matching the file formats.

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use isa_core::inference::InferenceOptions;
use isa_core::simulation::GeneratorSpec;
use isa_core::strings::AdmmConfig;
use isa_core::{GroupPartition, IsaModel, LambdaRule, SymmetricMatrix};

fn to_py_err(e: isa_core::IsaError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_rows(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(PyValueError::new_err("data must be a nonempty matrix"));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("ragged rows in data"));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(flat.len() / cols, cols, &flat))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn partition_from_groups(groups: Vec<Vec<usize>>) -> PyResult<GroupPartition> {
    let mut max = 0usize;
    for g in &groups {
        for &j in g {
            if j == 0 {
                return Err(PyValueError::new_err("group indices are 1-based"));
            }
            max = max.max(j);
        }
    }
    let zero_based: Vec<Vec<usize>> = groups
        .into_iter()
        .map(|g| g.into_iter().map(|j| j - 1).collect())
        .collect();
    GroupPartition::new(zero_based, max).map_err(to_py_err)
}

fn admm_config(rho: f64, tol: f64, max_iters: usize) -> AdmmConfig {
    AdmmConfig {
        rho,
        tol,
        max_iters,
        symmetrize_each_iter: true,
    }
}

/// Ground-truth bundle: covariance, precision, sparse target, and support.
#[pyclass(name = "Model")]
struct PyModel {
    model: IsaModel,
}

#[pymethods]
impl PyModel {
    /// Builds the simulation ground truth: all-ones within-group precision
    /// blocks, `s` planted cross-group entries per group pair, a shift to the
    /// target condition number, then diagonal standardization.
    #[staticmethod]
    #[pyo3(signature = (d, s, seed=0, value=0.5, cond=None, groups=2))]
    fn generate(
        d: usize,
        s: usize,
        seed: u64,
        value: f64,
        cond: Option<f64>,
        groups: usize,
    ) -> PyResult<Self> {
        let spec = GeneratorSpec {
            d,
            s,
            value,
            condition_number_target: cond,
            l: groups,
            seed,
        };
        let model = isa_core::generate_model(&spec).map_err(to_py_err)?;
        Ok(Self { model })
    }

    #[getter]
    fn d(&self) -> usize {
        self.model.d()
    }

    #[getter]
    fn sigma(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.model.sigma.inner())
    }

    #[getter]
    fn omega(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.model.omega.inner())
    }

    #[getter]
    fn theta(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.model.theta.inner())
    }

    /// True cross-group support as 1-based `(j, k)` pairs.
    #[getter]
    fn support(&self) -> Vec<(usize, usize)> {
        self.model
            .support
            .iter()
            .map(|ix| (ix.j + 1, ix.k + 1))
            .collect()
    }

    /// Groups as 1-based index lists.
    #[getter]
    fn groups(&self) -> Vec<Vec<usize>> {
        self.model
            .partition
            .groups()
            .iter()
            .map(|g| g.iter().map(|&j| j + 1).collect())
            .collect()
    }

    /// Draws `n` rows from the model's Gaussian; deterministic in the seed.
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let data = isa_core::sample_gaussian(&self.model, n, seed).map_err(to_py_err)?;
        Ok(matrix_to_rows(&data))
    }

    /// Precision, recall, and F-score of a thresholded estimate against the
    /// true support.
    #[pyo3(signature = (theta, threshold=1e-4))]
    fn recovery_metrics<'py>(
        &self,
        py: Python<'py>,
        theta: Vec<Vec<f64>>,
        threshold: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let m = matrix_from_rows(theta)?;
        let sym = SymmetricMatrix::new(m).map_err(to_py_err)?;
        let metrics =
            isa_core::recovery_metrics(&sym, &self.model, threshold).map_err(to_py_err)?;
        let out = PyDict::new(py);
        out.set_item("tp", metrics.true_positives)?;
        out.set_item("fp", metrics.false_positives)?;
        out.set_item("fn", metrics.false_negatives)?;
        out.set_item("precision", metrics.precision)?;
        out.set_item("recall", metrics.recall)?;
        out.set_item("f_score", metrics.f_score)?;
        Ok(out)
    }
}

/// Fits the penalized estimator at one penalty level.
#[pyfunction]
#[pyo3(signature = (data, groups, lam, rho=1.0, tol=1e-4, max_iters=2000, center=false))]
#[allow(clippy::too_many_arguments)]
fn fit<'py>(
    py: Python<'py>,
    data: Vec<Vec<f64>>,
    groups: Vec<Vec<usize>>,
    lam: f64,
    rho: f64,
    tol: f64,
    max_iters: usize,
    center: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let data = matrix_from_rows(data)?;
    let partition = partition_from_groups(groups)?;
    let cov = isa_core::covariance_from_data(&data, &partition, center).map_err(to_py_err)?;
    let fit = isa_core::fit_strings(&cov, lam, &admm_config(rho, tol, max_iters), None)
        .map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("theta", matrix_to_rows(fit.theta_hat.inner()))?;
    out.set_item("lambda", fit.lambda)?;
    out.set_item("converged", fit.converged)?;
    out.set_item("iters", fit.iters_used)?;
    out.set_item("objective", fit.objective)?;
    Ok(out)
}

/// Fits a penalty path on the training data and keeps the grid point with the
/// smallest validation loss.
#[pyfunction]
#[pyo3(signature = (data, val_data, groups, grid=None, rho=1.0, tol=1e-4, max_iters=2000, center=false))]
#[allow(clippy::too_many_arguments)]
fn fit_path<'py>(
    py: Python<'py>,
    data: Vec<Vec<f64>>,
    val_data: Vec<Vec<f64>>,
    groups: Vec<Vec<usize>>,
    grid: Option<Vec<f64>>,
    rho: f64,
    tol: f64,
    max_iters: usize,
    center: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let data = matrix_from_rows(data)?;
    let val = matrix_from_rows(val_data)?;
    let partition = partition_from_groups(groups)?;
    let cov = isa_core::covariance_from_data(&data, &partition, center).map_err(to_py_err)?;
    let cov_val = isa_core::covariance_from_data(&val, &partition, center).map_err(to_py_err)?;
    let grid =
        grid.unwrap_or_else(|| isa_core::default_lambda_grid(partition.d(), data.nrows()));
    let sel = isa_core::select_lambda(&cov, &cov_val, &grid, &admm_config(rho, tol, max_iters))
        .map_err(to_py_err)?;
    let chosen = sel.chosen();
    let out = PyDict::new(py);
    out.set_item("theta", matrix_to_rows(chosen.theta_hat.inner()))?;
    out.set_item("lambda", chosen.lambda)?;
    out.set_item("converged", chosen.converged)?;
    out.set_item("grid", sel.grid.clone())?;
    out.set_item("val_losses", sel.val_losses.clone())?;
    out.set_item("chosen_index", sel.chosen_index)?;
    Ok(out)
}

/// Full sample-splitting pipeline: fit on the first half, build correction
/// matrices on the second, de-bias, and report per-edge intervals and tests.
#[pyfunction]
#[pyo3(signature = (data, groups, lam=None, grid=None, lambda_prime=None, alpha=0.05,
                    shuffle=false, seed=0, center=false, rho=1.0, tol=1e-4, max_iters=2000))]
#[allow(clippy::too_many_arguments)]
fn infer<'py>(
    py: Python<'py>,
    data: Vec<Vec<f64>>,
    groups: Vec<Vec<usize>>,
    lam: Option<f64>,
    grid: Option<Vec<f64>>,
    lambda_prime: Option<f64>,
    alpha: f64,
    shuffle: bool,
    seed: u64,
    center: bool,
    rho: f64,
    tol: f64,
    max_iters: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let data = matrix_from_rows(data)?;
    let partition = partition_from_groups(groups)?;
    let rule = match (lam, grid) {
        (Some(l), None) => LambdaRule::Fixed(l),
        (None, Some(g)) => LambdaRule::Grid(g),
        (None, None) => LambdaRule::DefaultGrid,
        (Some(_), Some(_)) => {
            return Err(PyValueError::new_err(
                "pass either lam or grid, not both",
            ))
        }
    };
    let opts = InferenceOptions {
        alpha,
        lambda_prime,
        seed,
        shuffle,
        center,
    };
    let result = isa_core::run_untangle_and_chord(
        &data,
        &partition,
        &rule,
        &admm_config(rho, tol, max_iters),
        &opts,
        None,
    )
    .map_err(to_py_err)?;
    let edges = isa_core::all_edges(&result, alpha).map_err(to_py_err)?;
    let selected = isa_core::bonferroni_select(&result, alpha).map_err(to_py_err)?;

    let out = PyDict::new(py);
    out.set_item("theta_u", matrix_to_rows(&result.theta_u))?;
    out.set_item("lambda", result.lambda)?;
    out.set_item("lambda_prime", result.lambda_prime)?;
    out.set_item("n", result.n_split)?;
    out.set_item("alpha", result.alpha)?;
    out.set_item("clamp_warnings", result.clamp_warnings)?;
    let edge_list: Vec<Bound<'py, PyDict>> = edges
        .iter()
        .map(|e| {
            let d = PyDict::new(py);
            d.set_item("j", e.index.j + 1)?;
            d.set_item("k", e.index.k + 1)?;
            d.set_item("estimate", e.estimate)?;
            d.set_item("std_err", e.std_err)?;
            d.set_item("ci_low", e.ci_low)?;
            d.set_item("ci_high", e.ci_high)?;
            d.set_item("z", e.z_stat)?;
            d.set_item("reject", e.reject)?;
            Ok(d)
        })
        .collect::<PyResult<_>>()?;
    out.set_item("edges", edge_list)?;
    let selected: Vec<(usize, usize)> =
        selected.iter().map(|ix| (ix.j + 1, ix.k + 1)).collect();
    out.set_item("bonferroni_selected", selected)?;
    Ok(out)
}

/// Rank-correlation covariance `sin(pi/2 * tau)` for nonparanormal data.
#[pyfunction]
fn kendall_covariance(data: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let data = matrix_from_rows(data)?;
    let tau = isa_core::kendall_covariance_fast(&data).map_err(to_py_err)?;
    Ok(matrix_to_rows(tau.inner()))
}

/// Standard normal quantile.
#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    isa_core::standard_normal_quantile(p).map_err(to_py_err)
}

#[pymodule]
fn isa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(fit_path, m)?)?;
    m.add_function(wrap_pyfunction!(infer, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    Ok(())
}
