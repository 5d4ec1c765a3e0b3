//! Python bindings for `lodiag`.
//!
//! Matrices cross the boundary as lists of rows (`list[list[float]]`);
//! numpy users can pass `a.tolist()`. Symmetric inputs may carry rounding
//! asymmetry up to `1e-10` relative, which is averaged away.

use lodiag::estimator::{diagonal_start, FitConfig as CoreFitConfig, FitResult as CoreFitResult};
use lodiag::portfolio::{self, BacktestConfig, EstimatorKind, ReturnsPanel};
use lodiag::simulation::{self, SimulationSpec};
use lodiag::{DiagMatrix, SymMatrix};
use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(lodiag_py, LodiagError, PyValueError);

fn err(e: lodiag::Error) -> PyErr {
    LodiagError::new_err(e.to_string())
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(LodiagError::new_err("matrix must be non-empty"));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(LodiagError::new_err("matrix rows have different lengths"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn sym(rows: &[Vec<f64>]) -> PyResult<SymMatrix> {
    let m = matrix(rows)?;
    if m.nrows() != m.ncols() {
        return Err(LodiagError::new_err(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = (&m - m.transpose()).amax();
    if asym > 1e-10 * m.amax().max(1.0) {
        return Err(LodiagError::new_err("matrix is not symmetric"));
    }
    SymMatrix::symmetrize(&m).map_err(err)
}

fn diag(values: Vec<f64>) -> PyResult<DiagMatrix> {
    DiagMatrix::new(DVector::from_vec(values)).map_err(err)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

/// Convergence controls for the coordinate descent.
#[pyclass(name = "FitConfig", from_py_object)]
#[derive(Clone)]
pub struct FitConfig {
    #[pyo3(get, set)]
    pub bcd_tol: f64,
    #[pyo3(get, set)]
    pub bcd_max_iter: usize,
    #[pyo3(get, set)]
    pub newton_tol: f64,
    #[pyo3(get, set)]
    pub newton_max_iter: usize,
    #[pyo3(get, set)]
    pub rank_tol: f64,
    #[pyo3(get, set)]
    pub accelerate: bool,
}

#[pymethods]
impl FitConfig {
    #[new]
    #[pyo3(signature = (bcd_tol=1e-7, bcd_max_iter=500, newton_tol=1e-8, newton_max_iter=100, rank_tol=1e-8, accelerate=false))]
    fn new(
        bcd_tol: f64,
        bcd_max_iter: usize,
        newton_tol: f64,
        newton_max_iter: usize,
        rank_tol: f64,
        accelerate: bool,
    ) -> PyResult<Self> {
        let cfg = FitConfig { bcd_tol, bcd_max_iter, newton_tol, newton_max_iter, rank_tol, accelerate };
        cfg.core().validate().map_err(err)?;
        Ok(cfg)
    }

    fn __repr__(&self) -> String {
        format!(
            "FitConfig(bcd_tol={}, bcd_max_iter={}, newton_tol={}, newton_max_iter={}, rank_tol={}, accelerate={})",
            self.bcd_tol,
            self.bcd_max_iter,
            self.newton_tol,
            self.newton_max_iter,
            self.rank_tol,
            if self.accelerate { "True" } else { "False" }
        )
    }
}

impl FitConfig {
    fn core(&self) -> CoreFitConfig {
        CoreFitConfig {
            bcd_tol: self.bcd_tol,
            bcd_max_iter: self.bcd_max_iter,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            rank_tol: self.rank_tol,
            accelerate: self.accelerate,
        }
    }
}

fn config(cfg: Option<FitConfig>) -> CoreFitConfig {
    cfg.map(|c| c.core()).unwrap_or_default()
}

/// A fitted `theta = D - L`.
#[pyclass(name = "FitResult", frozen)]
pub struct FitResult {
    inner: CoreFitResult,
}

#[pymethods]
impl FitResult {
    #[getter]
    fn theta(&self) -> Vec<Vec<f64>> {
        rows(self.inner.theta().as_matrix())
    }

    #[getter]
    fn low_rank(&self) -> Vec<Vec<f64>> {
        rows(self.inner.decomposition.low_rank.as_matrix())
    }

    #[getter]
    fn diag(&self) -> Vec<f64> {
        self.inner.decomposition.diag.values().iter().cloned().collect()
    }

    #[getter]
    fn low_rank_eigenvalues(&self) -> Vec<f64> {
        self.inner.decomposition.low_rank_eigenvalues.iter().cloned().collect()
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.inner.objective_trace.clone()
    }

    #[getter]
    fn candidate_rank(&self) -> usize {
        self.inner.candidate_rank
    }

    #[getter]
    fn realized_rank(&self) -> usize {
        self.inner.realized_rank()
    }

    #[getter]
    fn penalty(&self) -> f64 {
        self.inner.penalty
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    fn __repr__(&self) -> String {
        format!(
            "FitResult(rank={}, candidate_rank={}, objective={:.6}, penalty={:.6}, converged={})",
            self.inner.realized_rank(),
            self.inner.candidate_rank,
            self.inner.objective,
            self.inner.penalty,
            if self.inner.converged { "True" } else { "False" }
        )
    }
}

/// `trace(theta S) - log|theta|`.
#[pyfunction]
fn objective(theta: Vec<Vec<f64>>, s: Vec<Vec<f64>>) -> PyResult<f64> {
    lodiag::objective(&sym(&theta)?, &sym(&s)?).map_err(err)
}

/// `(1/n) X^T X` of a data matrix with one observation per row.
#[pyfunction]
#[pyo3(signature = (x, center=false))]
fn sample_covariance(x: Vec<Vec<f64>>, center: bool) -> PyResult<Vec<Vec<f64>>> {
    let mut x = matrix(&x)?;
    if center {
        lodiag::linalg::center_columns(&mut x);
    }
    Ok(rows(lodiag::sample_covariance(&x).map_err(err)?.as_matrix()))
}

/// Analytic rank-`r` update of `L` for a fixed diagonal.
#[pyfunction]
fn update_l(d: Vec<f64>, s: Vec<Vec<f64>>, r: usize) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(lodiag::update_l(&diag(d)?, &sym(&s)?, r).map_err(err)?.as_matrix()))
}

/// Newton solve for the diagonal with `L` fixed; returns `(d, converged, iterations)`.
#[pyfunction]
#[pyo3(signature = (l, s, d_init, config=None))]
fn update_d(
    l: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
    d_init: Vec<f64>,
    config: Option<FitConfig>,
) -> PyResult<(Vec<f64>, bool, usize)> {
    let step = lodiag::update_d(&sym(&l)?, &sym(&s)?, &diag(d_init)?, &self::config(config))
        .map_err(err)?;
    Ok((step.diag.values().iter().cloned().collect(), step.converged, step.iterations))
}

/// Fixed-rank fit. The descent starts from `d0`, or from `1 / diag(S)`.
#[pyfunction]
#[pyo3(signature = (s, r, d0=None, config=None))]
fn fit_fixed_rank(
    s: Vec<Vec<f64>>,
    r: usize,
    d0: Option<Vec<f64>>,
    config: Option<FitConfig>,
) -> PyResult<FitResult> {
    let s = sym(&s)?;
    let d0 = match d0 {
        Some(d) => diag(d)?,
        None => diagonal_start(&s).map_err(err)?,
    };
    let inner = lodiag::fit_fixed_rank(&s, r, &d0, &self::config(config)).map_err(err)?;
    Ok(FitResult { inner })
}

/// Rank-penalized fit over `candidate_ranks` with penalty scale `delta`.
#[pyfunction]
#[pyo3(signature = (s, candidate_ranks, n, delta=1.0, config=None))]
fn fit_rank_penalized(
    s: Vec<Vec<f64>>,
    candidate_ranks: Vec<usize>,
    n: usize,
    delta: f64,
    config: Option<FitConfig>,
) -> PyResult<FitResult> {
    let inner = lodiag::fit_rank_penalized(&sym(&s)?, &candidate_ranks, n, delta, &self::config(config))
        .map_err(err)?;
    Ok(FitResult { inner })
}

#[pyfunction]
fn rank_penalty(r: usize, p: usize, n: usize, delta: f64) -> f64 {
    lodiag::rank_penalty(r, p, n, delta)
}

/// `(L0, D0)` with `(L_sigma + D_sigma)^{-1} = D0 - L0`; `D0` is returned as a list.
#[pyfunction]
fn precision_parts_from_covariance(
    l_sigma: Vec<Vec<f64>>,
    d_sigma: Vec<f64>,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let (l0, d0) = lodiag::precision_parts_from_covariance(&sym(&l_sigma)?, &diag(d_sigma)?)
        .map_err(err)?;
    Ok((rows(l0.as_matrix()), d0.values().iter().cloned().collect()))
}

#[pyfunction]
fn kl_loss(theta_hat: Vec<Vec<f64>>, theta0: Vec<Vec<f64>>) -> PyResult<f64> {
    simulation::kl_loss(&sym(&theta_hat)?, &sym(&theta0)?).map_err(err)
}

/// Population covariance of a simulation example, as a dict.
#[pyfunction]
fn make_sigma<'py>(py: Python<'py>, example: u8, p: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let truth = simulation::make_sigma(example, p, seed).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("sigma", rows(truth.sigma.as_matrix()))?;
    out.set_item("theta", rows(truth.theta.as_matrix()))?;
    out.set_item("l0", truth.l0.map(|m| rows(m.as_matrix())))?;
    out.set_item("r0", truth.r0)?;
    out.set_item("exact_split", truth.exact_split)?;
    Ok(out)
}

/// `n` Gaussian draws with covariance `sigma`, one per row.
#[pyfunction]
fn sample_mvn(sigma: Vec<Vec<f64>>, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(&simulation::sample_mvn(&sym(&sigma)?, n, seed).map_err(err)?))
}

/// Mean KL losses of the sample, diagonal and low-rank plus diagonal estimators.
#[pyfunction]
#[pyo3(signature = (example, p, reps=100, seed=0, n=100, n_valid=100, threads=1, config=None))]
#[allow(clippy::too_many_arguments)]
fn run_simulation<'py>(
    py: Python<'py>,
    example: u8,
    p: usize,
    reps: usize,
    seed: u64,
    n: usize,
    n_valid: usize,
    threads: usize,
    config: Option<FitConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut spec = SimulationSpec::new(example, p, reps, seed);
    spec.n = n;
    spec.n_valid = n_valid;
    let cfg = self::config(config);
    let table = py
        .detach(|| simulation::run_simulation_with(&spec, &cfg, threads))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("sample", table.sample.map(|m| (m.mean, m.stderr)))?;
    out.set_item("diagonal", (table.diagonal.mean, table.diagonal.stderr))?;
    out.set_item("ld", (table.ld.mean, table.ld.stderr))?;
    Ok(out)
}

/// Minimum-variance weights with `w' mu = mu0` and `w' 1 = 1`.
#[pyfunction]
fn markowitz_weights(theta: Vec<Vec<f64>>, mu: Vec<f64>, mu0: f64) -> PyResult<Vec<f64>> {
    let w = portfolio::markowitz_weights(&sym(&theta)?, &DVector::from_vec(mu), mu0).map_err(err)?;
    Ok(w.iter().cloned().collect())
}

#[pyfunction]
#[pyo3(signature = (returns, xb=0.0))]
fn sharpe_ratio(returns: Vec<f64>, xb: f64) -> PyResult<f64> {
    portfolio::sharpe_ratio(&returns, xb).map_err(err)
}

/// Rolling Markowitz backtest on a `date,<assets...>` CSV file.
#[pyfunction]
#[pyo3(signature = (panel_csv, estimator="ld", window=72, mu0=0.013, candidate_ranks=None, delta_grid=None, config=None))]
#[allow(clippy::too_many_arguments)]
fn rolling_backtest<'py>(
    py: Python<'py>,
    panel_csv: &str,
    estimator: &str,
    window: usize,
    mu0: f64,
    candidate_ranks: Option<Vec<usize>>,
    delta_grid: Option<Vec<f64>>,
    config: Option<FitConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let panel = ReturnsPanel::from_csv_path(panel_csv).map_err(err)?;
    let estimator: EstimatorKind = estimator.parse().map_err(err)?;
    let defaults = BacktestConfig::default();
    let cfg = BacktestConfig {
        window,
        mu0,
        candidate_ranks: candidate_ranks.unwrap_or(defaults.candidate_ranks),
        delta_grid: delta_grid.unwrap_or(defaults.delta_grid),
        estimator,
        fit: self::config(config),
    };
    let result = py.detach(|| portfolio::rolling_backtest(&panel, &cfg)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("dates", result.dates.clone())?;
    out.set_item("returns", result.realized_returns.clone())?;
    out.set_item(
        "weights",
        result.weights.iter().map(|w| w.iter().cloned().collect::<Vec<f64>>()).collect::<Vec<_>>(),
    )?;
    out.set_item("deltas", result.selected_deltas.clone())?;
    out.set_item("mean_return", result.mean_return)?;
    out.set_item("std_dev", result.std_dev)?;
    out.set_item("stderr", result.stderr)?;
    out.set_item("sharpe", result.sharpe)?;
    Ok(out)
}

#[pymodule]
fn lodiag_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LodiagError", m.py().get_type::<LodiagError>())?;
    m.add_class::<FitConfig>()?;
    m.add_class::<FitResult>()?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(sample_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(update_l, m)?)?;
    m.add_function(wrap_pyfunction!(update_d, m)?)?;
    m.add_function(wrap_pyfunction!(fit_fixed_rank, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rank_penalized, m)?)?;
    m.add_function(wrap_pyfunction!(rank_penalty, m)?)?;
    m.add_function(wrap_pyfunction!(precision_parts_from_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(kl_loss, m)?)?;
    m.add_function(wrap_pyfunction!(make_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(sample_mvn, m)?)?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(markowitz_weights, m)?)?;
    m.add_function(wrap_pyfunction!(sharpe_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(rolling_backtest, m)?)?;
    Ok(())
}
