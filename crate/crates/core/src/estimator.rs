//! Low-rank plus diagonal precision matrix estimation.
//!
//! The precision matrix is modelled as `theta = D - L` with `D` a positive
//! diagonal matrix and `L` a positive semi-definite matrix of rank at most
//! `r`. For a fixed `r` the Gaussian negative log-likelihood
//! `trace(theta S) - log|theta|` is minimized by blockwise coordinate
//! descent: `L` given `D` has a closed form from the top eigenpairs of
//! `D^{1/2} S D^{1/2}`, and `D` given `L` is a smooth convex program in `p`
//! variables solved by damped Newton. The rank itself is chosen by adding a
//! scaled AIC penalty and sweeping an ascending list of candidate ranks with
//! warm starts.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{chol_pd, inv_from_cholesky, inv_pd, sym_eig, DiagMatrix, SymMatrix};

/// Convergence controls for [`fit_fixed_rank`] and [`update_d`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Stop when the objective changes by less than `bcd_tol * max(1, |f|)`.
    pub bcd_tol: f64,
    pub bcd_max_iter: usize,
    /// Stop Newton when `max_j |S_jj - [(D - L)^{-1}]_jj|` falls below this.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Eigenvalues of `L` above `rank_tol * max(1, lambda_max(L))` count toward its rank.
    pub rank_tol: f64,
    /// Extrapolate the diagonal from consecutive sweeps (squared
    /// extrapolation). Every recorded iterate is still the result of a full
    /// sweep, so the objective trace stays non-increasing.
    pub accelerate: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            bcd_tol: 1e-7,
            bcd_max_iter: 500,
            newton_tol: 1e-8,
            newton_max_iter: 100,
            rank_tol: 1e-8,
            accelerate: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let tols = [self.bcd_tol, self.newton_tol, self.rank_tol];
        if tols.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.bcd_max_iter == 0 || self.newton_max_iter == 0 {
            return Err(Error::InvalidInput("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

/// `theta = D - L` with `L` PSD and `D` positive diagonal.
#[derive(Debug, Clone)]
pub struct PrecisionDecomposition {
    pub low_rank: SymMatrix,
    pub diag: DiagMatrix,
    pub theta: SymMatrix,
    /// Eigenvalues of `low_rank`, non-increasing.
    pub low_rank_eigenvalues: DVector<f64>,
    /// Numerical rank of `low_rank`.
    pub rank: usize,
}

impl PrecisionDecomposition {
    fn new(low_rank: SymMatrix, diag: DiagMatrix, rank_tol: f64) -> Result<Self> {
        let theta = low_rank.sub_from_diag(&diag);
        let low_rank_eigenvalues = sym_eig(&low_rank)?.values;
        let top = low_rank_eigenvalues.iter().cloned().fold(0.0, f64::max);
        let tol = rank_tol * top.max(1.0);
        let rank = low_rank_eigenvalues.iter().filter(|&&v| v > tol).count();
        Ok(PrecisionDecomposition {
            low_rank,
            diag,
            theta,
            low_rank_eigenvalues,
            rank,
        })
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub decomposition: PrecisionDecomposition,
    /// `trace(theta S) - log|theta|` at the returned estimate (no penalty).
    pub objective: f64,
    /// Objective after every completed L/D sweep; the last entry equals `objective`.
    pub objective_trace: Vec<f64>,
    /// The rank bound `r` the fit was run with.
    pub candidate_rank: usize,
    /// Rank penalty added during selection; zero for fixed-rank fits.
    pub penalty: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn realized_rank(&self) -> usize {
        self.decomposition.rank
    }

    pub fn theta(&self) -> &SymMatrix {
        &self.decomposition.theta
    }

    pub fn penalized_objective(&self) -> f64 {
        self.objective + self.penalty
    }
}

/// Negative Gaussian log-likelihood `trace(theta S) - log|theta|`, up to constants.
pub fn objective(theta: &SymMatrix, s: &SymMatrix) -> Result<f64> {
    check_same_dim(theta, s)?;
    let g = chol_pd(theta)?;
    Ok(theta.trace_product(s) - logdet_from_factor(&g))
}

fn logdet_from_factor(g: &DMatrix<f64>) -> f64 {
    2.0 * g.diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

fn check_same_dim(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Minimizer of `trace{(D - L) S} - log|D - L|` over PSD `L` of rank at most `r`.
///
/// With `(w_i, u_i)` the top `r` eigenpairs of `D^{1/2} S D^{1/2}`, the
/// minimizer is `D^{1/2} U diag(1 - 1/max(w_i, 1)) U^T D^{1/2}`.
pub fn update_l(d: &DiagMatrix, s: &SymMatrix, r: usize) -> Result<SymMatrix> {
    let b = low_rank_factor(d, s, r)?;
    let l = &b * b.transpose();
    Ok(SymMatrix::from_fn(s.dim(), |i, j| 0.5 * (l[(i, j)] + l[(j, i)])))
}

/// `B = D^{1/2} U V^{1/2}` with `L = B B^T`; directions with `w_i <= 1` are dropped.
fn low_rank_factor(d: &DiagMatrix, s: &SymMatrix, r: usize) -> Result<DMatrix<f64>> {
    let p = s.dim();
    if d.dim() != p {
        return Err(Error::InvalidInput(format!(
            "diagonal has dimension {}, expected {p}",
            d.dim()
        )));
    }
    if !d.is_positive() {
        return Err(Error::InvalidInput("diagonal entries must be positive".into()));
    }
    if r > p {
        return Err(Error::InvalidInput(format!("rank {r} exceeds dimension {p}")));
    }
    if r == 0 {
        return Ok(DMatrix::zeros(p, 0));
    }
    let root: Vec<f64> = d.values().iter().map(|v| v.sqrt()).collect();
    let scaled = SymMatrix::from_fn(p, |i, j| root[i] * s.get(i, j) * root[j]);
    let eig = sym_eig(&scaled)?;

    let kept: Vec<(usize, f64)> = (0..r)
        .map(|k| (k, 1.0 - 1.0 / eig.values[k].max(1.0)))
        .filter(|&(_, v)| v > 0.0)
        .collect();
    Ok(DMatrix::from_fn(p, kept.len(), |i, c| {
        let (k, v) = kept[c];
        root[i] * eig.vectors[(i, k)] * v.sqrt()
    }))
}

/// Outcome of the diagonal Newton solve.
#[derive(Debug, Clone)]
pub struct DiagUpdate {
    pub diag: DiagMatrix,
    /// Whether the gradient infinity-norm reached `newton_tol`.
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// `sum_j d_j S_jj - log|diag(d) - L|` at the returned diagonal.
    pub value: f64,
}

/// The convex program in `d` behind the diagonal update.
trait DiagProgram {
    /// `-log|diag(d) - L|`, or `None` when `diag(d) - L` is not positive definite.
    fn neg_logdet(&self, d: &DVector<f64>) -> Option<f64>;
    /// `(diag(d) - L)^{-1}` at a feasible `d`.
    fn inverse(&self, d: &DVector<f64>) -> DMatrix<f64>;
}

struct DenseProgram<'a> {
    low_rank: &'a SymMatrix,
}

impl DenseProgram<'_> {
    fn factor(&self, d: &DVector<f64>) -> Option<DMatrix<f64>> {
        if d.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let mut m = -self.low_rank.as_matrix().clone();
        for (j, v) in d.iter().enumerate() {
            m[(j, j)] += v;
        }
        chol_pd(&SymMatrix::new(m).ok()?).ok()
    }
}

impl DiagProgram for DenseProgram<'_> {
    fn neg_logdet(&self, d: &DVector<f64>) -> Option<f64> {
        self.factor(d).map(|g| -logdet_from_factor(&g))
    }

    fn inverse(&self, d: &DVector<f64>) -> DMatrix<f64> {
        let g = self.factor(d).expect("inverse requested at a feasible point");
        inv_from_cholesky(&g).into_inner()
    }
}

/// `L = B B^T` handled through the Woodbury identity: with `E = D^{-1} B`
/// and `C = I - B^T E`, `(D - L)^{-1} = D^{-1} + E C^{-1} E^T` and
/// `log|D - L| = sum log d_j + log|C|`.
struct FactoredProgram<'a> {
    factor: &'a DMatrix<f64>,
}

impl FactoredProgram<'_> {
    fn capacitance(&self, d: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let e = DMatrix::from_fn(self.factor.nrows(), self.factor.ncols(), |i, c| {
            self.factor[(i, c)] / d[i]
        });
        let k = self.factor.ncols();
        let c = DMatrix::identity(k, k) - self.factor.tr_mul(&e);
        (e, c)
    }
}

impl DiagProgram for FactoredProgram<'_> {
    fn neg_logdet(&self, d: &DVector<f64>) -> Option<f64> {
        if d.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let diag_part: f64 = d.iter().map(|v| v.ln()).sum();
        if self.factor.ncols() == 0 {
            return Some(-diag_part);
        }
        let (_, c) = self.capacitance(d);
        let g = chol_pd(&SymMatrix::symmetrize(&c).ok()?).ok()?;
        Some(-(diag_part + logdet_from_factor(&g)))
    }

    fn inverse(&self, d: &DVector<f64>) -> DMatrix<f64> {
        let p = d.len();
        let mut m = DMatrix::from_diagonal(&d.map(|v| 1.0 / v));
        if self.factor.ncols() > 0 {
            let (e, c) = self.capacitance(d);
            let c_inv = inv_pd(&SymMatrix::symmetrize(&c).expect("square"))
                .expect("inverse requested at a feasible point");
            let ec = &e * c_inv.as_matrix();
            m += ec * e.transpose();
        }
        DMatrix::from_fn(p, p, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }
}

/// Minimizes `g(d) = sum_j d_j S_jj - log|diag(d) - L|` over `d` by damped
/// Newton with a feasibility-preserving Armijo backtracking search.
///
/// The gradient is `S_jj - [(D - L)^{-1}]_jj` and the Hessian is the
/// elementwise square of `(D - L)^{-1}`. Failure to reach `newton_tol` is
/// reported through [`DiagUpdate::converged`]; the returned diagonal never
/// has a larger objective than `d_init`.
pub fn update_d(
    l: &SymMatrix,
    s: &SymMatrix,
    d_init: &DiagMatrix,
    cfg: &FitConfig,
) -> Result<DiagUpdate> {
    check_same_dim(l, s)?;
    newton_diag(&DenseProgram { low_rank: l }, s, d_init, cfg)
}

/// Gradient `S_jj - [(diag(d) - L)^{-1}]_jj` of the diagonal program.
pub fn diag_gradient(l: &SymMatrix, s: &SymMatrix, d: &DiagMatrix) -> Result<DVector<f64>> {
    check_same_dim(l, s)?;
    if d.dim() != s.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let inv = inv_pd(&l.sub_from_diag(d))?;
    Ok(DVector::from_fn(s.dim(), |j, _| s.get(j, j) - inv.get(j, j)))
}

fn newton_diag(
    program: &impl DiagProgram,
    s: &SymMatrix,
    d_init: &DiagMatrix,
    cfg: &FitConfig,
) -> Result<DiagUpdate> {
    let p = s.dim();
    if d_init.dim() != p {
        return Err(Error::InvalidInput(format!(
            "initial diagonal has dimension {}, expected {p}",
            d_init.dim()
        )));
    }
    let s_diag = s.diagonal();
    let mut d = d_init.values().clone();
    let mut value = match program.neg_logdet(&d) {
        Some(v) => s_diag.dot(&d) + v,
        None => {
            return Err(Error::InvalidInput(
                "initial diagonal does not make diag(d) - L positive definite".into(),
            ))
        }
    };

    let mut gradient_norm;
    let mut iterations = 0;
    loop {
        let inv = program.inverse(&d);
        let grad = DVector::from_fn(p, |j, _| s_diag[j] - inv[(j, j)]);
        gradient_norm = grad.amax();
        if gradient_norm <= cfg.newton_tol || iterations == cfg.newton_max_iter {
            break;
        }
        iterations += 1;

        let hessian = inv.component_mul(&inv);
        let step = match hessian.clone().cholesky() {
            Some(h) => -h.solve(&grad),
            // The Hessian is a Schur product of PD matrices; fall back to a
            // diagonally scaled gradient step if roundoff breaks that.
            None => DVector::from_fn(p, |j, _| -grad[j] / hessian[(j, j)]),
        };
        let slope = grad.dot(&step);
        let roundoff = 1e-13 * value.abs().max(1.0);

        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-14 {
            let trial = &d + &step * t;
            if let Some(v) = program.neg_logdet(&trial) {
                let trial_value = s_diag.dot(&trial) + v;
                // Near the optimum the Armijo decrease drops below the
                // rounding error of g; a full step is then accepted as long
                // as it does not visibly increase g.
                if trial_value <= value + 1e-4 * t * slope
                    || (t == 1.0 && -slope <= roundoff && trial_value <= value + roundoff)
                {
                    accepted = Some((trial, trial_value));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, trial_value)) => {
                d = trial;
                value = trial_value;
            }
            None => break,
        }
    }
    Ok(DiagUpdate {
        diag: DiagMatrix::new(d)?,
        converged: gradient_norm <= cfg.newton_tol,
        iterations,
        gradient_norm,
        value,
    })
}

fn check_covariance(s: &SymMatrix) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::InvalidInput("covariance has non-finite entries".into()));
    }
    if let Some(j) = (0..s.dim()).find(|&j| !(s.get(j, j) > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "coordinate {j} has non-positive variance {}",
            s.get(j, j)
        )));
    }
    Ok(())
}

/// `diag(1/S_11, ..., 1/S_pp)`, the exact solution when `L = 0`.
pub fn diagonal_start(s: &SymMatrix) -> Result<DiagMatrix> {
    check_covariance(s)?;
    DiagMatrix::new(s.diagonal().map(|v| 1.0 / v))
}

/// Fixed-rank estimate: minimizes `trace(theta S) - log|theta|` over
/// `theta = D - L` with `rank(L) <= r`, starting the descent from `d0`.
pub fn fit_fixed_rank(
    s: &SymMatrix,
    r: usize,
    d0: &DiagMatrix,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    check_covariance(s)?;
    let p = s.dim();
    if r > p {
        return Err(Error::InvalidInput(format!("rank {r} exceeds dimension {p}")));
    }
    if d0.dim() != p || !d0.is_positive() {
        return Err(Error::InvalidInput(
            "starting diagonal must be positive with matching dimension".into(),
        ));
    }

    if r == 0 {
        let diag = diagonal_start(s)?;
        let decomposition = PrecisionDecomposition::new(SymMatrix::zeros(p), diag, cfg.rank_tol)?;
        let value = objective(&decomposition.theta, s)?;
        return Ok(FitResult {
            decomposition,
            objective: value,
            objective_trace: vec![value],
            candidate_rank: 0,
            penalty: 0.0,
            converged: true,
            iterations: 0,
        });
    }

    let mut state = Sweep {
        diag: d0.clone(),
        factor: DMatrix::zeros(p, 0),
        value: objective(&d0.to_sym(), s)?,
    };
    let mut objective_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let accept = |state: &mut Sweep, next: Sweep, trace: &mut Vec<f64>| {
        let done = (state.value - next.value).abs() <= cfg.bcd_tol * state.value.abs().max(1.0);
        trace.push(next.value);
        *state = next;
        done
    };
    'outer: while iterations < cfg.bcd_max_iter {
        let x0 = state.diag.values().clone();
        iterations += 1;
        let first = sweep(s, r, &state.diag, cfg)?;
        if accept(&mut state, first, &mut objective_trace) {
            converged = true;
            break;
        }
        if !cfg.accelerate || iterations == cfg.bcd_max_iter {
            continue;
        }
        let x1 = state.diag.values().clone();
        iterations += 1;
        let second = sweep(s, r, &state.diag, cfg)?;
        if accept(&mut state, second, &mut objective_trace) {
            converged = true;
            break;
        }
        // Squared extrapolation from the last two sweeps, kept only when the
        // sweep taken from the extrapolated point improves on plain descent.
        let step = &x1 - &x0;
        let curvature = state.diag.values() - &x1 * 2.0 + &x0;
        let (rn, vn) = (step.norm(), curvature.norm());
        if !(vn > 0.0) {
            continue;
        }
        let mut alpha = -(rn / vn);
        while alpha < -1.0 && iterations < cfg.bcd_max_iter {
            let proposal = &x0 - &step * (2.0 * alpha) + &curvature * (alpha * alpha);
            if proposal.iter().all(|v| *v > 0.0 && v.is_finite()) {
                iterations += 1;
                let trial = sweep(s, r, &DiagMatrix::new(proposal)?, cfg)?;
                if trial.value <= state.value {
                    if accept(&mut state, trial, &mut objective_trace) {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
            }
            alpha = 0.5 * (alpha - 1.0);
            if alpha > -1.0 - 1e-3 {
                break;
            }
        }
    }
    let Sweep { diag, factor, .. } = state;
    let l = &factor * factor.transpose();
    let low_rank = SymMatrix::from_fn(p, |i, j| 0.5 * (l[(i, j)] + l[(j, i)]));
    let decomposition = PrecisionDecomposition::new(low_rank, diag, cfg.rank_tol)?;
    let value = *objective_trace.last().expect("at least one iteration");
    Ok(FitResult {
        decomposition,
        objective: value,
        objective_trace,
        candidate_rank: r,
        penalty: 0.0,
        converged,
        iterations,
    })
}

struct Sweep {
    diag: DiagMatrix,
    factor: DMatrix<f64>,
    value: f64,
}

/// One pass of the block descent: the analytic low-rank update at `diag`
/// followed by a Newton solve for the diagonal.
fn sweep(s: &SymMatrix, r: usize, diag: &DiagMatrix, cfg: &FitConfig) -> Result<Sweep> {
    let factor = low_rank_factor(diag, s, r)?;
    let step = newton_diag(&FactoredProgram { factor: &factor }, s, diag, cfg)?;
    // trace{(D - B B^T) S} - log|D - B B^T| = g(d) - trace(B^T S B)
    let value = step.value - factor.dot(&(s.as_matrix() * &factor));
    Ok(Sweep { diag: step.diag, factor, value })
}

/// Scaled AIC rank penalty `delta * {2p(r + 1) - r(r - 1)} / n`.
pub fn rank_penalty(r: usize, p: usize, n: usize, delta: f64) -> f64 {
    let (r, p, n) = (r as f64, p as f64, n as f64);
    delta * (2.0 * p * (r + 1.0) - r * (r - 1.0)) / n
}

fn check_candidates(ranks: &[usize], p: usize) -> Result<()> {
    if ranks.is_empty() {
        return Err(Error::InvalidInput("no candidate ranks".into()));
    }
    if ranks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "candidate ranks must be strictly ascending".into(),
        ));
    }
    if let Some(&r) = ranks.iter().find(|&&r| r > p) {
        return Err(Error::InvalidInput(format!(
            "candidate rank {r} exceeds dimension {p}"
        )));
    }
    Ok(())
}

/// Fixed-rank fits over ascending `ranks`, each warm-started from the
/// previous fit's diagonal. The first fit starts from `diag(1/S_jj)`.
pub fn fit_rank_path(s: &SymMatrix, ranks: &[usize], cfg: &FitConfig) -> Result<Vec<FitResult>> {
    check_candidates(ranks, s.dim())?;
    let mut start = diagonal_start(s)?;
    let mut path = Vec::with_capacity(ranks.len());
    for &r in ranks {
        let fit = fit_fixed_rank(s, r, &start, cfg)?;
        start = fit.decomposition.diag.clone();
        path.push(fit);
    }
    Ok(path)
}

/// Picks the fit minimizing `objective + rank_penalty(realized rank)`.
///
/// Ties go to the smaller realized rank, then to the earlier candidate.
pub fn select_by_penalty(path: &[FitResult], n: usize, delta: f64) -> Result<FitResult> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let mut best: Option<(f64, &FitResult)> = None;
    for fit in path {
        let p = fit.decomposition.theta.dim();
        let score = fit.objective + rank_penalty(fit.realized_rank(), p, n, delta);
        let better = match best {
            None => true,
            Some((best_score, best_fit)) => {
                score < best_score
                    || (score == best_score && fit.realized_rank() < best_fit.realized_rank())
            }
        };
        if better {
            best = Some((score, fit));
        }
    }
    let (_, fit) = best.ok_or_else(|| Error::InvalidInput("empty fit path".into()))?;
    let mut selected = fit.clone();
    let p = selected.decomposition.theta.dim();
    selected.penalty = rank_penalty(selected.realized_rank(), p, n, delta);
    Ok(selected)
}

/// Rank-penalized estimate: sweeps `candidate_ranks` with warm starts and
/// returns the fit minimizing the penalized objective for sample size `n`.
pub fn fit_rank_penalized(
    s: &SymMatrix,
    candidate_ranks: &[usize],
    n: usize,
    delta: f64,
    cfg: &FitConfig,
) -> Result<FitResult> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    let path = fit_rank_path(s, candidate_ranks, cfg)?;
    select_by_penalty(&path, n, delta)
}

/// Precision-side parts of a covariance `Sigma = L_sigma + D_sigma`:
/// `D0 = D_sigma^{-1}` and `L0 = D_sigma^{-1} (I + L_sigma D_sigma^{-1})^{-1} L_sigma D_sigma^{-1}`,
/// so that `Sigma^{-1} = D0 - L0` and `rank(L0) <= rank(L_sigma)`.
pub fn precision_parts_from_covariance(
    l_sigma: &SymMatrix,
    d_sigma: &DiagMatrix,
) -> Result<(SymMatrix, DiagMatrix)> {
    let p = l_sigma.dim();
    if d_sigma.dim() != p {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    if !d_sigma.is_positive() {
        return Err(Error::InvalidInput("diagonal part must be positive".into()));
    }
    chol_pd(&l_sigma.add(&d_sigma.to_sym()))?;

    let d_inv = d_sigma.recip();
    let di = d_inv.values();
    // L_sigma D^{-1} scales columns; D^{-1} L_sigma D^{-1} scales both sides.
    let l_dinv = DMatrix::from_fn(p, p, |i, j| l_sigma.get(i, j) * di[j]);
    let inner = DMatrix::<f64>::identity(p, p) + &l_dinv;
    let solved = inner
        .lu()
        .solve(&l_dinv)
        .ok_or(Error::NotPositiveDefinite)?;
    let l0 = DMatrix::from_fn(p, p, |i, j| di[i] * solved[(i, j)]);
    let l0 = SymMatrix::from_fn(p, |i, j| 0.5 * (l0[(i, j)] + l0[(j, i)]));
    Ok((l0, d_inv))
}
