//! Simulation harness: population covariance generators, Gaussian sampling,
//! Kullback-Leibler loss, replicated loss tables and rank-recovery summaries.
//!
//! Randomness comes from ChaCha8 streams. The population matrix of a run is
//! drawn from `seed` itself; replication `i` draws its data from
//! `seed ^ splitmix64(i)`, so replications are independent of each other and
//! of the order in which they are executed.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{
    fit_rank_path, objective, precision_parts_from_covariance, select_by_penalty, FitConfig,
};
use crate::linalg::{chol_pd, inv_pd, logdet_pd, sample_covariance, sym_eig, DiagMatrix, SymMatrix};

/// Default candidate ranks for the simulation study.
pub const DEFAULT_CANDIDATE_RANKS: [usize; 5] = [1, 3, 5, 7, 9];
/// Default penalty scales for the simulation study.
pub const DEFAULT_DELTA_GRID: [f64; 5] = [0.6, 0.8, 1.0, 1.2, 1.4];

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub example_id: u8,
    pub p: usize,
    pub n: usize,
    pub n_valid: usize,
    pub reps: usize,
    pub seed: u64,
    pub delta_grid: Vec<f64>,
    pub candidate_ranks: Vec<usize>,
}

impl SimulationSpec {
    /// Spec with the default sample sizes (100 training, 100 validation) and grids.
    pub fn new(example_id: u8, p: usize, reps: usize, seed: u64) -> Self {
        SimulationSpec {
            example_id,
            p,
            n: 100,
            n_valid: 100,
            reps,
            seed,
            delta_grid: DEFAULT_DELTA_GRID.to_vec(),
            candidate_ranks: DEFAULT_CANDIDATE_RANKS.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_example(self.example_id, self.p)?;
        if self.n == 0 || self.n_valid == 0 || self.reps == 0 {
            return Err(Error::InvalidInput(
                "sample sizes and replication count must be positive".into(),
            ));
        }
        if self.delta_grid.is_empty() || self.delta_grid.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidInput("delta grid must be non-empty and positive".into()));
        }
        Ok(())
    }
}

fn check_example(example_id: u8, p: usize) -> Result<()> {
    if !(1..=5).contains(&example_id) {
        return Err(Error::InvalidInput(format!(
            "example id must be between 1 and 5, got {example_id}"
        )));
    }
    if p < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {p}")));
    }
    if example_id == 3 && !p.is_multiple_of(5) {
        return Err(Error::InvalidInput(format!(
            "example 3 needs p divisible by 5, got {p}"
        )));
    }
    Ok(())
}

/// Population covariance with its precision and, where the construction
/// provides one, its low-rank plus diagonal split.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub example_id: u8,
    pub sigma: SymMatrix,
    pub theta: SymMatrix,
    pub l_sigma: Option<SymMatrix>,
    pub d_sigma: Option<DiagMatrix>,
    /// Low-rank part of the precision, from the covariance split.
    pub l0: Option<SymMatrix>,
    pub r0: Option<usize>,
    /// False for example 4, whose split only approximates `sigma`.
    pub exact_split: bool,
}

/// SplitMix64 finalizer, used to derive per-replication seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_seed(seed: u64, replication: usize) -> u64 {
    seed ^ splitmix64(replication as u64)
}

fn gram_plus_identity(r: &DMatrix<f64>) -> (SymMatrix, SymMatrix) {
    let rrt = r * r.transpose();
    let p = r.nrows();
    let low = SymMatrix::from_fn(p, |i, j| rrt[(i, j)]);
    let sigma = SymMatrix::from_fn(p, |i, j| rrt[(i, j)] + if i == j { 1.0 } else { 0.0 });
    (low, sigma)
}

fn shift_to_pd(b: &SymMatrix) -> Result<SymMatrix> {
    let lambda_min = *sym_eig(b)?.values.as_slice().last().expect("non-empty");
    let shift = lambda_min.min(0.0).abs() + 0.05;
    Ok(SymMatrix::from_fn(b.dim(), |i, j| {
        b.get(i, j) + if i == j { shift } else { 0.0 }
    }))
}

/// Builds the population covariance of example `example_id` (1 to 5).
pub fn make_sigma(example_id: u8, p: usize, seed: u64) -> Result<GroundTruth> {
    check_example(example_id, p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sigma, l_sigma, d_sigma, r0, exact_split) = match example_id {
        1 => {
            let low = SymMatrix::from_fn(p, |_, _| 0.2);
            let sigma = SymMatrix::from_fn(p, |i, j| if i == j { 1.0 } else { 0.2 });
            (sigma, Some(low), Some(DiagMatrix::new(vec![0.8; p].into())?), Some(1), true)
        }
        2 => {
            let r = DMatrix::from_fn(p, 5, |_, _| rng.random::<f64>());
            let (low, sigma) = gram_plus_identity(&r);
            (sigma, Some(low), Some(DiagMatrix::identity(p)), Some(5), true)
        }
        3 => {
            let q = p / 5;
            let low = SymMatrix::from_fn(p, |i, j| if i / q == j / q { 0.2 } else { 0.0 });
            let sigma = SymMatrix::from_fn(p, |i, j| {
                if i == j {
                    1.0
                } else if i / q == j / q {
                    0.2
                } else {
                    0.0
                }
            });
            (sigma, Some(low), Some(DiagMatrix::new(vec![0.8; p].into())?), Some(5), true)
        }
        4 => {
            let mut r = DMatrix::zeros(p, 3);
            for i in 0..p {
                for k in 0..3 {
                    let keep = rng.random::<f64>() < 0.8;
                    let value = rng.random::<f64>();
                    r[(i, k)] = if keep { value } else { 0.0 };
                }
            }
            let (low, b0) = gram_plus_identity(&r);
            let mut b1 = DMatrix::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    let keep = rng.random::<f64>() < 0.05;
                    let value = rng.random_range(-0.05..0.05);
                    b1[(i, j)] = if keep { value } else { 0.0 };
                }
            }
            let b0_inv = inv_pd(&b0)?;
            let perturbed = DMatrix::from_fn(p, p, |i, j| {
                b0_inv.get(i, j) + 0.5 * (b1[(i, j)] + b1[(j, i)])
            });
            let b = perturbed.try_inverse().ok_or_else(|| {
                Error::InvalidInput("perturbed precision is singular; try another seed".into())
            })?;
            let sigma = shift_to_pd(&SymMatrix::symmetrize(&b)?)?;
            (sigma, Some(low), Some(DiagMatrix::identity(p)), Some(3), false)
        }
        5 => {
            let b0 = DMatrix::from_fn(p, p, |_, _| if rng.random::<f64>() < 0.5 { 0.5 } else { 0.0 });
            let b = SymMatrix::from_fn(p, |i, j| b0[(i, j)] + b0[(j, i)]);
            let theta = shift_to_pd(&b)?;
            let sigma = inv_pd(&theta)?;
            return Ok(GroundTruth {
                example_id,
                sigma,
                theta,
                l_sigma: None,
                d_sigma: None,
                l0: None,
                r0: None,
                exact_split: false,
            });
        }
        _ => unreachable!("example id checked above"),
    };
    let theta = inv_pd(&sigma)?;
    let l0 = match (&l_sigma, &d_sigma) {
        (Some(l), Some(d)) => Some(precision_parts_from_covariance(l, d)?.0),
        _ => None,
    };
    Ok(GroundTruth {
        example_id,
        sigma,
        theta,
        l_sigma,
        d_sigma,
        l0,
        r0,
        exact_split,
    })
}

/// Draws `n` rows `G z` with `G = chol(sigma)` and `z` standard normal.
pub fn sample_mvn(sigma: &SymMatrix, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let factor = chol_pd(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_with_factor(&factor, n, &mut rng))
}

fn sample_with_factor(factor: &DMatrix<f64>, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let p = factor.nrows();
    let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    z * factor.transpose()
}

/// `trace(theta0^{-1} theta_hat) - log|theta0^{-1} theta_hat| - p`.
pub fn kl_loss(theta_hat: &SymMatrix, theta0: &SymMatrix) -> Result<f64> {
    if theta_hat.dim() != theta0.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let sigma0 = inv_pd(theta0)?;
    kl_loss_with_sigma(theta_hat, &sigma0, logdet_pd(theta0)?)
}

fn kl_loss_with_sigma(theta_hat: &SymMatrix, sigma0: &SymMatrix, logdet_theta0: f64) -> Result<f64> {
    let p = theta_hat.dim() as f64;
    Ok(sigma0.trace_product(theta_hat) - logdet_pd(theta_hat)? + logdet_theta0 - p)
}

/// Everything recorded for one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub index: usize,
    /// KL loss of `S^{-1}`; `None` when `p >= n` or `S` is singular.
    pub kl_sample: Option<f64>,
    pub kl_diagonal: f64,
    pub kl_ld: f64,
    pub selected_delta: f64,
    pub selected_rank: usize,
    /// Eigenvalues of the selected low-rank part, non-increasing.
    pub ld_eigenvalues: Vec<f64>,
}

fn run_replication(
    spec: &SimulationSpec,
    truth: &GroundTruth,
    factor: &DMatrix<f64>,
    logdet_theta0: f64,
    grid: &[f64],
    cfg: &FitConfig,
    index: usize,
) -> Result<Replication> {
    let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(spec.seed, index));
    let train = sample_with_factor(factor, spec.n, &mut rng);
    let valid = sample_with_factor(factor, spec.n_valid, &mut rng);
    let s = sample_covariance(&train)?;
    let s_valid = sample_covariance(&valid)?;

    let kl_sample = if spec.p < spec.n {
        match inv_pd(&s) {
            Ok(theta) => Some(kl_loss_with_sigma(&theta, &truth.sigma, logdet_theta0)?),
            Err(Error::NotPositiveDefinite) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let diagonal = DiagMatrix::new(s.diagonal())?.recip().to_sym();
    let kl_diagonal = kl_loss_with_sigma(&diagonal, &truth.sigma, logdet_theta0)?;

    let path = fit_rank_path(&s, &spec.candidate_ranks, cfg)?;
    let mut best = None;
    for &delta in grid {
        let fit = select_by_penalty(&path, spec.n, delta)?;
        let score = objective(fit.theta(), &s_valid)?;
        if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
            best = Some((score, delta, fit));
        }
    }
    let (_, selected_delta, fit) = best.expect("non-empty delta grid");
    let kl_ld = kl_loss_with_sigma(fit.theta(), &truth.sigma, logdet_theta0)?;
    Ok(Replication {
        index,
        kl_sample,
        kl_diagonal,
        kl_ld,
        selected_delta,
        selected_rank: fit.realized_rank(),
        ld_eigenvalues: fit.decomposition.low_rank_eigenvalues.iter().cloned().collect(),
    })
}

/// Runs every replication of `spec` on `threads` worker threads.
///
/// Results are ordered by replication index and do not depend on `threads`.
pub fn simulate_replications(
    spec: &SimulationSpec,
    truth: &GroundTruth,
    cfg: &FitConfig,
    threads: usize,
) -> Result<Vec<Replication>> {
    spec.validate()?;
    if truth.sigma.dim() != spec.p {
        return Err(Error::InvalidInput("ground truth dimension does not match spec".into()));
    }
    let factor = chol_pd(&truth.sigma)?;
    let logdet_theta0 = logdet_pd(&truth.theta)?;
    let mut grid = spec.delta_grid.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));

    let one = |i| run_replication(spec, truth, &factor, logdet_theta0, &grid, cfg, i);
    if threads <= 1 {
        (0..spec.reps).map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        pool.install(|| (0..spec.reps).into_par_iter().map(one).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodLoss {
    pub mean: f64,
    pub stderr: f64,
}

impl MethodLoss {
    /// Mean and `sd / sqrt(len)` with the `len - 1` divisor.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        MethodLoss { mean, stderr }
    }
}

/// Mean and standard error of the KL loss for each estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    pub example_id: u8,
    pub p: usize,
    pub n: usize,
    pub reps: usize,
    /// `None` when the sample covariance could not be inverted in some replication.
    pub sample: Option<MethodLoss>,
    pub diagonal: MethodLoss,
    pub ld: MethodLoss,
}

impl LossTable {
    pub fn from_replications(spec: &SimulationSpec, reps: &[Replication]) -> Self {
        let sample: Option<Vec<f64>> = reps.iter().map(|r| r.kl_sample).collect();
        let diagonal: Vec<f64> = reps.iter().map(|r| r.kl_diagonal).collect();
        let ld: Vec<f64> = reps.iter().map(|r| r.kl_ld).collect();
        LossTable {
            example_id: spec.example_id,
            p: spec.p,
            n: spec.n,
            reps: reps.len(),
            sample: sample.map(|v| MethodLoss::from_values(&v)),
            diagonal: MethodLoss::from_values(&diagonal),
            ld: MethodLoss::from_values(&ld),
        }
    }

    /// CSV with header `method,mean_kl,stderr`; an unavailable method prints `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,mean_kl,stderr\n");
        let row = |out: &mut String, name: &str, loss: Option<MethodLoss>| match loss {
            Some(l) => writeln!(out, "{name},{:.17e},{:.17e}", l.mean, l.stderr).unwrap(),
            None => writeln!(out, "{name},NA,NA").unwrap(),
        };
        row(&mut out, "S", self.sample);
        row(&mut out, "D_S", Some(self.diagonal));
        row(&mut out, "LD", Some(self.ld));
        out
    }

    /// Plain-text table, one row per (example, p) cell.
    pub fn to_table(&self) -> String {
        let cell = |loss: Option<MethodLoss>| match loss {
            Some(l) => format!("{:.4} ({:.3})", l.mean, l.stderr),
            None => "NA".to_string(),
        };
        let mut out = String::new();
        writeln!(out, "{:<10} {:<8} {:>18} {:>18} {:>18}", "", "", "S", "D_S", "LD").unwrap();
        writeln!(
            out,
            "{:<10} {:<8} {:>18} {:>18} {:>18}",
            format!("Example {}", self.example_id),
            format!("p = {}", self.p),
            cell(self.sample),
            cell(Some(self.diagonal)),
            cell(Some(self.ld)),
        )
        .unwrap();
        out
    }
}

/// Replicated KL losses of the sample, diagonal and low-rank plus diagonal estimators.
pub fn run_simulation(spec: &SimulationSpec) -> Result<LossTable> {
    run_simulation_with(spec, &FitConfig::default(), 1)
}

pub fn run_simulation_with(spec: &SimulationSpec, cfg: &FitConfig, threads: usize) -> Result<LossTable> {
    spec.validate()?;
    let truth = make_sigma(spec.example_id, spec.p, spec.seed)?;
    let reps = simulate_replications(spec, &truth, cfg, threads)?;
    Ok(LossTable::from_replications(spec, &reps))
}

/// Top-`k` eigenvalues of the estimated low-rank part against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRecovery {
    pub example_id: u8,
    pub p: usize,
    pub reps: usize,
    /// Top-`k` eigenvalues of the true `L0`, zero-padded.
    pub truth: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `mean - 1.96 * stderr`.
    pub lower: Vec<f64>,
    /// `mean + 1.96 * stderr`.
    pub upper: Vec<f64>,
    pub realized_ranks: Vec<usize>,
}

fn top_k_padded(values: impl IntoIterator<Item = f64>, k: usize) -> Vec<f64> {
    let mut top: Vec<f64> = values.into_iter().take(k).map(|v| v.max(0.0)).collect();
    top.resize(k, 0.0);
    top
}

impl RankRecovery {
    pub fn from_replications(truth: &GroundTruth, reps: &[Replication], k: usize) -> Result<Self> {
        let l0 = truth.l0.as_ref().ok_or_else(|| {
            Error::InvalidInput("ground truth has no low-rank component".into())
        })?;
        let truth_top = top_k_padded(sym_eig(l0)?.values.iter().cloned(), k);
        let per_rep: Vec<Vec<f64>> = reps
            .iter()
            .map(|r| top_k_padded(r.ld_eigenvalues.iter().cloned(), k))
            .collect();
        let mut mean = Vec::with_capacity(k);
        let mut stderr = Vec::with_capacity(k);
        for idx in 0..k {
            let column: Vec<f64> = per_rep.iter().map(|v| v[idx]).collect();
            let loss = MethodLoss::from_values(&column);
            mean.push(loss.mean);
            stderr.push(loss.stderr);
        }
        let lower = mean.iter().zip(&stderr).map(|(m, s)| m - 1.96 * s).collect();
        let upper = mean.iter().zip(&stderr).map(|(m, s)| m + 1.96 * s).collect();
        Ok(RankRecovery {
            example_id: truth.example_id,
            p: truth.sigma.dim(),
            reps: reps.len(),
            truth: truth_top,
            mean,
            stderr,
            lower,
            upper,
            realized_ranks: reps.iter().map(|r| r.selected_rank).collect(),
        })
    }

    /// Most frequent realized rank; ties go to the smaller rank.
    pub fn modal_rank(&self) -> usize {
        let max = self.realized_ranks.iter().cloned().max().unwrap_or(0);
        let mut counts = vec![0usize; max + 1];
        for &r in &self.realized_ranks {
            counts[r] += 1;
        }
        let mut best = 0;
        for (rank, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = rank;
            }
        }
        best
    }

    /// CSV with header `index,true_eigenvalue,mean,lower,upper`, indices from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,true_eigenvalue,mean,lower,upper\n");
        for i in 0..self.truth.len() {
            writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e}",
                i + 1,
                self.truth[i],
                self.mean[i],
                self.lower[i],
                self.upper[i]
            )
            .unwrap();
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "Example {}, p = {}, {} replications, modal rank {}",
            self.example_id,
            self.p,
            self.reps,
            self.modal_rank()
        )
        .unwrap();
        writeln!(out, "{:>5} {:>12} {:>12} {:>12} {:>12}", "index", "L0", "mean", "lower", "upper")
            .unwrap();
        for i in 0..self.truth.len() {
            writeln!(
                out,
                "{:>5} {:>12.5} {:>12.5} {:>12.5} {:>12.5}",
                i + 1,
                self.truth[i],
                self.mean[i],
                self.lower[i],
                self.upper[i]
            )
            .unwrap();
        }
        out
    }
}

/// Rank recovery for examples 1 to 4.
pub fn rank_recovery(spec: &SimulationSpec, k: usize) -> Result<RankRecovery> {
    rank_recovery_with(spec, k, &FitConfig::default(), 1)
}

pub fn rank_recovery_with(
    spec: &SimulationSpec,
    k: usize,
    cfg: &FitConfig,
    threads: usize,
) -> Result<RankRecovery> {
    if spec.example_id == 5 {
        return Err(Error::InvalidInput(
            "example 5 has no low-rank component to recover".into(),
        ));
    }
    spec.validate()?;
    let truth = make_sigma(spec.example_id, spec.p, spec.seed)?;
    let reps = simulate_replications(spec, &truth, cfg, threads)?;
    RankRecovery::from_replications(&truth, &reps, k)
}
