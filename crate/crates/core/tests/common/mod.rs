//! Random instance generators and property checks shared by the
//! integration tests and the acceptance runner.
#![allow(dead_code)]

use lodiag::linalg::numerical_rank;
use lodiag::portfolio::markowitz_weights;
use lodiag::simulation::{kl_loss, make_sigma};
use lodiag::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Check = std::result::Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Sample covariance of `n` draws from a factor model with `k` factors.
pub fn factor_covariance(rng: &mut ChaCha8Rng, p: usize, k: usize, n: usize) -> SymMatrix {
    let loadings = gaussian(rng, p, k);
    let scales: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..2.0)).collect();
    let z = gaussian(rng, n, k);
    let e = gaussian(rng, n, p);
    let x = DMatrix::from_fn(n, p, |i, j| {
        (0..k).map(|c| z[(i, c)] * loadings[(j, c)]).sum::<f64>() + scales[j] * e[(i, j)]
    });
    sample_covariance(&x).unwrap()
}

/// Well-conditioned random positive definite matrix.
pub fn random_pd(rng: &mut ChaCha8Rng, p: usize) -> SymMatrix {
    let g = gaussian(rng, p, p);
    let m = &g * g.transpose() / p as f64;
    SymMatrix::from_fn(p, |i, j| m[(i, j)] + if i == j { 0.5 } else { 0.0 })
}

pub fn random_diag(rng: &mut ChaCha8Rng, p: usize, lo: f64, hi: f64) -> DiagMatrix {
    DiagMatrix::new(DVector::from_fn(p, |_, _| rng.random_range(lo..hi))).unwrap()
}

/// `c A A^T` with `c` drawn so that `diag(d) - c A A^T` stays positive definite.
pub fn feasible_low_rank(rng: &mut ChaCha8Rng, d: &DiagMatrix, r: usize) -> SymMatrix {
    let p = d.dim();
    let a = gaussian(rng, p, r);
    let dv = d.values();
    let scaled = SymMatrix::from_fn(p, |i, j| {
        (0..r).map(|c| a[(i, c)] * a[(j, c)]).sum::<f64>() / (dv[i] * dv[j]).sqrt()
    });
    let top = sym_eig(&scaled).unwrap().values[0].max(1e-12);
    let c = rng.random_range(0.0..0.95) / top;
    SymMatrix::from_fn(p, |i, j| c * (0..r).map(|k| a[(i, k)] * a[(j, k)]).sum::<f64>())
}

fn summary(label: &str, count: usize, worst: f64) -> String {
    format!("{count} {label}, worst {worst:.3e}")
}

/// Objective traces of fixed-rank fits never increase, and the final
/// estimate is positive definite with the reported objective.
pub fn bcd_monotone(instances: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let cfg = FitConfig::default();
    let mut worst = f64::NEG_INFINITY;
    for k in 0..instances {
        let p = rng.random_range(2..=30);
        let r = rng.random_range(1..=5.min(p));
        let n = rng.random_range(p / 2 + 2..=3 * p + 5);
        let factors = rng.random_range(1..=4);
        let s = factor_covariance(&mut rng, p, factors, n);
        let d0 = lodiag::estimator::diagonal_start(&s).unwrap();
        let fit = fit_fixed_rank(&s, r, &d0, &cfg).map_err(|e| format!("instance {k}: {e}"))?;
        let mut previous = objective(&d0.to_sym(), &s).unwrap();
        for (i, &v) in fit.objective_trace.iter().enumerate() {
            worst = worst.max(v - previous);
            if v > previous + 1e-10 {
                return Err(format!(
                    "instance {k} (p={p}, r={r}): objective rose by {:.3e} at sweep {i}",
                    v - previous
                ));
            }
            previous = v;
        }
        chol_pd(fit.theta()).map_err(|_| format!("instance {k}: estimate not positive definite"))?;
        let direct = objective(fit.theta(), &s).unwrap();
        if (direct - fit.objective).abs() > 1e-8 * direct.abs().max(1.0) {
            return Err(format!(
                "instance {k}: reported objective {} but direct evaluation gives {direct}",
                fit.objective
            ));
        }
        if fit.realized_rank() > r {
            return Err(format!("instance {k}: realized rank {} exceeds {r}", fit.realized_rank()));
        }
    }
    Ok(summary("instances, largest step change", instances, worst))
}

/// Analytic diagonal gradient against central differences of the objective.
pub fn diag_gradient_matches_differences(instances: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let p = rng.random_range(2..=12);
        let r = rng.random_range(1..=3.min(p));
        let s = random_pd(&mut rng, p);
        let d = random_diag(&mut rng, p, 0.5, 2.0);
        let l = feasible_low_rank(&mut rng, &d, r);
        let g = diag_gradient(&l, &s, &d).unwrap();
        let f = |dv: &DVector<f64>| {
            let theta = l.sub_from_diag(&DiagMatrix::new(dv.clone()).unwrap());
            objective(&theta, &s).unwrap()
        };
        let mut fd = DVector::zeros(p);
        for j in 0..p {
            let h = 1e-5 * d.values()[j];
            let mut up = d.values().clone();
            let mut down = d.values().clone();
            up[j] += h;
            down[j] -= h;
            fd[j] = (f(&up) - f(&down)) / (2.0 * h);
        }
        let rel = (&fd - &g).amax() / g.amax().max(1e-3);
        worst = worst.max(rel);
        if rel > 1e-5 {
            return Err(format!("instance {k} (p={p}): relative gradient error {rel:.3e}"));
        }
    }
    Ok(summary("instances, relative error", instances, worst))
}

/// After a converged diagonal update the gradient is within `newton_tol`.
pub fn diag_update_stationary(instances: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let cfg = FitConfig::default();
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let p = rng.random_range(2..=20);
        let r = rng.random_range(1..=4.min(p));
        let s = factor_covariance(&mut rng, p, 2, 3 * p);
        let d = lodiag::estimator::diagonal_start(&s).unwrap();
        let l = update_l(&d, &s, r).unwrap();
        let step = update_d(&l, &s, &d, &cfg).unwrap();
        if !step.converged {
            return Err(format!("instance {k}: diagonal update did not converge"));
        }
        let g = diag_gradient(&l, &s, &step.diag).unwrap().amax();
        worst = worst.max(g);
        if g > cfg.newton_tol {
            return Err(format!("instance {k}: gradient {g:.3e} above tolerance"));
        }
    }
    Ok(summary("instances, gradient", instances, worst))
}

/// The analytic low-rank update is no worse than random feasible candidates.
pub fn update_l_beats_random(instances: usize, candidates: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst = f64::INFINITY;
    for k in 0..instances {
        let p = rng.random_range(2..=5);
        let r = rng.random_range(1..=2.min(p));
        let s = random_pd(&mut rng, p);
        let d = random_diag(&mut rng, p, 0.5, 3.0);
        let best = objective(&update_l(&d, &s, r).unwrap().sub_from_diag(&d), &s).unwrap();
        for _ in 0..candidates {
            let l = feasible_low_rank(&mut rng, &d, r);
            let value = objective(&l.sub_from_diag(&d), &s).unwrap();
            worst = worst.min(value - best);
            if value - best < -1e-9 {
                return Err(format!(
                    "instance {k} (p={p}, r={r}): candidate beats the update by {:.3e}",
                    best - value
                ));
            }
        }
    }
    Ok(summary("instances, smallest margin", instances, worst))
}

/// `(D0 - L0)(L_sigma + D_sigma) = I` and `rank(L0) <= rank(L_sigma)`.
pub fn henderson_identity(instances: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let p = rng.random_range(2..=20);
        let r = rng.random_range(1..=4.min(p));
        let a = gaussian(&mut rng, p, r);
        let l_sigma = SymMatrix::symmetrize(&(&a * a.transpose())).unwrap();
        let d_sigma = random_diag(&mut rng, p, 0.2, 2.0);
        let (l0, d0) = precision_parts_from_covariance(&l_sigma, &d_sigma).unwrap();
        let prod = l0.sub_from_diag(&d0).as_matrix() * l_sigma.add(&d_sigma.to_sym()).as_matrix();
        let err = (prod - DMatrix::<f64>::identity(p, p)).amax();
        worst = worst.max(err);
        if err > 1e-8 {
            return Err(format!("instance {k} (p={p}): identity residual {err:.3e}"));
        }
        let rank = numerical_rank(&sym_eig(&l0).unwrap().values);
        if rank > r {
            return Err(format!("instance {k}: rank of L0 is {rank}, above {r}"));
        }
    }
    Ok(summary("instances, residual", instances, worst))
}

/// Columns `j` of `a` with `a_jj^2 > sum_{i != j} a_ij^2`.
pub fn diagonally_dominant_columns(a: &DMatrix<f64>) -> usize {
    (0..a.ncols())
        .filter(|&j| {
            let off: f64 = (0..a.nrows()).filter(|&i| i != j).map(|i| a[(i, j)].powi(2)).sum();
            a[(j, j)].powi(2) > off
        })
        .count()
}

/// Rank-`r` symmetric matrices have at most `2r - 1` diagonally dominant columns.
pub fn dominant_column_bound(instances: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut at_bound = 0usize;
    for k in 0..instances {
        let p = rng.random_range(1..=30);
        let r = rng.random_range(1..=5.min(p));
        let q = gaussian(&mut rng, p, r).qr().q();
        // Occasionally align the column space with coordinates to stress the bound.
        let q = if k % 4 == 0 {
            DMatrix::from_fn(p, r, |i, c| q[(i, c)] * 0.05 + if i == c { 1.0 } else { 0.0 })
                .qr()
                .q()
        } else {
            q
        };
        let lambda: Vec<f64> = (0..r)
            .map(|_| {
                let m = rng.random_range(0.1..5.0);
                if rng.random_bool(0.5) { m } else { -m }
            })
            .collect();
        let a = DMatrix::from_fn(p, p, |i, j| (0..r).map(|c| q[(i, c)] * lambda[c] * q[(j, c)]).sum());
        let count = diagonally_dominant_columns(&a);
        if count == 2 * r - 1 {
            at_bound += 1;
        }
        if count > 2 * r - 1 {
            return Err(format!("instance {k} (p={p}, r={r}): {count} dominant columns"));
        }
    }
    Ok(format!("{instances} instances, {at_bound} attain the bound"))
}

/// `kl_loss(theta0, theta0)` vanishes for every generated example.
pub fn kl_self_loss(p: usize, seed: u64) -> Check {
    let mut worst: f64 = 0.0;
    for example in 1..=5u8 {
        let truth = make_sigma(example, p, seed).map_err(|e| format!("example {example}: {e}"))?;
        let kl = kl_loss(&truth.theta, &truth.theta).unwrap().abs();
        worst = worst.max(kl);
        if kl > 1e-10 {
            return Err(format!("example {example}: self loss {kl:.3e}"));
        }
    }
    Ok(format!("5 examples at p={p}, worst {worst:.3e}"))
}

/// Markowitz weights satisfy both constraints and the stationarity
/// condition `Sigma w = a mu + b 1`.
pub fn markowitz_kkt(instances: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let (mut worst_constraint, mut worst_kkt) = (0.0f64, 0.0f64);
    for k in 0..instances {
        let p = rng.random_range(2..=20);
        let sigma = random_pd(&mut rng, p);
        let theta = inv_pd(&sigma).unwrap();
        let mu = DVector::from_fn(p, |_, _| rng.random_range(-0.01..0.03));
        let mu0 = 0.013;
        let w = markowitz_weights(&theta, &mu, mu0).map_err(|e| format!("instance {k}: {e}"))?;
        let constraint = (w.sum() - 1.0).abs().max((w.dot(&mu) - mu0).abs());
        let a = DMatrix::from_fn(p, 2, |i, c| if c == 0 { mu[i] } else { 1.0 });
        let grad = sigma.as_matrix() * &w;
        let multipliers = (a.transpose() * &a).lu().solve(&(a.transpose() * &grad)).unwrap();
        let kkt = (&grad - &a * multipliers).amax();
        worst_constraint = worst_constraint.max(constraint);
        worst_kkt = worst_kkt.max(kkt);
        if constraint > 1e-10 || kkt > 1e-8 {
            return Err(format!(
                "instance {k} (p={p}): constraint error {constraint:.3e}, KKT residual {kkt:.3e}"
            ));
        }
        // Moving along the constraint set never lowers the variance.
        let variance = w.dot(&grad);
        for _ in 0..5 {
            let v = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let coef = (a.transpose() * &a).lu().solve(&(a.transpose() * &v)).unwrap();
            let v = &v - &a * coef;
            let moved = &w + v * 1e-3;
            if moved.dot(&(sigma.as_matrix() * &moved)) < variance - 1e-12 {
                return Err(format!("instance {k}: feasible perturbation lowers variance"));
            }
        }
    }
    Ok(format!(
        "{instances} instances, constraint {worst_constraint:.3e}, KKT {worst_kkt:.3e}"
    ))
}
