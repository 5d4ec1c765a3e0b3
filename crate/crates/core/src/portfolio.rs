//! Markowitz portfolios from a plug-in precision matrix, with a rolling
//! backtest and cross-validated choice of the rank penalty.
//!
//! Weights solve `min w' Sigma w` subject to `w' mu = mu0` and `w' 1 = 1`.
//! There is no sign constraint, so short positions are allowed.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{fit_rank_path, select_by_penalty, FitConfig};
use crate::linalg::{center_columns, inv_pd, sample_covariance, DiagMatrix, SymMatrix};

/// Monthly returns of `p` assets over `T` periods, in decimal units.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    dates: Vec<String>,
    assets: Vec<String>,
    returns: DMatrix<f64>,
}

impl ReturnsPanel {
    pub fn new(dates: Vec<String>, assets: Vec<String>, returns: DMatrix<f64>) -> Result<Self> {
        let (t, p) = returns.shape();
        if t < 2 {
            return Err(Error::InvalidInput(format!("panel needs at least 2 periods, got {t}")));
        }
        if p == 0 {
            return Err(Error::InvalidInput("panel has no assets".into()));
        }
        if dates.len() != t || assets.len() != p {
            return Err(Error::InvalidInput(format!(
                "labels do not match a {t}x{p} panel ({} dates, {} assets)",
                dates.len(),
                assets.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "dates must be strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        if returns.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("panel has non-finite returns".into()));
        }
        Ok(ReturnsPanel { dates, assets, returns })
    }

    /// Parses `date,<asset1>,<asset2>,...` CSV. Blank cells are errors.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::Parse("header must be date followed by asset names".into()));
        }
        let assets: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let row = line + 2;
            if record.len() != header.len() {
                return Err(Error::Parse(format!(
                    "row {row} has {} fields, expected {}",
                    record.len(),
                    header.len()
                )));
            }
            dates.push(record[0].to_string());
            for (col, cell) in record.iter().enumerate().skip(1) {
                if cell.is_empty() {
                    return Err(Error::Parse(format!("row {row}, column {col}: missing value")));
                }
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Parse(format!("row {row}, column {col}: cannot parse {cell:?}"))
                })?;
                values.push(v);
            }
        }
        let t = dates.len();
        let returns = DMatrix::from_row_slice(t, assets.len(), &values);
        Self::new(dates, assets, returns)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "date,{}", self.assets.join(","))?;
        for (t, date) in self.dates.iter().enumerate() {
            let row: Vec<String> = self.returns.row(t).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{date},{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn periods(&self) -> usize {
        self.returns.nrows()
    }

    pub fn num_assets(&self) -> usize {
        self.returns.ncols()
    }

    /// Same panel with every return multiplied by `c`.
    pub fn scaled(&self, c: f64) -> ReturnsPanel {
        ReturnsPanel {
            dates: self.dates.clone(),
            assets: self.assets.clone(),
            returns: &self.returns * c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Inverse of the sample covariance.
    Sample,
    /// Inverse of the diagonal of the sample covariance.
    Diagonal,
    /// Rank-penalized low-rank plus diagonal precision.
    LowRankDiagonal,
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sample" | "s" => Ok(EstimatorKind::Sample),
            "diagonal" | "diag" | "d_s" | "ds" => Ok(EstimatorKind::Diagonal),
            "ld" => Ok(EstimatorKind::LowRankDiagonal),
            other => Err(Error::InvalidInput(format!("unknown estimator {other:?}"))),
        }
    }
}

/// Even ranks 2 to 28.
pub fn default_backtest_ranks() -> Vec<usize> {
    (1..=14).map(|k| 2 * k).collect()
}

/// 0.2, 0.4, ..., 3.0.
pub fn default_backtest_deltas() -> Vec<f64> {
    (1..=15).map(|k| k as f64 * 0.2).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    /// Training periods before each evaluation period.
    pub window: usize,
    pub mu0: f64,
    pub candidate_ranks: Vec<usize>,
    pub delta_grid: Vec<f64>,
    pub estimator: EstimatorKind,
    pub fit: FitConfig,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            window: 72,
            mu0: 0.013,
            candidate_ranks: default_backtest_ranks(),
            delta_grid: default_backtest_deltas(),
            estimator: EstimatorKind::LowRankDiagonal,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioResult {
    /// Labels of the evaluation periods.
    pub dates: Vec<String>,
    pub weights: Vec<DVector<f64>>,
    pub realized_returns: Vec<f64>,
    /// Penalty scale chosen by cross-validation, for the LD estimator.
    pub selected_deltas: Vec<Option<f64>>,
    pub mean_return: f64,
    /// Sample standard deviation of the realized returns.
    pub std_dev: f64,
    /// `std_dev / sqrt(periods)`.
    pub stderr: f64,
    pub sharpe: f64,
}

impl PortfolioResult {
    /// `period,date,return,<asset weights...>`.
    pub fn write_csv(&self, assets: &[String], mut out: impl Write) -> Result<()> {
        writeln!(out, "period,date,return,{}", assets.join(","))?;
        for (k, w) in self.weights.iter().enumerate() {
            let ws: Vec<String> = w.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(
                out,
                "{},{},{:.16e},{}",
                k + 1,
                self.dates[k],
                self.realized_returns[k],
                ws.join(",")
            )?;
        }
        Ok(())
    }

    /// Mean, standard deviation and Sharpe ratio in percent.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "portfolios,{}", self.realized_returns.len()).unwrap();
        writeln!(out, "mean_return_pct,{:.4}", 100.0 * self.mean_return).unwrap();
        writeln!(out, "std_dev_pct,{:.4}", 100.0 * self.std_dev).unwrap();
        writeln!(out, "stderr_pct,{:.4}", 100.0 * self.stderr).unwrap();
        writeln!(out, "sharpe_pct,{:.4}", 100.0 * self.sharpe).unwrap();
        out
    }
}

/// Minimum-variance weights with `w' mu = mu0` and `w' 1 = 1`, computed as
/// `theta A (A' theta A)^{-1} b` with `A = [mu, 1]` and `b = (mu0, 1)`.
///
/// When `mu` is a multiple of the ones vector the two constraints coincide;
/// that case is solved with the budget constraint alone if `mu0` agrees and
/// is infeasible otherwise.
pub fn markowitz_weights(theta: &SymMatrix, mu: &DVector<f64>, mu0: f64) -> Result<DVector<f64>> {
    let p = theta.dim();
    if mu.len() != p {
        return Err(Error::InvalidInput(format!(
            "mean vector has length {}, expected {p}",
            mu.len()
        )));
    }
    if !mu0.is_finite() || mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite mean or target".into()));
    }
    let t = theta.as_matrix();
    let ones = DVector::from_element(p, 1.0);
    let t_mu = t * mu;
    let t_one = t * &ones;
    let a = mu.dot(&t_mu);
    let b = ones.dot(&t_mu);
    let c = ones.dot(&t_one);
    if !(c > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let det = a * c - b * b;
    if det <= 1e-12 * a.abs() * c {
        let level = b / c;
        let spread = (mu - &ones * level).amax();
        if spread <= 1e-12 * level.abs().max(mu.amax()).max(f64::MIN_POSITIVE)
            && (mu0 - level).abs() <= 1e-10 * level.abs().max(1.0)
        {
            return Ok(t_one / c);
        }
        return Err(Error::InfeasibleConstraints(format!(
            "expected returns are collinear with the budget constraint and the target {mu0} \
             differs from the common mean {level}"
        )));
    }
    let m = Matrix2::new(a, b, b, c);
    let lambda = m
        .try_inverse()
        .ok_or_else(|| Error::InfeasibleConstraints("singular constraint system".into()))?
        * Vector2::new(mu0, 1.0);
    Ok(t_mu * lambda[0] + t_one * lambda[1])
}

/// `mean(x - xb) / sd(x - xb)` with the `len - 1` divisor.
pub fn sharpe_ratio(returns: &[f64], xb: f64) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::InvalidInput("need at least two returns".into()));
    }
    let n = returns.len() as f64;
    let excess: Vec<f64> = returns.iter().map(|x| x - xb).collect();
    let mean = excess.iter().sum::<f64>() / n;
    let var = excess.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) {
        return Err(Error::DegenerateReturns);
    }
    Ok(mean / var.sqrt())
}

fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// Sample mean and mean-centered covariance (divisor `n`) of a block of rows.
fn moments(rows: &DMatrix<f64>) -> Result<(DVector<f64>, SymMatrix)> {
    let mu = column_means(rows);
    let mut centered = rows.clone();
    center_columns(&mut centered);
    Ok((mu, sample_covariance(&centered)?))
}

fn usable_ranks(ranks: &[usize], p: usize) -> Vec<usize> {
    let mut r: Vec<usize> = ranks.iter().cloned().filter(|&r| r <= p).collect();
    r.sort_unstable();
    r.dedup();
    r
}

fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() || grid.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidInput("delta grid must be non-empty and positive".into()));
    }
    let mut g = grid.to_vec();
    g.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    Ok(g)
}

/// Chooses the penalty scale by three-fold contiguous cross-validation on a
/// training window: for each fold the portfolio is built from the other two
/// thirds and evaluated on every held-out period. The delta with the highest
/// average held-out return wins; ties go to the smallest delta.
pub fn cv_select(
    window: &DMatrix<f64>,
    delta_grid: &[f64],
    candidate_ranks: &[usize],
    mu0: f64,
    cfg: &FitConfig,
) -> Result<f64> {
    let (n, p) = window.shape();
    let grid = sorted_grid(delta_grid)?;
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    if n < 3 || n % 3 != 0 {
        return Err(Error::InvalidInput(format!(
            "window of {n} periods does not split into three equal folds"
        )));
    }
    let ranks = usable_ranks(candidate_ranks, p);
    let fold = n / 3;
    let per_fold: Vec<Vec<f64>> = (0..3)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let held = k * fold..(k + 1) * fold;
            let train_rows: Vec<usize> = (0..n).filter(|i| !held.contains(i)).collect();
            let train = window.select_rows(&train_rows);
            let (mu, s) = moments(&train)?;
            let path = fit_rank_path(&s, &ranks, cfg)?;
            grid.iter()
                .map(|&delta| {
                    let fit = select_by_penalty(&path, train.nrows(), delta)?;
                    let w = markowitz_weights(fit.theta(), &mu, mu0)?;
                    Ok(held.clone().map(|i| window.row(i).transpose().dot(&w)).sum())
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let totals: Vec<f64> = (0..grid.len())
        .map(|g| per_fold.iter().map(|f| f[g]).sum())
        .collect();
    let mut best = 0;
    for g in 1..grid.len() {
        if totals[g] > totals[best] {
            best = g;
        }
    }
    Ok(grid[best])
}

/// Precision estimate for one training window, and the delta if one was chosen.
pub fn estimate_precision(
    rows: &DMatrix<f64>,
    cfg: &BacktestConfig,
) -> Result<(DVector<f64>, SymMatrix, Option<f64>)> {
    let (mu, s) = moments(rows)?;
    match cfg.estimator {
        EstimatorKind::Sample => {
            let theta = inv_pd(&s).map_err(|e| match e {
                Error::NotPositiveDefinite => Error::SingularSampleCovariance,
                other => other,
            })?;
            Ok((mu, theta, None))
        }
        EstimatorKind::Diagonal => {
            let d = DiagMatrix::new(s.diagonal())?;
            if !d.is_positive() {
                return Err(Error::InvalidInput("an asset has zero variance in the window".into()));
            }
            Ok((mu, d.recip().to_sym(), None))
        }
        EstimatorKind::LowRankDiagonal => {
            let ranks = usable_ranks(&cfg.candidate_ranks, rows.ncols());
            let (delta, path) = rayon::join(
                || cv_select(rows, &cfg.delta_grid, &cfg.candidate_ranks, cfg.mu0, &cfg.fit),
                || fit_rank_path(&s, &ranks, &cfg.fit),
            );
            let (delta, path) = (delta?, path?);
            let fit = select_by_penalty(&path, rows.nrows(), delta)?;
            Ok((mu, fit.decomposition.theta, Some(delta)))
        }
    }
}

/// Rolling backtest: for every period after the first `window`, build a
/// portfolio from the preceding `window` periods and record its return.
pub fn rolling_backtest(panel: &ReturnsPanel, cfg: &BacktestConfig) -> Result<PortfolioResult> {
    let t_total = panel.periods();
    if cfg.window == 0 || cfg.window >= t_total {
        return Err(Error::InvalidInput(format!(
            "window {} must be between 1 and {} for a panel of {t_total} periods",
            cfg.window,
            t_total - 1
        )));
    }
    if !cfg.mu0.is_finite() {
        return Err(Error::InvalidInput("target return must be finite".into()));
    }
    let mut dates = Vec::new();
    let mut weights = Vec::new();
    let mut realized = Vec::new();
    let mut deltas = Vec::new();
    for t in cfg.window..t_total {
        let rows = panel.returns.rows(t - cfg.window, cfg.window).into_owned();
        let (mu, theta, delta) = estimate_precision(&rows, cfg)?;
        let w = markowitz_weights(&theta, &mu, cfg.mu0)?;
        realized.push(panel.returns.row(t).transpose().dot(&w));
        weights.push(w);
        dates.push(panel.dates[t].clone());
        deltas.push(delta);
    }
    let n = realized.len() as f64;
    let mean_return = realized.iter().sum::<f64>() / n;
    let std_dev = if realized.len() > 1 {
        (realized.iter().map(|r| (r - mean_return).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let sharpe = if realized.len() > 1 {
        sharpe_ratio(&realized, 0.0)?
    } else {
        f64::NAN
    };
    Ok(PortfolioResult {
        dates,
        weights,
        realized_returns: realized,
        selected_deltas: deltas,
        mean_return,
        std_dev,
        stderr: std_dev / n.sqrt(),
        sharpe,
    })
}

/// Parameters of a synthetic factor-model returns panel.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanelSpec {
    pub periods: usize,
    pub assets: usize,
    pub factors: usize,
    /// Mean monthly return is drawn uniformly from this range per asset.
    pub mean_range: (f64, f64),
    pub factor_vol: f64,
    /// Idiosyncratic volatility is drawn uniformly from this range per asset.
    pub idio_vol_range: (f64, f64),
    pub seed: u64,
}

impl FactorPanelSpec {
    pub fn new(periods: usize, assets: usize, factors: usize, seed: u64) -> Self {
        FactorPanelSpec {
            periods,
            assets,
            factors,
            mean_range: (0.012, 0.014),
            factor_vol: 0.04,
            idio_vol_range: (0.02, 0.06),
            seed,
        }
    }
}

/// Monthly returns `mu + B f_t + e_t` with Gaussian factors and noise.
///
/// The first factor is a market factor with loadings in `[0.5, 1.5]`; the
/// others load in `[-0.5, 0.5]`. Dates run monthly from 1990-01.
pub fn synthetic_factor_panel(spec: &FactorPanelSpec) -> Result<ReturnsPanel> {
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    let (t, p, k) = (spec.periods, spec.assets, spec.factors);
    if p == 0 || t < 2 {
        return Err(Error::InvalidInput("panel needs assets and at least 2 periods".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.mean_range;
    let mu: Vec<f64> = (0..p).map(|_| rng.random_range(lo..=hi)).collect();
    let (vlo, vhi) = spec.idio_vol_range;
    let idio: Vec<f64> = (0..p).map(|_| rng.random_range(vlo..=vhi)).collect();
    let loadings = DMatrix::from_fn(p, k, |_, f| {
        if f == 0 {
            rng.random_range(0.5..=1.5)
        } else {
            rng.random_range(-0.5..=0.5)
        }
    });
    let mut returns = DMatrix::zeros(t, p);
    for i in 0..t {
        let f: Vec<f64> = (0..k)
            .map(|_| spec.factor_vol * rng.sample::<f64, _>(StandardNormal))
            .collect();
        for j in 0..p {
            let common: f64 = (0..k).map(|c| loadings[(j, c)] * f[c]).sum();
            let noise: f64 = rng.sample(StandardNormal);
            returns[(i, j)] = mu[j] + common + idio[j] * noise;
        }
    }
    let dates = (0..t)
        .map(|i| format!("{:04}-{:02}", 1990 + i / 12, i % 12 + 1))
        .collect();
    let assets = (0..p).map(|j| format!("A{:02}", j + 1)).collect();
    ReturnsPanel::new(dates, assets, returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(t: usize, p: usize, f: impl Fn(usize, usize) -> f64) -> ReturnsPanel {
        let dates = (0..t).map(|i| format!("{:04}", i)).collect();
        let assets = (0..p).map(|j| format!("A{j}")).collect();
        ReturnsPanel::new(dates, assets, DMatrix::from_fn(t, p, f)).unwrap()
    }

    #[test]
    fn weights_two_assets_forced() {
        let w = markowitz_weights(&SymMatrix::identity(2), &DVector::from_vec(vec![1.0, 2.0]), 1.5)
            .unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weights_collinear_consistent() {
        let w = markowitz_weights(&SymMatrix::identity(2), &DVector::from_vec(vec![1.0, 1.0]), 1.0)
            .unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weights_collinear_inconsistent() {
        let err = markowitz_weights(&SymMatrix::identity(2), &DVector::from_vec(vec![1.0, 1.0]), 2.0);
        assert!(matches!(err, Err(Error::InfeasibleConstraints(_))));
    }

    #[test]
    fn sharpe_examples() {
        assert_eq!(sharpe_ratio(&[1.0, -1.0], 0.0).unwrap(), 0.0);
        assert!((sharpe_ratio(&[2.0, 0.0, 1.0], 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(sharpe_ratio(&[1.0, 1.0, 1.0], 0.0), Err(Error::DegenerateReturns));
        assert!(sharpe_ratio(&[1.0], 0.0).is_err());
    }

    #[test]
    fn panel_validation() {
        let dates = vec!["b".to_string(), "a".to_string()];
        let r = ReturnsPanel::new(dates, vec!["x".into()], DMatrix::zeros(2, 1));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
        let r = ReturnsPanel::new(vec!["a".into()], vec!["x".into()], DMatrix::zeros(1, 1));
        assert!(r.is_err());
    }

    #[test]
    fn panel_csv_parsing() {
        let text = "date,AAA,BBB\n2001-01,0.01,0.02\n2001-02,-0.03,0.04\n";
        let p = ReturnsPanel::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(p.assets(), &["AAA".to_string(), "BBB".to_string()]);
        assert_eq!(p.returns()[(1, 0)], -0.03);

        let missing = "date,AAA,BBB\n2001-01,0.01,\n2001-02,-0.03,0.04\n";
        assert!(matches!(
            ReturnsPanel::from_csv_reader(missing.as_bytes()),
            Err(Error::Parse(_))
        ));
        let bad = "date,AAA\n2001-01,abc\n2001-02,0.1\n";
        assert!(matches!(ReturnsPanel::from_csv_reader(bad.as_bytes()), Err(Error::Parse(_))));
        let unsorted = "date,AAA\n2001-02,0.1\n2001-01,0.1\n";
        assert!(ReturnsPanel::from_csv_reader(unsorted.as_bytes()).is_err());
    }

    #[test]
    fn panel_csv_round_trip() {
        let original = panel(4, 3, |i, j| (i as f64 - 1.5) * 0.013 + j as f64 * 1e-3 / 7.0);
        let mut buf = Vec::new();
        original.write_csv(&mut buf).unwrap();
        let back = ReturnsPanel::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back, original);
    }

    #[test]
    fn cv_singleton_and_duplicate_grid() {
        let x = DMatrix::from_fn(12, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.01 - 0.02);
        let cfg = FitConfig::default();
        assert_eq!(cv_select(&x, &[1.0], &[1, 2], 0.01, &cfg).unwrap(), 1.0);
        assert_eq!(cv_select(&x, &[0.5, 0.5], &[1, 2], 0.01, &cfg).unwrap(), 0.5);
    }

    #[test]
    fn cv_requires_three_folds() {
        let x = DMatrix::from_fn(10, 3, |i, j| ((i + j) % 4) as f64 * 0.01);
        assert!(cv_select(&x, &[0.5, 1.0], &[1], 0.01, &FitConfig::default()).is_err());
    }

    #[test]
    fn backtest_period_count_and_constraints() {
        let pnl = panel(100, 4, |i, j| {
            let x = ((i * 37 + j * 11) % 23) as f64 / 23.0 - 0.5;
            0.01 + 0.05 * x + 0.002 * j as f64
        });
        let cfg = BacktestConfig {
            estimator: EstimatorKind::Diagonal,
            ..BacktestConfig::default()
        };
        let res = rolling_backtest(&pnl, &cfg).unwrap();
        assert_eq!(res.weights.len(), 28);
        for (k, w) in res.weights.iter().enumerate() {
            let t = 72 + k;
            let rows = pnl.returns().rows(t - 72, 72).into_owned();
            let mu = column_means(&rows);
            assert!((w.sum() - 1.0).abs() < 1e-10);
            assert!((w.dot(&mu) - 0.013).abs() < 1e-8);
        }
    }

    #[test]
    fn sample_estimator_rejects_singular_window() {
        let pnl = panel(10, 6, |i, j| ((i * 3 + j) % 5) as f64 * 0.01);
        let cfg = BacktestConfig {
            window: 4,
            estimator: EstimatorKind::Sample,
            ..BacktestConfig::default()
        };
        assert_eq!(rolling_backtest(&pnl, &cfg), Err(Error::SingularSampleCovariance));
    }

    #[test]
    fn window_must_fit_panel() {
        let pnl = panel(10, 2, |i, j| (i + j) as f64 * 0.01);
        let cfg = BacktestConfig {
            window: 10,
            ..BacktestConfig::default()
        };
        assert!(matches!(rolling_backtest(&pnl, &cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn estimator_names() {
        assert_eq!("ld".parse::<EstimatorKind>().unwrap(), EstimatorKind::LowRankDiagonal);
        assert_eq!("SAMPLE".parse::<EstimatorKind>().unwrap(), EstimatorKind::Sample);
        assert_eq!("diagonal".parse::<EstimatorKind>().unwrap(), EstimatorKind::Diagonal);
        assert!("glasso".parse::<EstimatorKind>().is_err());
    }
}
