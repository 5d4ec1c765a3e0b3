//! `lodiag` command-line interface.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 on a data or
//! numerical error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::estimator::{fit_rank_penalized, FitConfig};
use crate::io::{read_matrix_path, read_sym_matrix_path, write_matrix_path};
use crate::linalg::{center_columns, sample_covariance};
use crate::portfolio::{
    default_backtest_deltas, default_backtest_ranks, rolling_backtest, BacktestConfig,
    EstimatorKind, ReturnsPanel,
};
use crate::simulation::{
    make_sigma, simulate_replications, LossTable, RankRecovery, SimulationSpec,
    DEFAULT_CANDIDATE_RANKS, DEFAULT_DELTA_GRID,
};

#[derive(Debug, Parser)]
#[command(
    name = "lodiag",
    version,
    about = "Low-rank plus diagonal precision matrix estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a rank-penalized low-rank plus diagonal precision matrix.
    Estimate(EstimateArgs),
    /// Replicated Kullback-Leibler losses for a simulated example.
    Simulate(SimulateArgs),
    /// Top eigenvalues of the estimated low-rank part against the truth.
    RankRecovery(RankRecoveryArgs),
    /// Rolling Markowitz backtest on a returns panel.
    Backtest(BacktestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Sample,
    Diagonal,
    Ld,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Sample => EstimatorKind::Sample,
            EstimatorArg::Diagonal => EstimatorKind::Diagonal,
            EstimatorArg::Ld => EstimatorKind::LowRankDiagonal,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Relative objective change that ends the coordinate descent.
    #[arg(long, default_value_t = 1e-7)]
    pub bcd_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub bcd_max_iter: usize,
    /// Gradient infinity-norm that ends the diagonal Newton solve.
    #[arg(long, default_value_t = 1e-8)]
    pub newton_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub newton_max_iter: usize,
    /// Relative eigenvalue threshold for the numerical rank of L.
    #[arg(long, default_value_t = 1e-8)]
    pub rank_tol: f64,
    /// Extrapolate between sweeps of the coordinate descent.
    #[arg(long)]
    pub accelerate: bool,
}

impl FitArgs {
    fn config(&self) -> Result<FitConfig> {
        let cfg = FitConfig {
            bcd_tol: self.bcd_tol,
            bcd_max_iter: self.bcd_max_iter,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            rank_tol: self.rank_tol,
            accelerate: self.accelerate,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["data", "cov"])))]
pub struct EstimateArgs {
    /// Data matrix, one observation per row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Precomputed covariance matrix (requires --n).
    #[arg(long, requires = "n")]
    pub cov: Option<PathBuf>,
    /// Sample size behind --cov, used by the rank penalty.
    #[arg(long)]
    pub n: Option<usize>,
    /// Subtract column means from --data first.
    #[arg(long)]
    pub center: bool,
    /// Candidate ranks, ascending.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CANDIDATE_RANKS.to_vec())]
    pub ranks: Vec<usize>,
    /// Rank penalty scale.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Where to write the estimated precision matrix.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulationArgs {
    /// Population covariance example, 1 to 5.
    #[arg(long)]
    pub example: u8,
    #[arg(long)]
    pub p: usize,
    /// Training sample size.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Validation sample size used to pick delta.
    #[arg(long, default_value_t = 100)]
    pub n_valid: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CANDIDATE_RANKS.to_vec())]
    pub ranks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DELTA_GRID.to_vec())]
    pub deltas: Vec<f64>,
    /// Worker threads for replications; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[command(flatten)]
    pub fit: FitArgs,
}

impl SimulationArgs {
    fn spec(&self) -> SimulationSpec {
        SimulationSpec {
            example_id: self.example,
            p: self.p,
            n: self.n,
            n_valid: self.n_valid,
            reps: self.reps,
            seed: self.seed,
            delta_grid: self.deltas.clone(),
            candidate_ranks: self.ranks.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimulationArgs,
}

#[derive(Debug, Args)]
pub struct RankRecoveryArgs {
    #[command(flatten)]
    pub sim: SimulationArgs,
    /// Number of leading eigenvalues to report.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Returns panel CSV: date,<asset1>,<asset2>,...
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, default_value_t = 72)]
    pub window: usize,
    #[arg(long, default_value_t = 0.013)]
    pub mu0: f64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Ld)]
    pub estimator: EstimatorArg,
    #[arg(long, value_delimiter = ',', default_values_t = default_backtest_ranks())]
    pub ranks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = default_backtest_deltas())]
    pub deltas: Vec<f64>,
    /// Per-period CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub fit: FitArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render().ansi());
                    1
                }
            };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn execute(command: &Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Estimate(args) => estimate(args, stdout),
        Command::Simulate(args) => simulate(&args.sim, stdout),
        Command::RankRecovery(args) => rank_recovery(args, stdout),
        Command::Backtest(args) => backtest(args, stdout),
    }
}

fn emit(text: &str, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn estimate(args: &EstimateArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = args.fit.config()?;
    let (s, n) = match (&args.data, &args.cov) {
        (Some(path), _) => {
            let mut x = read_matrix_path(path)?.values;
            if args.center {
                center_columns(&mut x);
            }
            (sample_covariance(&x)?, x.nrows())
        }
        (None, Some(path)) => (read_sym_matrix_path(path)?, args.n.unwrap_or(0)),
        (None, None) => unreachable!("clap requires one input"),
    };
    let fit = fit_rank_penalized(&s, &args.ranks, n, args.delta, &cfg)?;
    write_matrix_path(fit.theta().as_matrix(), None, &args.out)?;

    let d = &fit.decomposition;
    writeln!(stdout, "selected_rank,{}", fit.realized_rank())?;
    writeln!(stdout, "candidate_rank,{}", fit.candidate_rank)?;
    writeln!(stdout, "objective,{:.16e}", fit.objective)?;
    writeln!(stdout, "penalty,{:.16e}", fit.penalty)?;
    writeln!(stdout, "penalized_objective,{:.16e}", fit.penalized_objective())?;
    writeln!(stdout, "converged,{}", fit.converged)?;
    writeln!(stdout, "iterations,{}", fit.iterations)?;
    writeln!(stdout, "d_diagonal,{}", join(d.diag.values().iter().cloned()))?;
    writeln!(stdout, "l_eigenvalues,{}", join(d.low_rank_eigenvalues.iter().cloned()))?;
    Ok(())
}

fn simulate(args: &SimulationArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = args.fit.config()?;
    let spec = args.spec();
    spec.validate()?;
    let truth = make_sigma(spec.example_id, spec.p, spec.seed)?;
    let reps = simulate_replications(&spec, &truth, &cfg, args.threads)?;
    let table = LossTable::from_replications(&spec, &reps);
    let text = match args.format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Table => table.to_table(),
    };
    emit(&text, &args.out, stdout)
}

fn rank_recovery(args: &RankRecoveryArgs, stdout: &mut dyn Write) -> Result<()> {
    let sim = &args.sim;
    let cfg = sim.fit.config()?;
    let spec = sim.spec();
    if spec.example_id == 5 {
        return Err(Error::InvalidInput(
            "example 5 has no low-rank component to recover".into(),
        ));
    }
    spec.validate()?;
    let truth = make_sigma(spec.example_id, spec.p, spec.seed)?;
    let reps = simulate_replications(&spec, &truth, &cfg, sim.threads)?;
    let rec = RankRecovery::from_replications(&truth, &reps, args.k)?;
    let text = match sim.format {
        OutputFormat::Csv => rec.to_csv(),
        OutputFormat::Table => rec.to_table(),
    };
    emit(&text, &sim.out, stdout)
}

fn backtest(args: &BacktestArgs, stdout: &mut dyn Write) -> Result<()> {
    let panel = ReturnsPanel::from_csv_path(&args.panel)?;
    let cfg = BacktestConfig {
        window: args.window,
        mu0: args.mu0,
        candidate_ranks: args.ranks.clone(),
        delta_grid: args.deltas.clone(),
        estimator: args.estimator.into(),
        fit: args.fit.config()?,
    };
    let result = rolling_backtest(&panel, &cfg)?;
    let mut periods = Vec::new();
    result.write_csv(panel.assets(), &mut periods)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &periods)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        }
        None => {
            stdout.write_all(&periods)?;
            writeln!(stdout)?;
        }
    }
    stdout.write_all(result.summary().as_bytes())?;
    Ok(())
}
