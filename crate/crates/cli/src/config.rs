//! Command-line flags and their validated form.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use drscert::sdplite::{default_alpha_grid, logspace, DEFAULT_KAPPAS};

use crate::problems::{ProblemKind, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Solve,
    Certify,
    Tune,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Drs,
    Admm,
}

#[derive(Debug, Parser)]
#[command(name = "drscert", version, about = "Douglas-Rachford splitting with certified convergence rates")]
pub struct Cli {
    #[arg(long, value_enum)]
    pub mode: Mode,

    #[arg(long, value_enum, default_value = "basis_pursuit")]
    pub problem: ProblemKind,

    /// Rows of A (default 30 for basis pursuit, 60 for lasso).
    #[arg(long)]
    pub rows: Option<usize>,

    /// Columns of A (default 100 for basis pursuit, 40 for lasso).
    #[arg(long)]
    pub cols: Option<usize>,

    /// Number of nonzero singular values of A (lasso; default min(rows, cols)).
    #[arg(long)]
    pub rank: Option<usize>,

    /// l1 weight (lasso).
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Step size.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Relaxation parameter.
    #[arg(long, conflicts_with = "lambda_list")]
    pub lambda: Option<f64>,

    /// Comma-separated relaxation parameters; one trace per value.
    #[arg(long, value_delimiter = ',')]
    pub lambda_list: Option<Vec<f64>>,

    /// Lyapunov weight for `certify` (cases 1-2); defaults to the analytic value.
    #[arg(long)]
    pub theta: Option<f64>,

    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,

    /// Stop when the fixed-point residual reaches this value.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    #[arg(long, value_enum, default_value = "drs")]
    pub solver: Solver,

    /// Draw x0 from a standard normal with this seed instead of x0 = 0.
    #[arg(long)]
    pub x0_seed: Option<u64>,

    /// Step-size grid `lo:hi:steps`, log-spaced (sweep; tune in case 3).
    #[arg(long)]
    pub alpha_grid: Option<String>,

    /// Comma-separated condition numbers (sweep).
    #[arg(long, value_delimiter = ',')]
    pub kappa_list: Option<Vec<f64>>,

    /// Strong convexity of the sweep classes, (m, L) = (m_base, kappa * m_base).
    #[arg(long, default_value_t = 1.0)]
    pub m_base: f64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub problem: ProblemSpec,
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    pub theta: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub solver: Solver,
    pub x0_seed: Option<u64>,
    /// `Some` only when `--alpha-grid` was given.
    pub alpha_grid: Option<Vec<f64>>,
    pub kappas: Vec<f64>,
    pub m_base: f64,
    pub out: PathBuf,
}

impl RunConfig {
    /// Step sizes for sweeps: the explicit grid or 25 log-spaced values on `[0.01, 10]`.
    pub fn sweep_alphas(&self) -> Vec<f64> {
        self.alpha_grid.clone().unwrap_or_else(default_alpha_grid)
    }
}

/// Parses `lo:hi:steps` into a log-spaced grid.
pub fn parse_alpha_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("alpha grid must be lo:hi:steps, got {s:?}"));
    };
    let lo: f64 = lo.parse().map_err(|e| format!("alpha grid lower end: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("alpha grid upper end: {e}"))?;
    let n: usize = n.parse().map_err(|e| format!("alpha grid steps: {e}"))?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
        return Err(format!("alpha grid needs 0 < lo <= hi and steps >= 1, got {s:?}"));
    }
    Ok(logspace(lo, hi, n))
}

impl TryFrom<Cli> for RunConfig {
    type Error = String;

    fn try_from(cli: Cli) -> Result<Self, String> {
        let base = match cli.problem {
            ProblemKind::BasisPursuit => ProblemSpec::basis_pursuit(cli.seed),
            ProblemKind::Lasso => ProblemSpec {
                gamma: cli.gamma,
                ..ProblemSpec::lasso(cli.seed)
            },
        };
        let problem = ProblemSpec {
            rows: cli.rows.unwrap_or(base.rows),
            cols: cli.cols.unwrap_or(base.cols),
            rank: cli.rank,
            ..base
        };
        problem.validate().map_err(|e| e.to_string())?;
        let lambdas = match (cli.lambda, cli.lambda_list) {
            (_, Some(list)) if list.is_empty() => return Err("--lambda-list is empty".into()),
            (_, Some(list)) => list,
            (Some(l), None) => vec![l],
            (None, None) => vec![1.0],
        };
        if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(format!("lambda must be positive, got {bad}"));
        }
        if !(cli.alpha > 0.0 && cli.alpha.is_finite()) {
            return Err(format!("alpha must be positive, got {}", cli.alpha));
        }
        if !(cli.tol >= 0.0) {
            return Err(format!("tol must be nonnegative, got {}", cli.tol));
        }
        if !(cli.m_base > 0.0 && cli.m_base.is_finite()) {
            return Err(format!("m-base must be positive, got {}", cli.m_base));
        }
        let kappas = cli.kappa_list.unwrap_or_else(|| DEFAULT_KAPPAS.to_vec());
        if kappas.is_empty() || kappas.iter().any(|k| !(*k >= 1.0 && k.is_finite())) {
            return Err(format!("kappa values must be finite and >= 1, got {kappas:?}"));
        }
        Ok(RunConfig {
            mode: cli.mode,
            problem,
            alpha: cli.alpha,
            lambdas,
            theta: cli.theta,
            max_iters: cli.max_iters,
            tol: cli.tol,
            solver: cli.solver,
            x0_seed: cli.x0_seed,
            alpha_grid: cli.alpha_grid.as_deref().map(parse_alpha_grid).transpose()?,
            kappas,
            m_base: cli.m_base,
            out: cli.out,
        })
    }
}
