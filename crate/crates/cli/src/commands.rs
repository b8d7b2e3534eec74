//! The four run modes. Each returns an [`Outcome`] or a [`CliError`]; `main`
//! maps them to exit codes 0, 1 and 2.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use drscert::certify::{
    analytic_params_case1, analytic_params_case2, suggest_lambda_case2, write_certificates_csv, CertCase, Certificate,
};
use drscert::sdplite::{optimize_rate, optimize_rate_fixed_lambda, sweep_heatmap, tune_alpha, write_heatmap_csv};
use drscert::splitting::{admm_run, drs_run, lyapunov_series, solve_reference, write_trace_csv, DrsParams, Schedule};
use drscert::DrsError;
use nalgebra::DVector;

use crate::config::{Mode, RunConfig, Solver};
use crate::problems::{generate, Problem};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Infeasible,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Infeasible => 1,
        }
    }
}

/// Input or I/O failure (exit code 2).
#[derive(Debug, Clone, PartialEq)]
pub struct CliError(pub String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<DrsError> for CliError {
    fn from(e: DrsError) -> Self {
        CliError(e.to_string())
    }
}

pub const INPUT_ERROR_CODE: u8 = 2;

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.mode {
        Mode::Solve => cmd_solve(cfg),
        Mode::Certify => cmd_certify(cfg),
        Mode::Tune => cmd_tune(cfg),
        Mode::Sweep => cmd_sweep(cfg),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))
}

fn initial_point(cfg: &RunConfig, dim: usize) -> DVector<f64> {
    match cfg.x0_seed {
        None => DVector::zeros(dim),
        Some(seed) => {
            let mut rng = SeededRng::new(seed);
            DVector::from_fn(dim, |_, _| rng.gaussian())
        }
    }
}

/// `trace.csv` for a single λ, `trace_lambda<λ>.csv` per value otherwise.
pub fn trace_path(out: &Path, lambda: f64, count: usize) -> PathBuf {
    if count == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_lambda{lambda}.{}", ext.to_string_lossy()),
        None => format!("{stem}_lambda{lambda}"),
    };
    out.with_file_name(name)
}

fn single_lambda(cfg: &RunConfig) -> Result<f64, CliError> {
    match cfg.lambdas.as_slice() {
        [l] => Ok(*l),
        _ => Err(CliError(format!("{:?} mode takes a single --lambda", cfg.mode).to_lowercase())),
    }
}

/// Lyapunov weight used for the `V` column: the analytic θ for cases 1-2.
fn trace_theta(case: CertCase, alpha: f64, lambda: f64) -> Option<f64> {
    match case {
        CertCase::Case1 => analytic_params_case1(alpha, lambda).ok().map(|p| p.theta),
        CertCase::Case2 { l_f } => analytic_params_case2(alpha, lambda, l_f).ok().map(|p| p.theta),
        CertCase::Case3 { .. } => Some(0.0),
    }
}

fn lyapunov_column(problem: &Problem, params: &DrsParams, x0: &DVector<f64>, trace: &drscert::Trace) -> Option<Vec<f64>> {
    let case = CertCase::detect(&problem.class());
    let theta = trace_theta(case, params.alpha, params.lambda.at(0))?;
    let reference = match solve_reference(problem.f.as_ref(), problem.g.as_ref(), params, x0) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("warning: no reference solution, V column left empty: {e}");
            return None;
        }
    };
    lyapunov_series(trace, case, &Schedule::Constant(theta), &reference.x_star, reference.f_star).ok()
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let problem = generate(&cfg.problem)?;
    let x0 = initial_point(cfg, problem.dim);
    for &lambda in &cfg.lambdas {
        let params = DrsParams::new(cfg.alpha, lambda)
            .with_max_iters(cfg.max_iters)
            .with_stop_tol(cfg.tol);
        let (f, g) = (problem.f.as_ref(), problem.g.as_ref());
        let (trace, v) = match cfg.solver {
            Solver::Drs => {
                let trace = drs_run(f, g, &params, &x0)?;
                let v = lyapunov_column(&problem, &params, &x0, &trace);
                (trace, v)
            }
            Solver::Admm => (admm_run(f, g, &params, &x0)?, None),
        };
        let path = trace_path(&cfg.out, lambda, cfg.lambdas.len());
        let mut w = create(&path)?;
        write_trace_csv(&mut w, &trace, v.as_deref())?;
        finish(w, &path)?;
        let last = trace.records.last().map_or(f64::NAN, |r| r.fp_residual);
        println!(
            "lambda={lambda} status={:?} iterations={} fp_residual={last:e} -> {}",
            trace.status,
            trace.len(),
            path.display()
        );
    }
    Ok(Outcome::Success)
}

fn write_certificate(cfg: &RunConfig, cert: Option<&Certificate>) -> Result<(), CliError> {
    let mut w = create(&cfg.out)?;
    write_certificates_csv(&mut w, cert.map(std::slice::from_ref).unwrap_or_default())?;
    finish(w, &cfg.out)
}

fn report(cert: &Certificate) {
    let mut line = format!(
        "case {}: alpha={} lambda={} sigma1={} sigma2={}",
        cert.case, cert.alpha, cert.lambda, cert.sigma1, cert.sigma2
    );
    if let Some(theta) = cert.theta {
        line += &format!(" theta={theta}");
    }
    if let Some(r) = cert.rho_sq {
        line += &format!(" rho={} rho_sq={r}", r.sqrt());
    }
    line += &format!(" max_eig={:e} feasible={}", cert.max_eig, cert.feasible);
    println!("{line}");
}

fn verdict(cfg: &RunConfig, cert: Option<Certificate>, missing: &str) -> Result<Outcome, CliError> {
    write_certificate(cfg, cert.as_ref())?;
    match cert {
        Some(c) => {
            report(&c);
            Ok(if c.feasible { Outcome::Success } else { Outcome::Infeasible })
        }
        None => {
            println!("no certificate: {missing}");
            Ok(Outcome::Infeasible)
        }
    }
}

fn relaxation_in_range(lambda: f64) -> bool {
    lambda > 0.0 && lambda < 2.0
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let problem = generate(&cfg.problem)?;
    let fc = problem.class();
    let case = CertCase::detect(&fc);
    let (alpha, lambda) = (cfg.alpha, single_lambda(cfg)?);
    let cert = match case {
        CertCase::Case1 | CertCase::Case2 { .. } if !relaxation_in_range(lambda) => None,
        CertCase::Case1 => {
            let p = analytic_params_case1(alpha, lambda)?;
            let theta = cfg.theta.unwrap_or(p.theta);
            Some(Certificate::assemble(case, alpha, lambda, Some(theta), p.sigma, p.sigma, None)?)
        }
        CertCase::Case2 { l_f } => {
            let p = analytic_params_case2(alpha, lambda, l_f)?;
            let theta = cfg.theta.unwrap_or(p.theta);
            Some(Certificate::assemble(case, alpha, lambda, Some(theta), p.sigma, p.sigma, None)?)
        }
        CertCase::Case3 { .. } => {
            if cfg.theta.is_some() {
                eprintln!("warning: --theta is ignored for strongly convex f");
            }
            optimize_rate_fixed_lambda(alpha, &fc, lambda)?
        }
    };
    verdict(cfg, cert, &format!("case {case} with lambda = {lambda}"))
}

pub fn cmd_tune(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let problem = generate(&cfg.problem)?;
    let fc = problem.class();
    let case = CertCase::detect(&fc);
    let alpha = cfg.alpha;
    let cert = match case {
        CertCase::Case1 => {
            // θ = α²λ(2 − λ) peaks at λ = 1.
            let p = analytic_params_case1(alpha, 1.0)?;
            Certificate::assemble(case, alpha, 1.0, Some(p.theta), p.sigma, p.sigma, None)?
        }
        CertCase::Case2 { l_f } => {
            let s = suggest_lambda_case2(alpha, l_f)?;
            if s.clamped {
                eprintln!("note: suggested lambda clamped to {}", s.lambda);
            }
            let p = analytic_params_case2(alpha, s.lambda, l_f)?;
            Certificate::assemble(case, alpha, s.lambda, Some(p.theta), p.sigma, p.sigma, None)?
        }
        CertCase::Case3 { .. } => match &cfg.alpha_grid {
            Some(grid) => tune_alpha(&fc, grid)?,
            None => optimize_rate(alpha, &fc)?,
        },
    };
    verdict(cfg, Some(cert), "")
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let cells = sweep_heatmap(&cfg.sweep_alphas(), &cfg.kappas, cfg.m_base);
    let mut w = create(&cfg.out)?;
    write_heatmap_csv(&mut w, &cells)?;
    finish(w, &cfg.out)?;
    for c in cells.iter().filter(|c| c.error.is_some()) {
        eprintln!(
            "cell alpha={} kappa={} failed: {}",
            c.alpha,
            c.kappa,
            c.error.as_deref().unwrap_or_default()
        );
    }
    let feasible = cells.iter().filter(|c| c.feasible).count();
    println!("{feasible}/{} cells certified -> {}", cells.len(), cfg.out.display());
    Ok(Outcome::Success)
}
