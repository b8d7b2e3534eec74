//! Douglas–Rachford splitting and relaxed ADMM with per-iteration traces.
//!
//! DRS for `minimize f(x) + g(x)`:
//!
//! ```text
//! y_k     = prox_{αf}(x_k)
//! z_k     = prox_{αg}(2y_k − x_k)
//! x_{k+1} = x_k + λ_k (z_k − y_k)
//! ```
//!
//! The fixed-point residual satisfies `z_k − y_k = −α(∂f(y_k) + ∂g(z_k))`
//! with the subgradients recovered from the prox steps, so the optimality
//! residual is `‖z_k − y_k‖/α`.

use std::io::Write;

use nalgebra::DVector;

use crate::certify::CertCase;
use crate::error::{DrsError, Result};
use crate::prox::ProxOperator;

/// Stopping tolerance of [`solve_reference`].
pub const REFERENCE_TOL: f64 = 1e-12;
/// Iteration cap of [`solve_reference`].
pub const REFERENCE_MAX_ITERS: usize = 2_000_000;
/// Bound on the optimality residual accepted at the reference fixed point.
pub const REFERENCE_OPTIMALITY_TOL: f64 = 1e-8;
/// Extra iterations the reference solve keeps running after the residual
/// stops improving, to settle `x⋆` to working precision.
const REFERENCE_POLISH_PATIENCE: usize = 50;

/// Per-iteration parameter: a constant or an explicit finite sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl Schedule {
    /// Value at iteration `k`; sequences hold their last value past the end.
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Sequence(vs) => vs[k.min(vs.len() - 1)],
        }
    }

    /// `Σ_{i<k}` of the schedule.
    pub fn partial_sum(&self, k: usize) -> f64 {
        match self {
            Schedule::Constant(v) => v * k as f64,
            Schedule::Sequence(_) => (0..k).map(|i| self.at(i)).sum(),
        }
    }

    fn validate(&self, what: &str, min_len: usize, allow_zero: bool) -> Result<()> {
        let ok = |v: f64| v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
        match self {
            Schedule::Constant(v) if ok(*v) => Ok(()),
            Schedule::Sequence(vs) if !vs.is_empty() && vs.len() >= min_len && vs.iter().all(|&v| ok(v)) => Ok(()),
            Schedule::Sequence(vs) if vs.len() < min_len => Err(DrsError::InvalidParameter(format!(
                "{what} sequence has {} entries, need {min_len}",
                vs.len()
            ))),
            _ => Err(DrsError::InvalidParameter(format!("{what} schedule has invalid entries"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrsParams {
    pub alpha: f64,
    pub lambda: Schedule,
    pub max_iters: usize,
    /// Stop once `‖z_k − y_k‖ ≤ stop_tol`.
    pub stop_tol: f64,
}

impl DrsParams {
    pub fn new(alpha: f64, lambda: f64) -> Self {
        DrsParams {
            alpha,
            lambda: Schedule::Constant(lambda),
            max_iters: 100_000,
            stop_tol: 1e-10,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_stop_tol(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(DrsError::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.max_iters == 0 {
            return Err(DrsError::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(DrsError::InvalidParameter(format!("stop_tol must be nonnegative, got {}", self.stop_tol)));
        }
        self.lambda.validate("lambda", self.max_iters, false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    /// `‖z_k − y_k‖` (DRS) or the primal residual `‖x⁺ − z⁺‖` (ADMM).
    pub fp_residual: f64,
    /// `fp_residual / α`.
    pub subgrad_residual: f64,
    /// `F(z_k)` when both function values are known and finite.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub status: TraceStatus,
    /// State after the last recorded iteration (`x_N` for DRS, `u_N` for ADMM).
    pub final_x: DVector<f64>,
    pub alpha: f64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `x_0, …, x_N` including the post-update state.
    pub fn states(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.records.iter().map(|r| &r.x).chain(std::iter::once(&self.final_x))
    }
}

fn objective(f: &dyn ProxOperator, g: &dyn ProxOperator, z: &DVector<f64>) -> Option<f64> {
    let v = f.value(z)? + g.value(z)?;
    v.is_finite().then_some(v)
}

fn check_finite(iteration: usize, vs: &[&DVector<f64>]) -> Result<()> {
    if vs.iter().all(|v| v.iter().all(|x| x.is_finite())) {
        Ok(())
    } else {
        Err(DrsError::NonFinite { iteration })
    }
}

fn check_dims(f: &dyn ProxOperator, g: &dyn ProxOperator, x0: &DVector<f64>) -> Result<()> {
    for d in [f.dim(), g.dim()].into_iter().flatten() {
        if d != x0.len() {
            return Err(DrsError::DimensionMismatch {
                expected: d,
                found: x0.len(),
                context: "initial point must match operator dimension",
            });
        }
    }
    Ok(())
}

/// One DRS step from `x`: returns `(y, z)`.
fn drs_step(
    f: &dyn ProxOperator,
    g: &dyn ProxOperator,
    alpha: f64,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let y = f.evaluate(x, alpha)?;
    let z = g.evaluate(&(&y * 2.0 - x), alpha)?;
    Ok((y, z))
}

pub fn drs_run(f: &dyn ProxOperator, g: &dyn ProxOperator, params: &DrsParams, x0: &DVector<f64>) -> Result<Trace> {
    params.validate()?;
    check_dims(f, g, x0)?;
    let alpha = params.alpha;
    let mut x = x0.clone();
    let mut records = Vec::new();
    let mut status = TraceStatus::IterationLimit;
    for k in 0..params.max_iters {
        let (y, z) = drs_step(f, g, alpha, &x)?;
        let step = &z - &y;
        let next = &x + &step * params.lambda.at(k);
        check_finite(k, &[&y, &z, &next])?;
        let fp = step.norm();
        let objective = objective(f, g, &z);
        records.push(TraceRecord {
            k,
            x: std::mem::replace(&mut x, next),
            y,
            z,
            fp_residual: fp,
            subgrad_residual: fp / alpha,
            objective,
        });
        if fp <= params.stop_tol {
            status = TraceStatus::Converged;
            break;
        }
    }
    Ok(Trace {
        records,
        status,
        final_x: x,
        alpha,
    })
}

/// Relaxed ADMM for `minimize f(x) + g(z)` subject to `x − z = 0`, scaled dual `u`:
///
/// ```text
/// x⁺ = prox_{αf}(z − u)
/// v  = λ x⁺ + (1 − λ) z
/// z⁺ = prox_{αg}(v + u)
/// u⁺ = u + v − z⁺
/// ```
///
/// Starts from `z_0 = 0`. Each record stores `u_k` in `x`, `x⁺` in `y` and
/// `z⁺` in `z`; `fp_residual` is `‖x⁺ − z⁺‖`.
///
/// The iteration is DRS on the pair `(g, f)` with state `z_k + u_k`; equivalently
/// DRS on the dual pair `(g*, f*(−·))` with step `1/α`, whose first prox output
/// is the dual variable `u_k/α`.
pub fn admm_run(f: &dyn ProxOperator, g: &dyn ProxOperator, params: &DrsParams, u0: &DVector<f64>) -> Result<Trace> {
    params.validate()?;
    check_dims(f, g, u0)?;
    let alpha = params.alpha;
    let mut u = u0.clone();
    let mut z = DVector::zeros(u0.len());
    let mut records = Vec::new();
    let mut status = TraceStatus::IterationLimit;
    for k in 0..params.max_iters {
        let lambda = params.lambda.at(k);
        let xp = f.evaluate(&(&z - &u), alpha)?;
        let v = &xp * lambda + &z * (1.0 - lambda);
        let zp = g.evaluate(&(&v + &u), alpha)?;
        let up = &u + &v - &zp;
        check_finite(k, &[&xp, &zp, &up])?;
        let fp = (&xp - &zp).norm();
        let objective = objective(f, g, &zp);
        records.push(TraceRecord {
            k,
            x: std::mem::replace(&mut u, up),
            y: xp,
            z: zp.clone(),
            fp_residual: fp,
            subgrad_residual: fp / alpha,
            objective,
        });
        z = zp;
        if fp <= params.stop_tol {
            status = TraceStatus::Converged;
            break;
        }
    }
    Ok(Trace {
        records,
        status,
        final_x: u,
        alpha,
    })
}

/// Lyapunov values `V_0, …, V_N` along a DRS trace.
///
/// * case 1: `‖x_k − x⋆‖² + Σ_{i<k} θ_i ‖∂f(y_i) + ∂g(z_i)‖²`
/// * case 2: `‖x_k − x⋆‖² + Σ_{i<k} θ_i [F(z_i) − F⋆]` (needs `f_star` and recorded objectives)
/// * case 3: `‖x_k − x⋆‖²`
pub fn lyapunov_series(
    trace: &Trace,
    case: CertCase,
    theta: &Schedule,
    x_star: &DVector<f64>,
    f_star: Option<f64>,
) -> Result<Vec<f64>> {
    if x_star.len() != trace.final_x.len() {
        return Err(DrsError::DimensionMismatch {
            expected: trace.final_x.len(),
            found: x_star.len(),
            context: "x_star must match the trace dimension",
        });
    }
    if !matches!(case, CertCase::Case3 { .. }) {
        theta.validate("theta", 1, true)?;
    }
    let f_star = match case {
        CertCase::Case2 { .. } => Some(f_star.ok_or_else(|| {
            DrsError::MissingObjective("case 2 needs the optimal value F⋆".into())
        })?),
        _ => None,
    };

    let mut out = Vec::with_capacity(trace.len() + 1);
    let mut running = 0.0;
    for (k, xk) in trace.states().enumerate() {
        out.push((xk - x_star).norm_squared() + running);
        let Some(rec) = trace.records.get(k) else { break };
        running += match case {
            CertCase::Case1 => theta.at(k) * rec.subgrad_residual * rec.subgrad_residual,
            CertCase::Case2 { .. } => {
                let fz = rec.objective.ok_or_else(|| {
                    DrsError::MissingObjective(format!("no objective value recorded at iteration {k}"))
                })?;
                theta.at(k) * (fz - f_star.unwrap_or_default())
            }
            CertCase::Case3 { .. } => 0.0,
        };
    }
    Ok(out)
}

/// High-accuracy fixed point used as `x⋆` in bound checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x_star: DVector<f64>,
    /// Minimizer (`y⋆ = z⋆`).
    pub y_star: DVector<f64>,
    /// `F(y⋆)` when both function values are known.
    pub f_star: Option<f64>,
    pub iterations: usize,
}

/// Runs DRS to `‖z − y‖ ≤ 1e−12`, then keeps iterating while the residual
/// still improves so that `x⋆` is settled to working precision.
pub fn solve_reference(
    f: &dyn ProxOperator,
    g: &dyn ProxOperator,
    params: &DrsParams,
    x0: &DVector<f64>,
) -> Result<Reference> {
    let params = DrsParams {
        max_iters: REFERENCE_MAX_ITERS,
        stop_tol: REFERENCE_TOL,
        ..params.clone()
    };
    params.validate()?;
    check_dims(f, g, x0)?;
    let alpha = params.alpha;
    let mut x = x0.clone();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut reached = None;
    let mut last_fp = f64::INFINITY;
    for k in 0..params.max_iters {
        let (y, z) = drs_step(f, g, alpha, &x)?;
        let step = &z - &y;
        let fp = step.norm();
        last_fp = fp;
        if fp <= params.stop_tol && reached.is_none() {
            reached = Some(k);
        }
        if reached.is_some() {
            if fp < best {
                best = fp;
                stale = 0;
            } else {
                stale += 1;
            }
            if fp == 0.0 || stale >= REFERENCE_POLISH_PATIENCE {
                if fp / alpha > REFERENCE_OPTIMALITY_TOL {
                    return Err(DrsError::ReferenceNotConverged {
                        tol: params.stop_tol,
                        iters: k,
                        residual: fp,
                    });
                }
                let f_star = f.value(&y).and_then(|fv| g.value(&y).map(|gv| fv + gv));
                return Ok(Reference {
                    x_star: x,
                    y_star: y,
                    f_star,
                    iterations: k + 1,
                });
            }
        } else {
            best = best.min(fp);
        }
        let next = &x + &step * params.lambda.at(k);
        check_finite(k, &[&y, &z, &next])?;
        x = next;
    }
    Err(DrsError::ReferenceNotConverged {
        tol: params.stop_tol,
        iters: params.max_iters,
        residual: last_fp,
    })
}

/// Writes `k, fp_residual, subgrad_residual, objective, V`; absent values are empty.
pub fn write_trace_csv<W: Write>(out: W, trace: &Trace, lyapunov: Option<&[f64]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "fp_residual", "subgrad_residual", "objective", "V"])?;
    for rec in &trace.records {
        let v = lyapunov.and_then(|vs| vs.get(rec.k)).map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            rec.k.to_string(),
            rec.fp_residual.to_string(),
            rec.subgrad_residual.to_string(),
            rec.objective.map(|o| o.to_string()).unwrap_or_default(),
            v,
        ])?;
    }
    w.flush()?;
    Ok(())
}
