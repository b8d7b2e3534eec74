//! Rate optimization for `f ∈ F(m, L)`, `g ∈ F(0, ∞)`.
//!
//! The case-3 inequality `Q_k + σ₁Q¹ + σ₂Q² ⪯ 0` is quadratic in λ. Moving
//! `ΛΛᵀ` (with `Λ = (0, −λ, λ)ᵀ`) into a bordered 4×4 matrix gives
//!
//! ```text
//! Σ = [ Q_k − ΛΛᵀ + σ₁Q¹ + σ₂Q²   Λ ]
//!     [ Λᵀ                        −1 ]
//! ```
//!
//! which is affine in `(ρ², λ, σ₁, σ₂)` and negative semidefinite exactly when
//! the original inequality holds (Schur complement of the −1 corner). For a
//! fixed ρ², `max_eig(Σ)` is convex in the remaining variables; it is
//! minimized by deterministic multi-start coordinate descent with
//! golden-section line searches, and ρ² is bisected on top.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::certify::{build_q1, build_q2, build_qk, psd_tol, CertCase, Certificate, ReducedMatrix};
use crate::error::{DrsError, Result};
use crate::funclass::FunctionClass;
use crate::sdplite::eig::max_eig_fixed;

/// Search box for the relaxation parameter; admits λ > 2.
pub const LAMBDA_BOX: (f64, f64) = (0.01, 4.0);
/// Multipliers are searched in `[0, SIGMA_BOX_SCALE / α]`.
pub const SIGMA_BOX_SCALE: f64 = 100.0;
/// Bisection stops once the bracket on ρ² is this narrow.
pub const BISECTION_TOL: f64 = 1e-4;
/// Initial feasible end of the ρ² bracket.
pub const RHO_SQ_CEILING: f64 = 1.0 - 1e-9;
/// Condition numbers of the default sweep.
pub const DEFAULT_KAPPAS: [f64; 6] = [2.0, 5.0, 10.0, 50.0, 100.0, 500.0];

const CD_MAX_ITERS: usize = 200;
const CD_STEP_TOL: f64 = 1e-10;
const GOLDEN_TOL: f64 = 1e-10;
/// First line-search bracket as a fraction of the box width.
const INITIAL_BRACKET: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmiPoint {
    pub rho_sq: f64,
    pub lambda: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

/// Multipliers found by [`feasibility_search`] and the value of `max_eig(Σ)` there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub lambda: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub max_eig: f64,
}

fn case3_class(fc: &FunctionClass) -> Result<CertCase> {
    match CertCase::detect(fc) {
        c @ CertCase::Case3 { .. } => Ok(c),
        _ => Err(DrsError::InvalidParameter(format!(
            "linear-rate search needs 0 < m <= L < inf, got {fc}"
        ))),
    }
}

type Mat4 = [[f64; 4]; 4];

/// Affine pieces of Σ, so that evaluating at a point is a handful of axpys.
struct SigmaPencil {
    base: Mat4,
    rho: Mat4,
    lambda: Mat4,
    sigma1: Mat4,
    sigma2: Mat4,
}

fn border(m3: &ReducedMatrix) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().take(3).enumerate() {
        for (j, v) in row.iter_mut().take(3).enumerate() {
            *v = m3.get(i, j);
        }
    }
    out
}

impl SigmaPencil {
    fn new(alpha: f64, fc: &FunctionClass) -> Result<Self> {
        let case = case3_class(fc)?;
        let mut base = [[0.0; 4]; 4];
        base[0][0] = 1.0;
        base[3][3] = -1.0;
        let mut rho = [[0.0; 4]; 4];
        rho[0][0] = -1.0;
        // λ-part of Q_k − ΛΛᵀ plus the border Λ.
        let lambda = [
            [0.0, -1.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0, -1.0],
            [1.0, 0.0, 0.0, 1.0],
            [0.0, -1.0, 1.0, 0.0],
        ];
        Ok(SigmaPencil {
            base,
            rho,
            lambda,
            sigma1: border(&build_q1(alpha, &case.f_class())?),
            sigma2: border(&build_q2(alpha)?),
        })
    }

    fn at(&self, p: &LmiPoint) -> Mat4 {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = self.base[i][j]
                    + p.rho_sq * self.rho[i][j]
                    + p.lambda * self.lambda[i][j]
                    + p.sigma1 * self.sigma1[i][j]
                    + p.sigma2 * self.sigma2[i][j];
            }
        }
        out
    }
}

/// Σ at `point` for step size `alpha` and strongly convex smooth class `fc`.
pub fn build_sigma_matrix(point: &LmiPoint, alpha: f64, fc: &FunctionClass) -> Result<ReducedMatrix> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(DrsError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let m = SigmaPencil::new(alpha, fc)?.at(point);
    ReducedMatrix::new(DMatrix::from_fn(4, 4, |i, j| m[i][j]))
}

/// `max_eig(Σ)` at `point`.
pub fn sigma_max_eig(point: &LmiPoint, alpha: f64, fc: &FunctionClass) -> Result<f64> {
    build_sigma_matrix(point, alpha, fc)?.max_eig()
}

fn golden_section<F: FnMut(f64) -> f64>(f: &mut F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > GOLDEN_TOL * (1.0 + lo.abs().max(hi.abs())) {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    let t = 0.5 * (lo + hi);
    (t, f(t))
}

/// Minimizes a convex `f` over `[lo, hi]` starting from `t0`: brackets the
/// minimizer by doubling steps of initial size `h`, then golden-section.
fn line_min<F: FnMut(f64) -> f64>(mut f: F, t0: f64, f0: f64, lo: f64, hi: f64, h: f64) -> (f64, f64) {
    let left = (t0 - h).max(lo);
    let right = (t0 + h).min(hi);
    let (fl, fr) = (f(left), f(right));
    let (a, b) = if fl >= f0 && fr >= f0 {
        (left, right)
    } else {
        let dir = if fr < fl { 1.0 } else { -1.0 };
        let bound = if dir > 0.0 { hi } else { lo };
        let (mut prev, mut cur, mut fcur) = (t0, if dir > 0.0 { right } else { left }, fl.min(fr));
        let mut step = h;
        loop {
            if cur == bound {
                break (prev.min(cur), prev.max(cur));
            }
            step *= 2.0;
            let next = if dir > 0.0 { (t0 + step).min(hi) } else { (t0 - step).max(lo) };
            let fnext = f(next);
            if fnext >= fcur {
                break (prev.min(next), prev.max(next));
            }
            prev = cur;
            cur = next;
            fcur = fnext;
        }
    };
    let (t, ft) = golden_section(&mut f, a, b);
    if ft < f0 {
        (t, ft)
    } else {
        (t0, f0)
    }
}

struct Search<'a> {
    pencil: &'a SigmaPencil,
    rho_sq: f64,
    boxes: [(f64, f64); 3],
    free: [bool; 3],
    /// Stop a descent once `Σ ≺ 0` strictly; the bisection only needs a verdict.
    early_exit: bool,
}

impl Search<'_> {
    fn eval(&self, p: [f64; 3]) -> f64 {
        let point = LmiPoint {
            rho_sq: self.rho_sq,
            lambda: p[0],
            sigma1: p[1],
            sigma2: p[2],
        };
        max_eig_fixed(&self.pencil.at(&point)).unwrap_or(f64::INFINITY)
    }

    fn descend(&self, start: [f64; 3]) -> ([f64; 3], f64) {
        let mut p = start;
        let mut fp = self.eval(p);
        let mut h = self.boxes.map(|(lo, hi)| INITIAL_BRACKET * (hi - lo));
        for _ in 0..CD_MAX_ITERS {
            let old = p;
            for i in (0..3).filter(|&i| self.free[i]) {
                let (lo, hi) = self.boxes[i];
                let coord = |t| {
                    let mut q = p;
                    q[i] = t;
                    self.eval(q)
                };
                let (t, ft) = line_min(coord, p[i], fp, lo, hi, h[i]);
                h[i] = (2.0 * (t - p[i]).abs())
                    .max(0.25 * h[i])
                    .max(CD_STEP_TOL * (1.0 + t.abs()));
                p[i] = t;
                fp = ft;
                if self.early_exit && fp < 0.0 {
                    return (p, fp);
                }
            }
            if self.early_exit && fp < 0.0 {
                return (p, fp);
            }
            // Pattern move along the sweep's net displacement.
            let d = [p[0] - old[0], p[1] - old[1], p[2] - old[2]];
            let t_max = (0..3)
                .filter(|&i| d[i] != 0.0)
                .map(|i| {
                    let (lo, hi) = self.boxes[i];
                    if d[i] > 0.0 {
                        (hi - p[i]) / d[i]
                    } else {
                        (lo - p[i]) / d[i]
                    }
                })
                .fold(f64::INFINITY, f64::min);
            if t_max.is_finite() && t_max > 0.0 {
                let base = p;
                let along = |t: f64| self.eval([base[0] + t * d[0], base[1] + t * d[1], base[2] + t * d[2]]);
                let (t, ft) = line_min(along, 0.0, fp, 0.0, t_max, t_max.min(1.0));
                if t > 0.0 {
                    for i in 0..3 {
                        p[i] = (base[i] + t * d[i]).clamp(self.boxes[i].0, self.boxes[i].1);
                    }
                    fp = self.eval(p);
                    debug_assert!(fp <= ft + 1e-15);
                }
            }
            let step = (0..3).map(|i| (p[i] - old[i]).abs()).fold(0.0, f64::max);
            if step < CD_STEP_TOL {
                break;
            }
        }
        (p, fp)
    }

    /// Descends from each start in turn; stops at the first certifying minimum.
    fn run(&self, starts: &[[f64; 3]]) -> Option<Witness> {
        starts.iter().find_map(|s| {
            let (p, val) = self.descend(*s);
            let tol = psd_tol(&build_qk(p[0], self.rho_sq));
            (val <= tol).then_some(Witness {
                lambda: p[0],
                sigma1: p[1],
                sigma2: p[2],
                max_eig: val,
            })
        })
    }
}

fn starts(alpha: f64, lambda: Option<f64>) -> Vec<[f64; 3]> {
    let lambdas = match lambda {
        Some(l) => vec![l],
        None => vec![1.0, 3.0],
    };
    let sigmas = [1.0 / alpha, 50.0 / alpha];
    let mut out = Vec::new();
    for &l in &lambdas {
        for &s1 in &sigmas {
            for &s2 in &sigmas {
                out.push([l, s1, s2]);
            }
        }
    }
    out
}

fn search(
    pencil: &SigmaPencil,
    alpha: f64,
    rho_sq: f64,
    fixed_lambda: Option<f64>,
    early_exit: bool,
) -> Option<Witness> {
    let sigma_box = (0.0, SIGMA_BOX_SCALE / alpha);
    let s = Search {
        pencil,
        rho_sq,
        boxes: [LAMBDA_BOX, sigma_box, sigma_box],
        free: [fixed_lambda.is_none(), true, true],
        early_exit,
    };
    s.run(&starts(alpha, fixed_lambda))
}

/// Minimizes `max_eig(Σ)` over `(λ, σ₁, σ₂)` for fixed ρ²; returns the
/// minimizer when it certifies `Σ ⪯ 0` to `psd_tol`.
pub fn feasibility_search(alpha: f64, fc: &FunctionClass, rho_sq: f64) -> Result<Option<Witness>> {
    let pencil = SigmaPencil::new(alpha, fc)?;
    Ok(search(&pencil, alpha, rho_sq, None, false))
}

fn bisect(alpha: f64, fc: &FunctionClass, fixed_lambda: Option<f64>) -> Result<Option<Certificate>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(DrsError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let case = case3_class(fc)?;
    let pencil = SigmaPencil::new(alpha, fc)?;
    let Some(mut best) = search(&pencil, alpha, RHO_SQ_CEILING, fixed_lambda, true) else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (0.0, RHO_SQ_CEILING);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        match search(&pencil, alpha, mid, fixed_lambda, true) {
            Some(w) => {
                hi = mid;
                best = w;
            }
            None => lo = mid,
        }
    }
    // Full descent at the final rate so the reported multipliers are a minimizer.
    if let Some(w) = search(&pencil, alpha, hi, fixed_lambda, false) {
        best = w;
    }
    let cert = Certificate::assemble(case, alpha, best.lambda, None, best.sigma1, best.sigma2, Some(hi))?;
    if !cert.feasible {
        return Err(DrsError::RateOptimization(format!(
            "bordered search accepted rho_sq = {hi} but the direct check gives max eigenvalue {:e}",
            cert.max_eig
        )));
    }
    Ok(Some(cert))
}

/// Smallest certified ρ² (to [`BISECTION_TOL`]) over `λ, σ₁, σ₂` for step size `alpha`.
pub fn optimize_rate(alpha: f64, fc: &FunctionClass) -> Result<Certificate> {
    bisect(alpha, fc, None)?.ok_or_else(|| {
        DrsError::RateOptimization(format!(
            "no certificate at rho_sq = {RHO_SQ_CEILING} for alpha = {alpha}, {fc}"
        ))
    })
}

/// As [`optimize_rate`] with λ held fixed; `None` when no ρ² < 1 is certified.
pub fn optimize_rate_fixed_lambda(alpha: f64, fc: &FunctionClass, lambda: f64) -> Result<Option<Certificate>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(DrsError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    bisect(alpha, fc, Some(lambda))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub alpha: f64,
    pub kappa: f64,
    /// `√ρ²` of the optimized certificate (NaN when the cell failed).
    pub rho_opt: f64,
    pub lambda_opt: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub feasible: bool,
    pub error: Option<String>,
}

impl SweepCell {
    pub fn rho_sq(&self) -> f64 {
        self.rho_opt * self.rho_opt
    }
}

/// `n` points from `lo` to `hi`, evenly spaced in log scale.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// 25 step sizes log-spaced over `[0.01, 10]`.
pub fn default_alpha_grid() -> Vec<f64> {
    logspace(0.01, 10.0, 25)
}

fn sweep_cell(alpha: f64, kappa: f64, m_base: f64) -> SweepCell {
    let failed = |msg: String| SweepCell {
        alpha,
        kappa,
        rho_opt: f64::NAN,
        lambda_opt: f64::NAN,
        sigma1: f64::NAN,
        sigma2: f64::NAN,
        feasible: false,
        error: Some(msg),
    };
    let fc = match FunctionClass::smooth(m_base, kappa * m_base) {
        Ok(fc) => fc,
        Err(e) => return failed(e.to_string()),
    };
    match optimize_rate(alpha, &fc) {
        Ok(c) => SweepCell {
            alpha,
            kappa,
            rho_opt: c.rho_sq.unwrap_or(f64::NAN).sqrt(),
            lambda_opt: c.lambda,
            sigma1: c.sigma1,
            sigma2: c.sigma2,
            feasible: c.feasible,
            error: None,
        },
        Err(e) => failed(e.to_string()),
    }
}

/// Optimal rate per `(κ, α)` cell with `(m, L) = (m_base, κ·m_base)`, κ-major.
///
/// Cells are evaluated in parallel; failures are recorded per cell.
pub fn sweep_heatmap(alpha_grid: &[f64], kappa_grid: &[f64], m_base: f64) -> Vec<SweepCell> {
    let cells: Vec<(f64, f64)> = kappa_grid
        .iter()
        .flat_map(|&k| alpha_grid.iter().map(move |&a| (a, k)))
        .collect();
    cells
        .par_iter()
        .map(|&(alpha, kappa)| sweep_cell(alpha, kappa, m_base))
        .collect()
}

/// Best case-3 certificate over a grid of step sizes (first minimizer on ties).
pub fn tune_alpha(fc: &FunctionClass, alpha_grid: &[f64]) -> Result<Certificate> {
    case3_class(fc)?;
    let certs: Vec<Result<Certificate>> = alpha_grid.par_iter().map(|&a| optimize_rate(a, fc)).collect();
    let mut best: Option<Certificate> = None;
    for c in certs.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => c.rho_sq < b.rho_sq,
        };
        if better {
            best = Some(c);
        }
    }
    best.ok_or_else(|| DrsError::RateOptimization("no step size on the grid admits a certificate".into()))
}

pub fn write_heatmap_csv<W: Write>(out: W, cells: &[SweepCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "kappa", "rho_opt", "lambda_opt", "sigma1", "sigma2", "feasible"])?;
    for c in cells {
        w.write_record([
            c.alpha.to_string(),
            c.kappa.to_string(),
            c.rho_opt.to_string(),
            c.lambda_opt.to_string(),
            c.sigma1.to_string(),
            c.sigma2.to_string(),
            c.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
