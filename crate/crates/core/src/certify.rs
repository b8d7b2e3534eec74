//! Lyapunov certificates for DRS as reduced (Kronecker-factor) matrix
//! inequalities over the error signal `e_k = (x_k − x⋆, y_k − y⋆, z_k − z⋆)`.
//!
//! Three regimes are covered, all with `g ∈ F(0, ∞)`:
//!
//! | case  | f            | left-hand side             | rate                               |
//! |-------|--------------|----------------------------|------------------------------------|
//! | 1     | `F(0, ∞)`    | `W⁰ + σ₁Q¹ + σ₂Q²`         | `min ‖∂f + ∂g‖² ≤ ‖x₀ − x⋆‖²/Θ_k`  |
//! | 2     | `F(0, L)`    | `W¹ + σ₁Q¹ + σ₂Q²`         | `min F(z) − F⋆ ≤ ‖x₀ − x⋆‖²/Θ_k`   |
//! | 3     | `F(m, L)`    | `Q_k + σ₁Q¹ + σ₂Q²`        | `‖x_k − x⋆‖² ≤ ρ^{2k}‖x₀ − x⋆‖²`   |
//!
//! A certificate is valid when the assembled 3×3 matrix is negative
//! semidefinite up to [`psd_tol`].

use std::fmt;
use std::io::Write;
use std::ops::{Add, Mul};

use nalgebra::{DMatrix, DVector};

use crate::error::{DrsError, Result};
use crate::funclass::{qc_matrix, FunctionClass, QcMatrix, Smoothness};
use crate::sdplite::max_eig;

/// Relative factor of the negative-semidefiniteness tolerance.
pub const PSD_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertCase {
    /// `f, g ∈ F(0, ∞)`.
    Case1,
    /// `f ∈ F(0, L_f)`, `0 < L_f < ∞`.
    Case2 { l_f: f64 },
    /// `f ∈ F(m_f, L_f)`, `0 < m_f ≤ L_f < ∞`.
    Case3 { m_f: f64, l_f: f64 },
}

impl CertCase {
    pub fn case2(l_f: f64) -> Result<Self> {
        if !(l_f > 0.0 && l_f.is_finite()) {
            return Err(DrsError::InvalidParameter(format!("case 2 needs 0 < L_f < inf, got {l_f}")));
        }
        Ok(CertCase::Case2 { l_f })
    }

    pub fn case3(m_f: f64, l_f: f64) -> Result<Self> {
        if !(m_f > 0.0 && m_f <= l_f && l_f.is_finite()) {
            return Err(DrsError::InvalidParameter(format!(
                "case 3 needs 0 < m_f <= L_f < inf, got m_f = {m_f}, L_f = {l_f}"
            )));
        }
        Ok(CertCase::Case3 { m_f, l_f })
    }

    /// Strongest case the class of `f` supports.
    pub fn detect(fc: &FunctionClass) -> CertCase {
        match fc.l() {
            Smoothness::Infinite => CertCase::Case1,
            Smoothness::Finite(l) if fc.m() > 0.0 => CertCase::Case3 { m_f: fc.m(), l_f: l },
            Smoothness::Finite(l) => CertCase::Case2 { l_f: l },
        }
    }

    /// Class of `f` used to build `Q¹`.
    pub fn f_class(&self) -> FunctionClass {
        match *self {
            CertCase::Case1 => FunctionClass::CONVEX,
            CertCase::Case2 { l_f } => FunctionClass::smooth(0.0, l_f).expect("validated case 2"),
            CertCase::Case3 { m_f, l_f } => FunctionClass::smooth(m_f, l_f).expect("validated case 3"),
        }
    }

    pub fn index(&self) -> u8 {
        match self {
            CertCase::Case1 => 1,
            CertCase::Case2 { .. } => 2,
            CertCase::Case3 { .. } => 3,
        }
    }
}

impl fmt::Display for CertCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Symmetric factor `M` of a certificate matrix `M ⊗ I_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMatrix(DMatrix<f64>);

impl ReducedMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(DrsError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
                context: "reduced matrix must be square",
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(DrsError::InvalidParameter("reduced matrix has non-finite entries".into()));
        }
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-14 * m.amax().max(1.0) {
            return Err(DrsError::NotSymmetric { asymmetry: asym });
        }
        Ok(ReducedMatrix(m))
    }

    fn from_rows(n: usize, rows: &[f64]) -> Self {
        ReducedMatrix(DMatrix::from_row_slice(n, n, rows))
    }

    pub fn zeros(n: usize) -> Self {
        ReducedMatrix(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_eig(&self) -> Result<f64> {
        max_eig(&self.0)
    }

    /// `eᵀ (M ⊗ I_d) e` with `e` given as its `n` blocks.
    pub fn kron_form(&self, blocks: &[&DVector<f64>]) -> f64 {
        assert_eq!(blocks.len(), self.dim(), "one block per row of the reduced matrix");
        let mut s = 0.0;
        for (i, bi) in blocks.iter().enumerate() {
            for (j, bj) in blocks.iter().enumerate() {
                let mij = self.0[(i, j)];
                if mij != 0.0 {
                    s += mij * bi.dot(bj);
                }
            }
        }
        s
    }
}

impl Add for &ReducedMatrix {
    type Output = ReducedMatrix;

    fn add(self, rhs: &ReducedMatrix) -> ReducedMatrix {
        ReducedMatrix(&self.0 + &rhs.0)
    }
}

impl Mul<f64> for &ReducedMatrix {
    type Output = ReducedMatrix;

    fn mul(self, rhs: f64) -> ReducedMatrix {
        ReducedMatrix(&self.0 * rhs)
    }
}

/// `1e-9 · (1 + ‖W‖_∞)`.
pub fn psd_tol(w: &ReducedMatrix) -> f64 {
    PSD_REL_TOL * (1.0 + w.norm_inf())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(DrsError::InvalidParameter(format!("alpha must be positive, got {alpha}")))
    }
}

/// Exact Lyapunov difference factor for case 1: `V_{k+1} − V_k = eᵀ W⁰ e`.
pub fn build_w0(alpha: f64, lambda: f64, theta: f64) -> Result<ReducedMatrix> {
    check_alpha(alpha)?;
    let l = lambda;
    let d = l * l + theta / (alpha * alpha);
    Ok(ReducedMatrix::from_rows(3, &[0.0, -l, l, -l, d, -d, l, -d, d]))
}

/// `Rᵀ Q R` for a 2×3 selector `R`.
fn embed(q: &QcMatrix, r: [[f64; 3]; 2]) -> ReducedMatrix {
    let mut out = DMatrix::<f64>::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    s += r[k][i] * q.entries[k][l] * r[l][j];
                }
            }
            out[(i, j)] = s;
        }
    }
    let sym = (&out + out.transpose()) * 0.5;
    ReducedMatrix(sym)
}

/// QC of `prox_{αf}` on `(x, y)`: `eᵀQ¹e = [αy; x − y]ᵀ Q(m_f, L_f) [αy; x − y]`.
pub fn build_q1(alpha: f64, fc: &FunctionClass) -> Result<ReducedMatrix> {
    check_alpha(alpha)?;
    Ok(embed(&qc_matrix(fc), [[0.0, alpha, 0.0], [1.0, -1.0, 0.0]]))
}

/// QC of `prox_{αg}` on `(2y − x, z)`: `eᵀQ²e = [αz; 2y − x − z]ᵀ Q(0, ∞) [αz; 2y − x − z]`.
pub fn build_q2(alpha: f64) -> Result<ReducedMatrix> {
    check_alpha(alpha)?;
    Ok(embed(
        &qc_matrix(&FunctionClass::CONVEX),
        [[0.0, 0.0, alpha], [-1.0, 2.0, -1.0]],
    ))
}

/// Case-2 upper bound factor: `V_{k+1} − V_k ≤ eᵀ W¹ e`.
pub fn build_w1(alpha: f64, lambda: f64, theta: f64, l_f: f64) -> Result<ReducedMatrix> {
    check_alpha(alpha)?;
    if !(l_f > 0.0 && l_f.is_finite()) {
        return Err(DrsError::InvalidParameter(format!("W1 needs 0 < L_f < inf, got {l_f}")));
    }
    let l = lambda;
    let l2 = l * l;
    let yy = theta * l_f / 2.0 + l2;
    let yz = theta / 2.0 * (1.0 / alpha - l_f) - l2;
    let zz = theta * (l_f / 2.0 - 1.0 / alpha) + l2;
    Ok(ReducedMatrix::from_rows(3, &[0.0, -l, l, -l, yy, yz, l, yz, zz]))
}

/// Case-3 factor: `V_{k+1} − ρ² V_k = eᵀ Q_k e`.
pub fn build_qk(lambda: f64, rho_sq: f64) -> ReducedMatrix {
    let l = lambda;
    let l2 = l * l;
    ReducedMatrix::from_rows(3, &[1.0 - rho_sq, -l, l, -l, l2, -l2, l, -l2, l2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub case: CertCase,
    pub alpha: f64,
    pub lambda: f64,
    /// Lyapunov weight, cases 1 and 2.
    pub theta: Option<f64>,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Contraction factor, case 3.
    pub rho_sq: Option<f64>,
    /// Assembled left-hand side.
    pub witness: ReducedMatrix,
    pub max_eig: f64,
    pub feasible: bool,
}

impl Certificate {
    /// Assembles and checks a certificate; the result carries its verdict.
    ///
    /// Parameters outside the ranges a rate bound needs (θ ≤ 0 for cases 1–2,
    /// ρ² ∉ (0, 1) for case 3, negative multipliers) are rejected outright.
    pub fn assemble(
        case: CertCase,
        alpha: f64,
        lambda: f64,
        theta: Option<f64>,
        sigma1: f64,
        sigma2: f64,
        rho_sq: Option<f64>,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(DrsError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if !(sigma1 >= 0.0 && sigma2 >= 0.0 && sigma1.is_finite() && sigma2.is_finite()) {
            return Err(DrsError::InvalidParameter(format!(
                "multipliers must be nonnegative, got sigma1 = {sigma1}, sigma2 = {sigma2}"
            )));
        }
        match case {
            CertCase::Case1 | CertCase::Case2 { .. } => match theta {
                Some(t) if t > 0.0 && t.is_finite() => {}
                other => {
                    return Err(DrsError::InvalidParameter(format!(
                        "cases 1-2 need theta > 0, got {other:?}"
                    )))
                }
            },
            CertCase::Case3 { .. } => match rho_sq {
                Some(r) if r > 0.0 && r < 1.0 => {}
                other => {
                    return Err(DrsError::InvalidParameter(format!(
                        "case 3 needs rho_sq in (0, 1), got {other:?}"
                    )))
                }
            },
        }
        let mut cert = Certificate {
            case,
            alpha,
            lambda,
            theta,
            sigma1,
            sigma2,
            rho_sq,
            witness: ReducedMatrix::zeros(3),
            max_eig: f64::NAN,
            feasible: false,
        };
        let (lhs, tol) = assemble_lhs(&cert)?;
        cert.max_eig = lhs.max_eig()?;
        cert.feasible = cert.max_eig <= tol;
        cert.witness = lhs;
        Ok(cert)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feasible {
            Ok(())
        } else {
            Err(DrsError::InvalidParameter(format!(
                "certificate infeasible: max eigenvalue {:e}",
                self.max_eig
            )))
        }
    }
}

/// Case-dependent `W` (`W⁰`, `W¹` or `Q_k`).
pub fn case_matrix(cert: &Certificate) -> Result<ReducedMatrix> {
    match cert.case {
        CertCase::Case1 => build_w0(cert.alpha, cert.lambda, cert.theta.unwrap_or(0.0)),
        CertCase::Case2 { l_f } => build_w1(cert.alpha, cert.lambda, cert.theta.unwrap_or(0.0), l_f),
        CertCase::Case3 { .. } => Ok(build_qk(cert.lambda, cert.rho_sq.unwrap_or(1.0))),
    }
}

fn assemble_lhs(cert: &Certificate) -> Result<(ReducedMatrix, f64)> {
    let w = case_matrix(cert)?;
    let q1 = build_q1(cert.alpha, &cert.case.f_class())?;
    let q2 = build_q2(cert.alpha)?;
    let lhs = &(&w + &(&q1 * cert.sigma1)) + &(&q2 * cert.sigma2);
    Ok((lhs, psd_tol(&w)))
}

/// Recomputes `W + σ₁Q¹ + σ₂Q²` and its largest eigenvalue.
pub fn check_certificate(cert: &Certificate) -> Result<(bool, f64)> {
    let (lhs, tol) = assemble_lhs(cert)?;
    let top = lhs.max_eig()?;
    Ok((top <= tol, top))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams {
    /// Common value of both multipliers.
    pub sigma: f64,
    pub theta: f64,
}

fn check_relaxation(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 2.0 {
        Ok(())
    } else {
        Err(DrsError::InvalidParameter(format!(
            "analytic parameters need lambda in (0, 2), got {lambda}"
        )))
    }
}

/// Case 1: `σ = 2λ/α`, `θ = α²λ(2 − λ)`; the assembled matrix vanishes identically.
pub fn analytic_params_case1(alpha: f64, lambda: f64) -> Result<AnalyticParams> {
    check_alpha(alpha)?;
    check_relaxation(lambda)?;
    Ok(AnalyticParams {
        sigma: 2.0 * lambda / alpha,
        theta: alpha * alpha * lambda * (2.0 - lambda),
    })
}

/// Case 2: with `t = (2 − λ)/(αL_f)`,
/// `σ = (2λ/α)(√(t²+1) − t)` and `θ = 2λα(1 + t − √(t²+1))`.
pub fn analytic_params_case2(alpha: f64, lambda: f64, l_f: f64) -> Result<AnalyticParams> {
    check_alpha(alpha)?;
    check_relaxation(lambda)?;
    if !(l_f > 0.0 && l_f.is_finite()) {
        return Err(DrsError::InvalidParameter(format!("need 0 < L_f < inf, got {l_f}")));
    }
    let t = (2.0 - lambda) / (alpha * l_f);
    let root = t.hypot(1.0);
    // √(t²+1) − t and 1 + t − √(t²+1) in cancellation-free form.
    let gap = 1.0 / (root + t);
    Ok(AnalyticParams {
        sigma: 2.0 * lambda / alpha * gap,
        theta: 2.0 * lambda * alpha * (1.0 - gap),
    })
}

/// Lower edge of the open interval `(0, 2)` used when clamping suggestions.
const LAMBDA_CLAMP_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSuggestion {
    pub lambda: f64,
    /// Set when the raw formula fell outside `(0, 2)`.
    pub clamped: bool,
}

/// `λ = (2/3)(2 − αL + √(1 − αL + α²L²))`, clamped into `(0, 2)`.
pub fn suggest_lambda_case2(alpha: f64, l_f: f64) -> Result<LambdaSuggestion> {
    check_alpha(alpha)?;
    if !(l_f > 0.0 && l_f.is_finite()) {
        return Err(DrsError::InvalidParameter(format!("need 0 < L_f < inf, got {l_f}")));
    }
    let s = alpha * l_f;
    let raw = 2.0 / 3.0 * (2.0 - s + (1.0 - s + s * s).sqrt());
    let lo = LAMBDA_CLAMP_MARGIN;
    let hi = 2.0 - LAMBDA_CLAMP_MARGIN;
    let lambda = raw.clamp(lo, hi);
    Ok(LambdaSuggestion {
        lambda,
        clamped: lambda != raw,
    })
}

/// Bound at iteration `k` from a certificate schedule.
///
/// A single certificate is treated as constant over all iterations; otherwise
/// `certs[i]` certifies step `i` and at least `k` entries are required.
///
/// * case 1: bound on `min_{i<k} ‖∂f(y_i) + ∂g(z_i)‖²`, `x0_dist_sq / Θ_k`
/// * case 2: bound on `min_{i<k} F(z_i) − F⋆`, `x0_dist_sq / Θ_k`
/// * case 3: bound on `‖x_k − x⋆‖²`, `(Π ρ_i²) · x0_dist_sq`
pub fn rate_bound(certs: &[Certificate], k: usize, x0_dist_sq: f64) -> Result<f64> {
    let first = certs
        .first()
        .ok_or_else(|| DrsError::InvalidParameter("empty certificate schedule".into()))?;
    if certs.len() > 1 && certs.len() < k {
        return Err(DrsError::InvalidParameter(format!(
            "schedule has {} certificates, need {k}",
            certs.len()
        )));
    }
    if let Some(bad) = certs.iter().find(|c| !c.feasible) {
        return Err(DrsError::InvalidParameter(format!(
            "certificate is infeasible (max eigenvalue {:e})",
            bad.max_eig
        )));
    }
    if certs.iter().any(|c| c.case.index() != first.case.index()) {
        return Err(DrsError::InvalidParameter("mixed certificate cases".into()));
    }
    let at = |i: usize| if certs.len() == 1 { &certs[0] } else { &certs[i] };
    match first.case {
        CertCase::Case1 | CertCase::Case2 { .. } => {
            let big_theta: f64 = (0..k).map(|i| at(i).theta.unwrap_or(0.0)).sum();
            if !(big_theta > 0.0) {
                return Err(DrsError::InvalidParameter(format!(
                    "cumulative weight Θ_{k} is zero"
                )));
            }
            Ok(x0_dist_sq / big_theta)
        }
        CertCase::Case3 { .. } => {
            let factor: f64 = (0..k).map(|i| at(i).rho_sq.unwrap_or(1.0)).product();
            Ok(factor * x0_dist_sq)
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_certificates_csv<W: Write>(out: W, certs: &[Certificate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "case", "alpha", "lambda", "theta", "sigma1", "sigma2", "rho_sq", "max_eig", "feasible",
    ])?;
    for c in certs {
        w.write_record([
            c.case.to_string(),
            c.alpha.to_string(),
            c.lambda.to_string(),
            opt(c.theta),
            c.sigma1.to_string(),
            c.sigma2.to_string(),
            opt(c.rho_sq),
            c.max_eig.to_string(),
            c.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
