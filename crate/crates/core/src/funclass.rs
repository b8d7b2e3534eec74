//! Function classes `F(m, L)` and their incremental quadratic constraints.
//!
//! A function in `F(m, L)` is `m`-strongly convex and `L`-smooth; `L = ∞`
//! drops smoothness and `m = 0` drops strong convexity. Its gradient (or
//! subgradient when `L = ∞`) satisfies the incremental quadratic constraint
//! defined by [`qc_matrix`], and its proximal map satisfies the one defined by
//! [`prox_qc_matrix`]. Both matrices are stored as their 2×2 Kronecker factor;
//! the full matrix `Q ⊗ I_d` is never formed.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{DrsError, Result};
use crate::sdplite::eig_sym;

/// Relative rank tolerance used when reporting `m = 0` for singular `AᵀA`.
pub const RANK_TOL: f64 = 1e-10;

/// Smoothness constant, with `+∞` as a first-class value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothness {
    Finite(f64),
    Infinite,
}

impl Smoothness {
    pub fn is_finite(&self) -> bool {
        matches!(self, Smoothness::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Smoothness::Finite(l) => Some(l),
            Smoothness::Infinite => None,
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Finite(l) => write!(f, "{l}"),
            Smoothness::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionClass {
    m: f64,
    l: Smoothness,
}

impl FunctionClass {
    /// `F(0, ∞)`: closed proper convex functions.
    pub const CONVEX: FunctionClass = FunctionClass {
        m: 0.0,
        l: Smoothness::Infinite,
    };

    pub fn new(m: f64, l: Smoothness) -> Result<Self> {
        if !(m.is_finite() && m >= 0.0) {
            return Err(DrsError::InvalidParameter(format!(
                "strong convexity modulus must be finite and nonnegative, got {m}"
            )));
        }
        if let Smoothness::Finite(lv) = l {
            if !(lv.is_finite() && lv > 0.0) {
                return Err(DrsError::InvalidParameter(format!(
                    "smoothness constant must be positive and finite (use Smoothness::Infinite), got {lv}"
                )));
            }
            if m > lv {
                return Err(DrsError::InvalidParameter(format!(
                    "need m <= L, got m = {m}, L = {lv}"
                )));
            }
        }
        Ok(FunctionClass { m, l })
    }

    pub fn smooth(m: f64, l: f64) -> Result<Self> {
        Self::new(m, Smoothness::Finite(l))
    }

    pub fn nonsmooth(m: f64) -> Result<Self> {
        Self::new(m, Smoothness::Infinite)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn l(&self) -> Smoothness {
        self.l
    }

    /// `κ = L/m`, defined only when `0 < m ≤ L < ∞`.
    pub fn condition_number(&self) -> Option<f64> {
        match self.l {
            Smoothness::Finite(l) if self.m > 0.0 => Some(l / self.m),
            _ => None,
        }
    }
}

impl fmt::Display for FunctionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F({}, {})", self.m, self.l)
    }
}

/// 2×2 symmetric Kronecker factor of an incremental quadratic constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcMatrix {
    pub entries: [[f64; 2]; 2],
}

impl QcMatrix {
    pub fn new(entries: [[f64; 2]; 2]) -> Result<Self> {
        if entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DrsError::InvalidParameter("QC matrix has non-finite entries".into()));
        }
        if entries[0][1] != entries[1][0] {
            return Err(DrsError::NotSymmetric {
                asymmetry: (entries[0][1] - entries[1][0]).abs(),
            });
        }
        Ok(QcMatrix { entries })
    }

    /// `[u; v]ᵀ (Q ⊗ I) [u; v]`.
    pub fn form(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let q = &self.entries;
        q[0][0] * u.dot(u) + 2.0 * q[0][1] * u.dot(v) + q[1][1] * v.dot(v)
    }

    pub fn max_abs_diff(&self, other: &QcMatrix) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// `Q(m, L) = [[-mL/(m+L), 1/2], [1/2, -1/(m+L)]]`, with the analytic limit
/// `[[-m, 1/2], [1/2, 0]]` when `L = ∞`.
pub fn qc_matrix(fc: &FunctionClass) -> QcMatrix {
    let m = fc.m();
    let (a, c) = match fc.l() {
        Smoothness::Finite(l) => (-m * l / (m + l), -1.0 / (m + l)),
        Smoothness::Infinite => (-m, 0.0),
    };
    QcMatrix {
        entries: [[a, 0.5], [0.5, c]],
    }
}

/// QC factor satisfied by `prox_{αf}` for `f ∈ fc`:
/// `T Q(m,L) Tᵀ` with `T = [[0, 1], [α, -1]]`.
pub fn prox_qc_matrix(fc: &FunctionClass, alpha: f64) -> Result<QcMatrix> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(DrsError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let q = qc_matrix(fc).entries;
    let t = [[0.0, 1.0], [alpha, -1.0]];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    s += t[i][k] * q[k][l] * t[j][l];
                }
            }
            out[i][j] = s;
        }
    }
    let off = 0.5 * (out[0][1] + out[1][0]);
    out[0][1] = off;
    out[1][0] = off;
    QcMatrix::new(out)
}

/// Class of `x ↦ ½‖Ax − b‖²`: `L = λ_max(AᵀA)`, `m = λ_min(AᵀA)` (or 0 when
/// `include_strong` is false or the matrix is singular to `RANK_TOL · L`).
pub fn estimate_class_quadratic(a: &DMatrix<f64>, include_strong: bool) -> Result<FunctionClass> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(DrsError::InvalidParameter("matrix must be nonempty".into()));
    }
    let gram = a.tr_mul(a);
    let gram = (&gram + gram.transpose()) * 0.5;
    let eig = eig_sym(&gram)?;
    let l = eig.max();
    if !(l > 0.0) {
        return Err(DrsError::InvalidParameter(
            "AᵀA has no positive eigenvalue; the quadratic is constant".into(),
        ));
    }
    let lo = eig.min();
    let m = if include_strong && lo > RANK_TOL * l { lo } else { 0.0 };
    FunctionClass::smooth(m, l)
}
