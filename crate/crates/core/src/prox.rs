//! Exact proximal operators.
//!
//! `prox_{αf}(v) = argmin_u f(u) + ‖v − u‖²/(2α)`, equivalently the implicit
//! solution of `y = v − α ∂f(y)`, which is what [`recover_subgradient`] inverts.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{DrsError, Result};
use crate::funclass::{estimate_class_quadratic, FunctionClass};

/// Feasibility slack used when evaluating the affine indicator, relative to `1 + ‖b‖`.
pub const AFFINE_FEASIBILITY_TOL: f64 = 1e-9;
/// Minimum accepted Cholesky pivot of `AAᵀ`, relative to `trace(AAᵀ)/p`.
pub const AFFINE_PIVOT_TOL: f64 = 1e-12;

pub trait ProxOperator: Send + Sync {
    /// `prox_{αf}(v)`.
    fn evaluate(&self, v: &DVector<f64>, alpha: f64) -> Result<DVector<f64>>;

    fn class(&self) -> FunctionClass;

    /// `f(x)` when the operator knows its function; may be `+∞` for indicators.
    fn value(&self, _x: &DVector<f64>) -> Option<f64> {
        None
    }

    /// Dimension of the domain when fixed by the operator's data.
    fn dim(&self) -> Option<usize> {
        None
    }
}

/// Subgradient `(v − y)/α ∈ ∂f(y)` for `y = prox_{αf}(v)`.
pub fn recover_subgradient(v: &DVector<f64>, y: &DVector<f64>, alpha: f64) -> DVector<f64> {
    (v - y) / alpha
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(DrsError::InvalidParameter(format!("alpha must be positive, got {alpha}")))
    }
}

fn check_dim(expected: usize, v: &DVector<f64>, context: &'static str) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(DrsError::DimensionMismatch {
            expected,
            found: v.len(),
            context,
        })
    }
}

/// `f ≡ 0`; the prox is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

pub fn prox_zero() -> Zero {
    Zero
}

impl ProxOperator for Zero {
    fn evaluate(&self, v: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
        check_alpha(alpha)?;
        Ok(v.clone())
    }

    fn class(&self) -> FunctionClass {
        FunctionClass::CONVEX
    }

    fn value(&self, _x: &DVector<f64>) -> Option<f64> {
        Some(0.0)
    }
}

/// `f(x) = γ‖x‖₁`; the prox is componentwise soft thresholding at `αγ`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    gamma: f64,
}

pub fn prox_l1(gamma: f64) -> Result<L1Norm> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(DrsError::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    Ok(L1Norm { gamma })
}

impl L1Norm {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl ProxOperator for L1Norm {
    fn evaluate(&self, v: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
        check_alpha(alpha)?;
        let t = alpha * self.gamma;
        Ok(v.map(|vi| vi.signum() * (vi.abs() - t).max(0.0)))
    }

    fn class(&self) -> FunctionClass {
        FunctionClass::CONVEX
    }

    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        Some(self.gamma * x.lp_norm(1))
    }
}

/// Indicator of `{x : Ax = b}`; the prox is Euclidean projection and ignores α.
#[derive(Debug, Clone)]
pub struct AffineIndicator {
    a: DMatrix<f64>,
    b: DVector<f64>,
    gram: Cholesky<f64, Dyn>,
}

pub fn prox_affine_indicator(a: DMatrix<f64>, b: DVector<f64>) -> Result<AffineIndicator> {
    let p = a.nrows();
    if p == 0 || a.ncols() == 0 {
        return Err(DrsError::InvalidParameter("constraint matrix must be nonempty".into()));
    }
    check_dim(p, &b, "right-hand side length must equal the number of rows of A")?;
    let aat = &a * a.transpose();
    let threshold = AFFINE_PIVOT_TOL * aat.trace() / p as f64;
    let gram = Cholesky::new(aat.clone()).ok_or(DrsError::RankDeficient {
        pivot: 0.0,
        threshold,
    })?;
    let l = gram.l_dirty();
    for i in 0..p {
        let pivot = l[(i, i)] * l[(i, i)];
        if !(pivot >= threshold) {
            return Err(DrsError::RankDeficient { pivot, threshold });
        }
    }
    Ok(AffineIndicator { a, b, gram })
}

impl AffineIndicator {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }
}

impl ProxOperator for AffineIndicator {
    fn evaluate(&self, v: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
        check_alpha(alpha)?;
        check_dim(self.a.ncols(), v, "affine projection input")?;
        let w = self.gram.solve(&self.residual(v));
        Ok(v - self.a.tr_mul(&w))
    }

    fn class(&self) -> FunctionClass {
        FunctionClass::CONVEX
    }

    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        if x.len() != self.a.ncols() {
            return None;
        }
        let r = self.residual(x).norm();
        Some(if r <= AFFINE_FEASIBILITY_TOL * (1.0 + self.b.norm()) {
            0.0
        } else {
            f64::INFINITY
        })
    }

    fn dim(&self) -> Option<usize> {
        Some(self.a.ncols())
    }
}

/// `f(x) = ½‖Ax − b‖²`; the prox solves `(I + αAᵀA) y = v + αAᵀb`.
///
/// One Cholesky factorization is kept per distinct α.
#[derive(Debug)]
pub struct LeastSquares {
    a: DMatrix<f64>,
    b: DVector<f64>,
    gram: DMatrix<f64>,
    atb: DVector<f64>,
    class: FunctionClass,
    factors: RwLock<HashMap<u64, Arc<Cholesky<f64, Dyn>>>>,
}

pub fn prox_quadratic(a: DMatrix<f64>, b: DVector<f64>) -> Result<LeastSquares> {
    check_dim(a.nrows(), &b, "right-hand side length must equal the number of rows of A")?;
    let class = estimate_class_quadratic(&a, true)?;
    let gram = a.tr_mul(&a);
    let atb = a.tr_mul(&b);
    Ok(LeastSquares {
        a,
        b,
        gram,
        atb,
        class,
        factors: RwLock::new(HashMap::new()),
    })
}

impl LeastSquares {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Builds (or reuses) the factorization for `alpha` ahead of evaluation.
    pub fn prefactor(&self, alpha: f64) -> Result<()> {
        self.factor(alpha).map(|_| ())
    }

    pub fn factorization_count(&self) -> usize {
        self.factors.read().map(|f| f.len()).unwrap_or(0)
    }

    fn factor(&self, alpha: f64) -> Result<Arc<Cholesky<f64, Dyn>>> {
        check_alpha(alpha)?;
        let key = alpha.to_bits();
        if let Some(c) = self.factors.read().expect("factor cache poisoned").get(&key) {
            return Ok(Arc::clone(c));
        }
        let n = self.gram.nrows();
        let system = DMatrix::identity(n, n) + &self.gram * alpha;
        // I + αAᵀA ≻ 0 for α > 0, so this only fails on non-finite data.
        let chol = Cholesky::new(system)
            .ok_or_else(|| DrsError::Factorization(format!("I + αAᵀA not positive definite for α = {alpha}")))?;
        let chol = Arc::new(chol);
        self.factors
            .write()
            .expect("factor cache poisoned")
            .entry(key)
            .or_insert_with(|| Arc::clone(&chol));
        Ok(chol)
    }
}

impl ProxOperator for LeastSquares {
    fn evaluate(&self, v: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
        check_dim(self.a.ncols(), v, "least-squares prox input")?;
        let chol = self.factor(alpha)?;
        Ok(chol.solve(&(v + &self.atb * alpha)))
    }

    fn class(&self) -> FunctionClass {
        self.class
    }

    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        if x.len() != self.a.ncols() {
            return None;
        }
        Some(0.5 * (&self.a * x - &self.b).norm_squared())
    }

    fn dim(&self) -> Option<usize> {
        Some(self.a.ncols())
    }
}
