//! Seeded basis-pursuit and LASSO instances.

use std::fmt;

use drscert::funclass::FunctionClass;
use drscert::prox::{prox_affine_indicator, prox_l1, prox_quadratic, AffineIndicator, L1Norm, LeastSquares, ProxOperator};
use drscert::DrsError;
use nalgebra::{DMatrix, DVector};

use crate::rng::SeededRng;

/// Attempts (seed, seed + 1, …) before giving up on a rank-deficient draw.
pub const BASIS_PURSUIT_ATTEMPTS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ProblemKind {
    BasisPursuit,
    Lasso,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemKind::BasisPursuit => write!(f, "basis_pursuit"),
            ProblemKind::Lasso => write!(f, "lasso"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub rows: usize,
    pub cols: usize,
    /// LASSO only; `None` means `min(rows, cols)`.
    pub rank: Option<usize>,
    /// LASSO only.
    pub gamma: f64,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn basis_pursuit(seed: u64) -> Self {
        ProblemSpec {
            kind: ProblemKind::BasisPursuit,
            rows: 30,
            cols: 100,
            rank: None,
            gamma: 1.0,
            seed,
        }
    }

    pub fn lasso(seed: u64) -> Self {
        ProblemSpec {
            kind: ProblemKind::Lasso,
            rows: 60,
            cols: 40,
            rank: None,
            gamma: 0.1,
            seed,
        }
    }

    pub fn with_size(mut self, rows: usize, cols: usize) -> Self {
        self.rows = rows;
        self.cols = cols;
        self
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = Some(rank);
        self
    }

    pub fn effective_rank(&self) -> usize {
        self.rank.unwrap_or(self.rows.min(self.cols))
    }

    pub fn validate(&self) -> drscert::Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(DrsError::InvalidParameter("rows and cols must be positive".into()));
        }
        match self.kind {
            ProblemKind::BasisPursuit if self.rows >= self.cols => Err(DrsError::InvalidParameter(format!(
                "basis pursuit needs rows < cols, got {}x{}",
                self.rows, self.cols
            ))),
            ProblemKind::Lasso => {
                let r = self.effective_rank();
                if r == 0 || r > self.rows.min(self.cols) {
                    return Err(DrsError::InvalidParameter(format!(
                        "rank must be in 1..={}, got {r}",
                        self.rows.min(self.cols)
                    )));
                }
                if !(self.gamma > 0.0 && self.gamma.is_finite()) {
                    return Err(DrsError::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn gaussian_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Row-major draw order, so the stream does not depend on storage layout.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.gaussian();
        }
    }
    m
}

pub struct BasisPursuit {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Sparse vector with `b = A x_true`.
    pub x_true: DVector<f64>,
    /// Seed of the accepted draw.
    pub seed: u64,
    pub f: AffineIndicator,
    pub g: L1Norm,
}

/// `min ‖x‖₁ s.t. Ax = b` as `f = 1{Ax = b}`, `g = ‖·‖₁`.
pub fn gen_basis_pursuit(spec: &ProblemSpec) -> drscert::Result<BasisPursuit> {
    spec.validate()?;
    if spec.kind != ProblemKind::BasisPursuit {
        return Err(DrsError::InvalidParameter(format!("expected basis_pursuit, got {}", spec.kind)));
    }
    let mut last = None;
    for attempt in 0..BASIS_PURSUIT_ATTEMPTS {
        let seed = spec.seed.wrapping_add(attempt);
        let mut rng = SeededRng::new(seed);
        let a = gaussian_matrix(&mut rng, spec.rows, spec.cols);
        let k = spec.rows.div_ceil(4);
        let mut support: Vec<usize> = (0..spec.cols).collect();
        for i in 0..k {
            let j = i + rng.index(spec.cols - i);
            support.swap(i, j);
        }
        let mut x_true = DVector::zeros(spec.cols);
        for &j in &support[..k] {
            x_true[j] = rng.gaussian();
        }
        let b = &a * &x_true;
        match prox_affine_indicator(a.clone(), b.clone()) {
            Ok(f) => {
                return Ok(BasisPursuit {
                    a,
                    b,
                    x_true,
                    seed,
                    f,
                    g: prox_l1(1.0)?,
                })
            }
            Err(e @ DrsError::RankDeficient { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| DrsError::Factorization("no basis pursuit draw succeeded".into())))
}

pub struct Lasso {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Nonzero singular values of `A`, in draw order.
    pub singular_values: Vec<f64>,
    pub class: FunctionClass,
    pub f: LeastSquares,
    pub g: L1Norm,
}

/// `min ½‖Ax − b‖² + γ‖x‖₁` with `A = U diag(s) Vᵀ`, `s ~ U[0.5, 1.5]` of length `rank`.
pub fn gen_lasso(spec: &ProblemSpec) -> drscert::Result<Lasso> {
    spec.validate()?;
    if spec.kind != ProblemKind::Lasso {
        return Err(DrsError::InvalidParameter(format!("expected lasso, got {}", spec.kind)));
    }
    let r = spec.effective_rank();
    let mut rng = SeededRng::new(spec.seed);
    let u = gaussian_matrix(&mut rng, spec.rows, r).qr().q();
    let v = gaussian_matrix(&mut rng, spec.cols, r).qr().q();
    let s: Vec<f64> = (0..r).map(|_| rng.uniform_in(0.5, 1.5)).collect();
    let a = &u * DMatrix::from_diagonal(&DVector::from_column_slice(&s)) * v.transpose();
    let b = DVector::from_fn(spec.rows, |_, _| rng.gaussian());
    let f = prox_quadratic(a.clone(), b.clone())?;
    Ok(Lasso {
        class: f.class(),
        a,
        b,
        singular_values: s,
        f,
        g: prox_l1(spec.gamma)?,
    })
}

/// A generated instance behind the operator interface.
pub struct Problem {
    pub f: Box<dyn ProxOperator>,
    pub g: Box<dyn ProxOperator>,
    pub dim: usize,
}

impl Problem {
    pub fn class(&self) -> FunctionClass {
        self.f.class()
    }
}

pub fn generate(spec: &ProblemSpec) -> drscert::Result<Problem> {
    match spec.kind {
        ProblemKind::BasisPursuit => {
            let p = gen_basis_pursuit(spec)?;
            Ok(Problem {
                f: Box::new(p.f),
                g: Box::new(p.g),
                dim: spec.cols,
            })
        }
        ProblemKind::Lasso => {
            let p = gen_lasso(spec)?;
            Ok(Problem {
                f: Box::new(p.f),
                g: Box::new(p.g),
                dim: spec.cols,
            })
        }
    }
}
