//! Deterministic fixtures shared by the benchmarks.

use drscert::prox::{prox_l1, prox_quadratic, L1Norm, LeastSquares};
use nalgebra::{DMatrix, DVector};

/// Smooth pseudo-random entries in `[-1, 1]`, stable across platforms.
fn entry(i: usize, j: usize, salt: f64) -> f64 {
    ((i as f64 + 1.0) * 12.9898 + (j as f64 + 1.0) * 78.233 + salt).sin()
}

/// Symmetric 4×4 test matrix.
pub fn symmetric4(salt: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(4, 4, |i, j| entry(i, j, salt));
    (&a + a.transpose()) * 0.5
}

/// `½‖Ax − b‖²` and `γ‖x‖₁` on a tall, full-column-rank `A`.
pub fn lasso(rows: usize, cols: usize, gamma: f64) -> (LeastSquares, L1Norm) {
    assert!(rows >= cols);
    let a = DMatrix::from_fn(rows, cols, |i, j| entry(i, j, 0.5) + if i == j { 3.0 } else { 0.0 });
    let b = DVector::from_fn(rows, |i, _| entry(i, 0, 1.5));
    let f = prox_quadratic(a, b).expect("finite data");
    let g = prox_l1(gamma).expect("positive weight");
    (f, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use drscert::ProxOperator;

    #[test]
    fn fixtures_are_well_formed() {
        let m = symmetric4(0.0);
        assert_eq!(m, m.transpose());
        let (f, g) = lasso(30, 20, 0.1);
        assert_eq!(f.dim(), Some(20));
        assert_eq!(g.dim(), None);
    }
}
