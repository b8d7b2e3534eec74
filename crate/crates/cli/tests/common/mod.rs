//! Brute-force rate oracle shared by the acceptance suite and its recompute test.

#![allow(dead_code)]

use drscert::certify::{build_q1, build_q2, build_qk, psd_tol};
use drscert::FunctionClass;
use nalgebra::Matrix3;

pub const ORACLE_POINTS: usize = 200;
pub const ORACLE_LAMBDA: (f64, f64) = (0.01, 4.0);
pub const ORACLE_SIGMA_MAX: f64 = 100.0;

/// `(α, m, L)` and the frozen oracle ρ², from `grid_oracle::recompute` (release build).
pub const ORACLE_CASES: [(f64, f64, f64, f64); 3] = [
    (1.0, 1.0, 10.0, 0.6734170972935942),
    (0.3, 1.0, 100.0, 0.8780601905238725),
    (1.0, 1.0, 1.0, 6.5616528135541705e-6),
];

fn to3(m: &drscert::ReducedMatrix) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m.get(i, j))
}

/// Smallest ρ² certified by the direct 3×3 inequality over a
/// `ORACLE_POINTS³` grid of `(λ, σ₁, σ₂)`, with nalgebra's eigensolver.
pub fn grid_oracle(alpha: f64, m: f64, l: f64) -> f64 {
    let fc = FunctionClass::smooth(m, l).unwrap();
    let q1 = to3(&build_q1(alpha, &fc).unwrap());
    let q2 = to3(&build_q2(alpha).unwrap());
    let n = ORACLE_POINTS;
    let axis = |lo: f64, hi: f64| (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64);
    let mut best = 1.0_f64;
    for lambda in axis(ORACLE_LAMBDA.0, ORACLE_LAMBDA.1) {
        let qk0 = build_qk(lambda, 0.0);
        let tol = psd_tol(&qk0);
        let base = to3(&qk0);
        for s1 in axis(0.0, ORACLE_SIGMA_MAX) {
            let partial = base + q1 * s1;
            for s2 in axis(0.0, ORACLE_SIGMA_MAX) {
                let m0 = partial + q2 * s2;
                let feasible = |r: f64| {
                    let mut mm = m0;
                    mm[(0, 0)] -= r;
                    mm.symmetric_eigenvalues().max() <= tol
                };
                if !feasible(best) {
                    continue;
                }
                let (mut lo, mut hi) = (0.0, best);
                if feasible(0.0) {
                    hi = 0.0;
                }
                while hi - lo > 1e-9 {
                    let mid = 0.5 * (lo + hi);
                    if feasible(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                best = hi;
            }
        }
    }
    best
}
