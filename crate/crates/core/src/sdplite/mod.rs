//! Small dense eigensolver and the linear-rate optimizer for strongly convex `f`.

mod eig;
mod lmi;

pub use eig::{eig_sym, max_eig, SymmetricEigen, MAX_SWEEPS, OFF_DIAGONAL_TOL, SYMMETRY_TOL};
pub use lmi::{
    build_sigma_matrix, default_alpha_grid, feasibility_search, logspace, optimize_rate, optimize_rate_fixed_lambda,
    sigma_max_eig, sweep_heatmap, tune_alpha, write_heatmap_csv, LmiPoint, SweepCell, Witness, BISECTION_TOL,
    DEFAULT_KAPPAS, LAMBDA_BOX, RHO_SQ_CEILING, SIGMA_BOX_SCALE,
};
