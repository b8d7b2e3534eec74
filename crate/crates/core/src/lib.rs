//! Douglas–Rachford splitting with Lyapunov-based convergence certificates.
//!
//! - [`funclass`]: function classes `F(m, L)` and their quadratic constraints.
//! - [`prox`]: proximal operators.
//! - [`splitting`]: DRS and relaxed ADMM iterations, traces, reference solves.
//! - [`certify`]: certificate matrices, analytic parameters, rate bounds.
//! - [`sdplite`]: symmetric eigensolver and linear-rate optimization.

pub mod certify;
pub mod error;
pub mod funclass;
pub mod prox;
pub mod sdplite;
pub mod splitting;

pub use certify::{CertCase, Certificate, ReducedMatrix};
pub use error::{DrsError, Result};
pub use funclass::{FunctionClass, QcMatrix, Smoothness};
pub use prox::ProxOperator;
pub use splitting::{DrsParams, Reference, Schedule, Trace, TraceRecord, TraceStatus};
