//! Numerical laboratory for the fractional Dirichlet problem
//!   (-Δ)^s u + |∇u|^p = f  in Ω,   u = 0 on ℝ^N \ Ω,   s ∈ (1/2, 1),
//! on the interval Ω = (-1, 1), with a matrix-free Green-kernel cross-check
//! on the unit disc.
//!
//! The crate provides:
//! - [`grid`]: the discretization, exterior-zero fields, truncation and the
//!   weighted norms;
//! - [`exponents`]: the critical-exponent table driving every diagnostic;
//! - [`fraclap`]: the dense discrete fractional Laplacian (unnormalized
//!   kernel convention), discrete gradient and the cutoff-regularized
//!   operator;
//! - [`green`]: the disc Green kernel and radial Green-operator quadrature;
//! - [`solvers`]: the constructive schemes (double-indexed monotone
//!   approximation, weighted-ball fixed point, saturated reaction) plus a
//!   damped-Newton cross-validation baseline;
//! - [`diagnostics`]: refinement scans for regularity thresholds, blow-up
//!   and non-existence, and the pointwise residual check.
//!
//! Data-parallel sections use rayon when the `parallel` feature (default)
//! is enabled and fall back to sequential loops otherwise; results are
//! bitwise identical either way.

pub mod diagnostics;
pub mod error;
pub mod exponents;
pub mod fraclap;
pub mod green;
pub mod grid;
pub mod par;
pub mod quad;
pub mod report;
pub mod solvers;

pub use error::{Error, Result};
pub use exponents::{critical_exponents, ExponentSet};
pub use fraclap::{assemble, gradient, FracOp, GradOp};
pub use green::{boundary_exponent_fit, GreenKernel, RadialProfile};
pub use grid::{build_grid, hardy_ratio, truncate, weighted_grad_norm, Grid, ScalarField};
pub use report::{ScanResult, Scheme, SolveReport, Verdict};
pub use solvers::{
    check_admissible, solve_fixed_point, solve_linear, solve_monotone, solve_newton,
    solve_reaction, solve_regularized, standard_trial_family, FixedPointConfig, MonotoneSchedule,
};
