//! Numerical laboratory for sigma_k-Yamabe metrics on radially symmetric
//! conformally compact backgrounds.
//!
//! The crate is organized along the pipeline:
//!
//! - [`symfunc`]: elementary symmetric functions, Newton transforms,
//!   Garding cones, and spectrum reconstruction from sigma data.
//! - [`geometry`]: warped-product backgrounds dt^2 + phi^2 g_{S^n}, their
//!   Schouten spectra, and the model constants beta_k^0, c_{k,n}.
//! - [`grid`]: the radial lattice in the geodesic coordinate with
//!   x = e^{-t}, stencils, weighted norms, and decay fitting.
//! - [`operator`]: the fully nonlinear residual F_k, its tridiagonal
//!   linearization, normal-operator coefficients, and indicial roots.
//! - [`solver`]: damped Newton with a cone guard, continuation in the
//!   perturbation amplitude, Fredholm-window probes, and the
//!   Poincare-Einstein intersection checker.
//!
//! Per-node assembly runs on rayon when the default `parallel` feature is
//! enabled; the `*_seq` entry points are always sequential.

pub mod error;
pub mod geometry;
pub mod grid;
pub mod operator;
mod par;
pub mod solver;
pub mod symfunc;

pub use error::{Error, Result};
pub use geometry::{
    beta0, c_kn, c_kn_printed, conformal_schouten_eigs, is_einstein, model_constants,
    schouten_center, schouten_eigs_warped, ModelConstants, SchoutenEigs, WarpFamily,
    WarpedBackground,
};
pub use grid::{d1, d2, decay_rate, weighted_sup_norm, write_csv, GridFunction, RadialGrid};
pub use operator::{
    indicial_roots, linearize, linearize_seq, normal_operator_coeffs, residual, residual_seq,
    IndicialData, SigmaProblem, TridiagonalOperator,
};
pub use solver::{
    continuation, fredholm_probe, intersection_check, newton_solve, shifted_spectrum_at,
    ContinuationReport, ContinuationStage, IntersectionReport, ProbeReport, SigmaConstancyRow,
    SolveReport, SolverParams,
};
pub use symfunc::{
    cone_membership, eigs_from_sigmas, newton_transform, reilly_derivative, sigma_k,
    sigma_k_matrix, ConeLabel, ConeTag, Spectrum, SymMatrix,
};
