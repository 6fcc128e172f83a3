//! Radial semilinear elliptic problems `−Δ_g u = λ f(u)` on geodesic balls of Riemannian models.
//!
//! The crate traces the branch of minimal solutions up to the extremal parameter `λ*`,
//! certifies semistability through the principal eigenvalue of the linearization, and checks
//! the closed-form extremal pairs, critical exponents and the improved weighted Hardy
//! inequality available for the space forms.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod discretization;
pub mod error;
pub mod format;
pub mod geometry;
pub mod nonlinearity;
pub mod quadrature;
pub mod solver;
pub mod stability;
pub mod tridiag;

pub use analysis::{
    closed_form_extremal, evaluate_extremal, hardy_verify, lp_membership_scan,
    power_semistability_conditions, regularity_exponents, verify_extremal, ClosedFormExtremal,
    ExtremalFamily, ExtremalReport, ExtremalVerification, HardyReport, MembershipRow, NormKind,
    PowerConditions, RegularityExponents,
};
pub use discretization::{
    assemble_laplacian, weak_residual, weighted_lp_norm, weighted_w1p_norm, weighted_w1p_seminorm,
    DiscreteOperator, LaplacianRoute, RadialMesh,
};
pub use error::{Error, Result};
pub use geometry::{sphere_area, CriticalRadii, ModelKind, RiemannianModel};
pub use nonlinearity::{Nonlinearity, NonlinearityKind};
pub use solver::{
    parse_branch_csv, write_branch_csv, Branch, BranchPoint, BranchRecord, ContinuationOptions,
    NewtonOptions, RadialProblem,
};

pub use stability::{
    annotate_branch, etapsi_check, key_estimate_ratio, principal_eigenvalue, quadratic_form,
    EigenOptions, EigenPair, EtaFunction,
};
