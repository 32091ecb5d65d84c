//! Phase-space simulation of bosonic modes on the general Gaussian operator
//! basis.
//!
//! A kernel is parameterized by a complex weight, a pair of independent
//! displacement vectors, and three correlation matrices
//! `(Omega, alpha, alpha+, n, m, m+)`; physical density matrices, the
//! classical quasi-probability bases and their non-Hermitian continuations
//! are all points of this one family. Any quadratic master equation moves
//! such a point deterministically, and this crate evaluates that motion in
//! closed form or by adaptive integration, in real or imaginary time.
//!
//! Modules:
//! - [`linalg`]: complex dense kernels (generalized dagger, exponentials,
//!   hyperbolic pairs, Sylvester solves).
//! - [`state`]: the kernel parameter type, covariance, moments, physicality
//!   diagnostics, weighted ensembles.
//! - [`factory`]: constructors for the standard state families.
//! - [`qme`]: quadratic master equations, Lindblad assembly, drift and
//!   propagation.
//! - [`fock`]: a truncated number-basis oracle used to verify everything
//!   above by brute force.
//! - [`schema`]: JSON-friendly mirrors of the public types.

pub mod factory;
pub mod fock;
pub mod linalg;
pub mod ode;
pub mod qme;
pub mod schema;
pub mod state;

pub use factory::{ClassicalKind, FactoryError, SqueezeSpec, ThermalSpec};
pub use linalg::{BlockMatrix2x2, CMatrix, CVector, LinalgError};
pub use ode::{OdeError, OdeOptions};
pub use qme::{
    drift_matrices, lindblad_to_qme, moment_trajectory, propagate_closed_form,
    propagate_imaginary_time, propagate_imaginary_time_ode, propagate_ode, propagate_with_drift,
    thermal_equilibrium_state, validate_trace_preserving, DriftSolution, Engine, LindbladSpec,
    LossOperator, MomentSample, QmeError, QuadraticMe, TracePreservationReport,
};
pub use state::{
    Covariance, FirstMoments, GaussianParams, PhysicalityReport, SecondMoments, StateError,
    TraceResult, WeightedEnsemble,
};
