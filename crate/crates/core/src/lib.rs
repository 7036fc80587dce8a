//! Numerical laboratory for the scale-invariant 2-D Euler system on S¹:
//!
//!   ∂ₜg + 2G ∂θg = 0,   (4 + ∂θθ)G = g,
//!
//! for m-fold symmetric angular vorticity profiles g (m ≥ 3). The crate
//! evolves the characteristic system with its Riccati structure, tracks the
//! monotone entropy of contracting labels, integrates piecewise-constant
//! jump dynamics exactly, and solves for the steady jump states — with every
//! major formula backed by an independent oracle (spectral vs quadrature
//! inversion, grid vs contour evolution, Riccati vs linear second-order
//! form).
//!
//! Per-marker and per-node loops are data-parallel; the default `parallel`
//! feature runs them on rayon, and disabling it yields a sequential build
//! with identical output bytes.

pub mod contour;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod field;
pub mod flow;
pub mod fold;
pub mod kernel;
pub mod ode;
pub mod selfcheck;
pub mod steady;
pub mod synth;

pub use error::{Error, Result};
pub use fold::SymmetryFold;

pub use contour::{
    compare_with_grid, contour_run, contour_velocity, g_at_jump, ContourStatus,
    ContourTrajectory, JumpProfile,
};
pub use diagnostics::{
    expanding_set_estimate, extract_profile, weak_convergence_proxy, AsymptoticProfile,
    DiagnosticsTrace, ProfileKind,
};
pub use field::{ScalarField, SpectralField};
pub use flow::{
    run, velocity_at, FlowState, FlowTrajectory, FourierMode, InitialData, RunStatus, Solver,
    SolverOptions,
};
pub use kernel::{
    convolve_kernel, forcing_c, invert_helmholtz, kernel_eval_full, kernel_eval_m, FieldSet,
};
pub use ode::{classify, integrate_y, riccati_equiv, shoot_decaying, OdeClassification, Scenario};
pub use steady::{local_g, solve_rotating, verify_steady, SteadyCandidate, VerifyReport};
