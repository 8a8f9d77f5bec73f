//! Re-weighted ℓ1 sparse recovery where the weights are Lagrange multipliers.
//!
//! The weighted ℓ1 problem `min Σ wᵢ|xᵢ| s.t. Φx = b` is read as the inner
//! minimization of a Lagrange dual function, and the weights are updated by
//! projected subgradient ascent on that dual with Polyak step sizes. The crate
//! contains:
//!
//! - [`model`]: problem instances, weights, solver configuration and the
//!   recovery / sparsity metrics.
//! - [`solvers`]: the inner convex solvers (weighted basis pursuit by ADMM,
//!   weighted LASSO by FISTA, the quadratically constrained weighted ℓ1
//!   problem by bisection on the LASSO multiplier, least-norm solutions).
//! - [`duality`]: dual function evaluation, subgradients, Polyak steps and the
//!   projection on the nonnegative orthant.
//! - [`reweight`]: the outer algorithms (oracle and non-oracle subgradient
//!   re-weighting, RW-LASSO, and the `1/(|x|+ε)` baselines).
//! - [`probgen`]: seeded Gaussian problem ensembles.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod duality;
pub mod error;
pub mod linalg;
pub mod model;
pub mod probgen;
pub mod reweight;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{DualState, EpsSchedule, ProblemInstance, SolverConfig, SweepResult, Weights};
pub use reweight::{Algorithm, ExitReason, RwOutcome, RwTrace};
pub use solvers::{InnerSolveReport, SolverContext};
