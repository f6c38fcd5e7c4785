//! Numerics for the minimum probability of lifetime ruin and its dual
//! controller-and-stopper game.
//!
//! An investor consumes at a rate that follows geometric Brownian motion,
//! invests in a riskless and a risky asset, and faces an exponential
//! lifetime with hazard `lambda`. After reducing wealth by consumption
//! (`z = w/c`), the minimum probability of ruin before death, `phi(z)`,
//! solves a one-dimensional HJB equation; a barrier version `phi_M` absorbs
//! at `z = M`. Its convex dual is the value of a controller-and-stopper
//! game `ghat_M(y)` solved by a free-boundary ODE with smooth pasting
//! against the obstacle `u_M(y) = min(M*y, 1)`.
//!
//! Module map:
//! - [`model`]: market parameters, validation, derived quantities.
//! - [`curve`]: grids, sampled value/policy curves, interpolation, CSV.
//! - [`pde`]: primal HJB solver (policy iteration), feedback policy,
//!   residuals, convexity diagnostics, the 2-D lift, and the M-doubling
//!   ladder for the unbounded problem.
//! - [`fbp`]: dual free-boundary shooting solver and the optimal control.
//! - [`duality`]: concave Legendre transform and primal/dual cross-checks.
//! - [`sim`]: Monte Carlo validation (ruin probabilities, game values,
//!   saddle-point deviation tests, explicit-solution checks).

pub mod curve;
pub mod duality;
pub mod error;
pub mod fbp;
pub mod model;
pub mod pde;
mod rk;
pub mod rng;
pub mod sim;
mod tridiag;

pub use curve::{CurveKind, Grid, PolicyCurve, ValueCurve};
pub use duality::DualityReport;
pub use error::{Error, Result};
pub use fbp::{DualSolution, FreeBoundary};
pub use model::{DerivedParams, MarketParams, ParamsBundle};
pub use sim::{SimConfig, SimResult};
