//! Primal-dual splitting solvers for structured monotone inclusions and
//! convex minimization, together with the building blocks needed to run them
//! on total-variation image restoration problems.
//!
//! The library is organized around a [`problem::ProblemSpec`] describing one
//! primal block (a proximal map, an optional smooth term, a shift) and any
//! number of dual blocks (a proximal map of a conjugate, a linear operator,
//! an optional Lipschitz forward map). Four iterative schemes consume such
//! specs:
//!
//! * `Alg1` - a forward-backward-forward scheme with a nondecreasing step
//!   sequence and an `O(1/N)` ergodic primal-dual gap bound,
//! * `Alg2` - a variant that exploits strong monotonicity of the primal part
//!   through a decreasing/increasing step-size pair, giving `O(1/n^2)`
//!   decay of the squared primal distance,
//! * `Alg3` - a fixed-step variant that contracts geometrically when both
//!   the primal and all dual parts are strongly monotone,
//! * `Pd1`/`Pd2` - the classical primal-dual baseline with extrapolation and
//!   its accelerated form, for single-block problems.
//!
//! The [`imaging`] module assembles the specs for TV denoising, deblurring
//! and inpainting; [`linops`] holds the discrete gradient, blur and mask
//! operators; [`prox`] the projection/prox catalog; [`metrics`] RMSE, rate
//! fitting and bound checking; [`pgm`] a small PGM reader/writer.

pub mod error;
pub mod imaging;
pub mod linops;
pub mod metrics;
pub mod pgm;
pub mod problem;
pub mod prox;
pub mod solvers;
pub mod vector;

pub use error::{Error, Result};
pub use problem::{beta, DualBlockSpec, LinearOp, ProblemSpec, ProxMap, VectorMap};
pub use solvers::{solve, Callbacks, ConvergenceLog, IterateState, SolveResult, SolverConfig, Variant};
pub use vector::{DualVector, PrimalVector};
