//! Randomized midpoint sampling for strongly log-concave densities.
//!
//! The crate simulates underdamped Langevin diffusion with the randomized
//! midpoint integrator (serial and parallel forms), alongside the Euler,
//! exponential-Euler and overdamped Langevin baselines. Around the samplers
//! sits a verification toolkit: exact Brownian functionals and a refinable
//! path for coupling step sizes, exact moment propagation for Gaussian
//! targets, closed-form Gaussian Wasserstein-2 distances, a contraction
//! check and the coupled strong-error experiment.
//!
//! ```
//! use midpoint_langevin::samplers::{rmm_run, schedule};
//! use midpoint_langevin::targets::{GradientTarget, QuadraticTarget};
//!
//! let target = QuadraticTarget::with_condition_number(4, 1.0, 10.0).unwrap();
//! let plan = schedule(0.5, target.condition_number(), 0.5, target.smoothness()).unwrap();
//! let out = rmm_run(&target, &plan, 7, None).unwrap();
//! assert_eq!(out.grad_evals, 2 * plan.n_steps);
//! ```
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod analysis;
pub mod brownian;
pub mod cli;
pub mod error;
pub mod rng;
pub mod samplers;
pub mod targets;

pub use error::{Error, Result};
