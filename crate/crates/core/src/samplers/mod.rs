//! Discretized underdamped Langevin chains and their step-size schedules.
//!
//! The diffusion simulated throughout is
//!
//! ```text
//! dv = −2v dt − u ∇f(x) dt + 2√u dB,    dx = v dt,    u = 1/L,
//! ```
//!
//! whose stationary law has `x`-marginal `∝ exp(−f)` and `v ~ N(0, u I)`.

mod run;
mod schedule;
mod steppers;

pub use run::{initial_state, rmm_run, run_chain, run_chains, Method, RunSummary};
pub use schedule::{schedule, schedule_parallel, Schedule, MAX_STEP};
pub use steppers::{
    euler_uld_step, euler_uld_step_with_noise, exponential_euler_uld_step, midpoint_quadrature_weight,
    overdamped_lmc_step, overdamped_lmc_step_with_noise, parallel_coefficient, parallel_rmm_step,
    rmm_step,
};

use crate::error::{Error, Result};

/// Position, velocity and step counter of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl SamplerState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != v.len() {
            return Err(Error::InvalidArgument(format!(
                "position has length {} but velocity has length {}",
                x.len(),
                v.len()
            )));
        }
        Ok(Self { x, v, step: 0 })
    }

    /// Position `x` with zero velocity.
    pub fn at_rest(x: Vec<f64>) -> Self {
        let d = x.len();
        Self {
            x,
            v: vec![0.0; d],
            step: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|a| a.is_finite())
    }
}
