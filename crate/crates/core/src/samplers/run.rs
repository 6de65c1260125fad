use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::steppers::{
    euler_uld_step, exponential_euler_uld_step, overdamped_lmc_step, parallel_rmm_step, rmm_step,
};
use super::{SamplerState, Schedule};
use crate::brownian::{parallel_step_increments, sample_interval, step_increments, StepIncrements};
use crate::error::{Error, Result};
use crate::rng::{stream, uniform};
use crate::targets::{CountingTarget, GradientTarget};

/// Discretization used to advance a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Randomized midpoint (serial).
    Rmm,
    /// Randomized midpoint with `R` nodes and `K − 1` fixed-point sweeps.
    RmmParallel,
    /// Euler discretization of the kinetic diffusion.
    EulerUld,
    /// Exponential integrator with frozen gradient.
    ExpEulerUld,
    /// Overdamped Langevin (Euler–Maruyama).
    Lmc,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Rmm,
        Method::RmmParallel,
        Method::EulerUld,
        Method::ExpEulerUld,
        Method::Lmc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rmm => "rmm",
            Method::RmmParallel => "rmm_parallel",
            Method::EulerUld => "euler_uld",
            Method::ExpEulerUld => "exp_euler_uld",
            Method::Lmc => "lmc",
        }
    }

    /// Gradient evaluations per step under `schedule`.
    pub fn gradients_per_step(self, schedule: &Schedule) -> u64 {
        match self {
            Method::Rmm => 2,
            Method::RmmParallel => (schedule.midpoints * schedule.fixed_point_iters) as u64,
            Method::EulerUld | Method::ExpEulerUld | Method::Lmc => 1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Configuration(format!(
                    "unknown method {s:?}; expected one of rmm, rmm_parallel, euler_uld, exp_euler_uld, lmc"
                ))
            })
    }
}

/// Final state of a chain and the gradient evaluations it consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub state: SamplerState,
    pub grad_evals: u64,
}

/// Starting state: the given point, else the target's minimizer; velocity zero.
pub fn initial_state<T: GradientTarget + ?Sized>(target: &T, start: Option<&[f64]>) -> Result<SamplerState> {
    let x = match (start, target.minimizer()) {
        (Some(x), _) | (None, Some(x)) => x.to_vec(),
        (None, None) => {
            return Err(Error::Configuration(
                "target has no known minimizer and no start point was given".into(),
            ))
        }
    };
    if x.len() != target.dim() {
        return Err(Error::Configuration(format!(
            "start point has length {}, target dimension is {}",
            x.len(),
            target.dim()
        )));
    }
    Ok(SamplerState::at_rest(x))
}

/// Advances one chain for `schedule.n_steps` steps, calling `observer` after each.
///
/// Randomness per step is drawn in a fixed order: the midpoint fraction(s)
/// first, then the Gaussian increments.
pub fn run_chain<T, R, F>(
    method: Method,
    target: &T,
    schedule: &Schedule,
    start: SamplerState,
    rng: &mut R,
    mut observer: F,
) -> Result<RunSummary>
where
    T: GradientTarget + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(&SamplerState),
{
    if (schedule.u * target.smoothness() - 1.0).abs() > 1e-12 {
        return Err(Error::Schedule(format!(
            "schedule has u = {} but the target has 1/L = {}",
            schedule.u,
            1.0 / target.smoothness()
        )));
    }
    let counted = CountingTarget::new(target);
    let d = target.dim();
    let h = schedule.h;
    let r = schedule.midpoints;
    let mut state = start;
    for _ in 0..schedule.n_steps {
        state = match method {
            Method::Rmm => {
                let alpha = uniform(rng);
                let inc = step_increments(h, alpha, d, rng)?;
                rmm_step(&state, &counted, h, alpha, &inc)?
            }
            Method::RmmParallel => {
                let alphas: Vec<f64> = (0..r).map(|i| (i as f64 + uniform(rng)) / r as f64).collect();
                let inc = parallel_step_increments(h, &alphas, d, rng)?;
                parallel_rmm_step(&state, &counted, h, schedule.fixed_point_iters, &alphas, &inc)?
            }
            Method::EulerUld => euler_uld_step(&state, &counted, h, rng)?,
            Method::ExpEulerUld => {
                let whole = sample_interval(h, d, rng)?;
                let inc = StepIncrements::from_whole_step(h, &whole);
                exponential_euler_uld_step(&state, &counted, h, &inc.w2, &inc.w3)?
            }
            Method::Lmc => overdamped_lmc_step(&state, &counted, h, rng)?,
        };
        observer(&state);
    }
    Ok(RunSummary {
        state,
        grad_evals: counted.count(),
    })
}

/// Serial randomized midpoint chain from the target minimizer (or `start`),
/// seeded deterministically.
pub fn rmm_run<T: GradientTarget + ?Sized>(
    target: &T,
    schedule: &Schedule,
    seed: u64,
    start: Option<&[f64]>,
) -> Result<RunSummary> {
    let init = initial_state(target, start)?;
    let mut rng = stream(seed, 0);
    run_chain(Method::Rmm, target, schedule, init, &mut rng, |_| {})
}

/// Runs `chains` independent chains in parallel; chain `c` uses stream `c` of `seed`.
/// Output order is chain order regardless of scheduling.
pub fn run_chains<T: GradientTarget + ?Sized>(
    method: Method,
    target: &T,
    schedule: &Schedule,
    chains: usize,
    seed: u64,
    start: Option<&[f64]>,
) -> Result<Vec<RunSummary>> {
    let init = initial_state(target, start)?;
    (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c as u64);
            run_chain(method, target, schedule, init.clone(), &mut rng, |_| {})
        })
        .collect()
}
