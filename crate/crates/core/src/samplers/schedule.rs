use serde::Serialize;

use crate::error::{Error, Result};

/// Largest step size the midpoint error bounds allow.
pub const MAX_STEP: f64 = 1.0 / 20.0;

/// Step size, iteration count and (for the parallel variant) node and sweep counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub h: f64,
    pub n_steps: u64,
    /// `u = 1/L`.
    pub u: f64,
    /// Midpoints per step (1 for the serial method).
    pub midpoints: usize,
    /// Fixed-point iterations (2 for the serial method).
    pub fixed_point_iters: usize,
    /// Step-size constant the schedule was built with.
    pub constant: f64,
}

fn check_inputs(epsilon: f64, kappa: f64, c: f64, l: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa must be ≥ 1, got {kappa}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("schedule constant must be positive, got {c}")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!("smoothness must be positive, got {l}")));
    }
    Ok(())
}

/// `N = ⌈(2κ/h) log(20/ε²)⌉`.
fn iterations(epsilon: f64, kappa: f64, h: f64) -> u64 {
    ((2.0 * kappa / h) * (20.0 / (epsilon * epsilon)).ln()).ceil() as u64
}

/// Serial randomized midpoint schedule:
///
/// ```text
/// h = C · min(ε^{1/3} κ^{−1/6} log^{−1/6}(1/ε), ε^{2/3} log^{−1/3}(1/ε)),  clipped to ≤ 1/20
/// N = ⌈(2κ/h) log(20/ε²)⌉
/// ```
pub fn schedule(epsilon: f64, kappa: f64, c: f64, l: f64) -> Result<Schedule> {
    check_inputs(epsilon, kappa, c, l)?;
    let log_inv = (1.0 / epsilon).ln();
    let kappa_branch = epsilon.cbrt() / kappa.powf(1.0 / 6.0) * log_inv.powf(-1.0 / 6.0);
    let eps_branch = epsilon.powf(2.0 / 3.0) * log_inv.powf(-1.0 / 3.0);
    let h = (c * kappa_branch.min(eps_branch)).min(MAX_STEP);
    Ok(Schedule {
        h,
        n_steps: iterations(epsilon, kappa, h),
        u: 1.0 / l,
        midpoints: 1,
        fixed_point_iters: 2,
        constant: c,
    })
}

/// Parallel schedule: constant step `h = min(C, 1/20)`,
/// `R = ⌈c_R √κ/ε · log(1/ε)⌉`, `K = max(2, ⌈c_K log(1/δ⁴)⌉)` with `δ = h/R`,
/// and the serial iteration count for this `h`.
///
/// `R⁴δ⁴ = h⁴ ≤ ¼` holds because `h ≤ 1/20`.
pub fn schedule_parallel(
    epsilon: f64,
    kappa: f64,
    c: f64,
    l: f64,
    c_r: f64,
    c_k: f64,
) -> Result<Schedule> {
    check_inputs(epsilon, kappa, c, l)?;
    if !(c_r > 0.0 && c_k > 0.0 && c_r.is_finite() && c_k.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "c_R and c_K must be positive, got {c_r}, {c_k}"
        )));
    }
    let h = c.min(MAX_STEP);
    let r = (c_r * kappa.sqrt() / epsilon * (1.0 / epsilon).ln()).ceil().max(1.0) as usize;
    let delta = h / r as f64;
    let k = ((c_k * (1.0 / delta.powi(4)).ln()).ceil() as usize).max(2);
    let s = Schedule {
        h,
        n_steps: iterations(epsilon, kappa, h),
        u: 1.0 / l,
        midpoints: r,
        fixed_point_iters: k,
        constant: c,
    };
    s.validate()?;
    Ok(s)
}

impl Schedule {
    /// A user-specified schedule; checked against the same invariants.
    pub fn explicit(h: f64, n_steps: u64, l: f64, midpoints: usize, fixed_point_iters: usize) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("smoothness must be positive, got {l}")));
        }
        let s = Schedule {
            h,
            n_steps,
            u: 1.0 / l,
            midpoints,
            fixed_point_iters,
            constant: h,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= MAX_STEP) {
            return Err(Error::Schedule(format!(
                "step size {} outside (0, {MAX_STEP}]",
                self.h
            )));
        }
        if self.midpoints == 0 {
            return Err(Error::Schedule("need at least one midpoint".into()));
        }
        if self.fixed_point_iters < 2 {
            return Err(Error::Schedule(format!(
                "need at least two fixed-point iterations, got {}",
                self.fixed_point_iters
            )));
        }
        let r4d4 = self.h.powi(4);
        if r4d4 > 0.25 {
            return Err(Error::Schedule(format!("R⁴δ⁴ = {r4d4} exceeds 1/4")));
        }
        Ok(())
    }

    /// `δ = h/R`.
    pub fn sub_step(&self) -> f64 {
        self.h / self.midpoints as f64
    }

    /// Total integration time `N·h`.
    pub fn horizon(&self) -> f64 {
        self.h * self.n_steps as f64
    }
}
