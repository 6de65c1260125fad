use rand::Rng;
use rayon::prelude::*;

use super::SamplerState;
use crate::brownian::{validate_parallel_alphas, ParallelIncrements, StepIncrements};
use crate::error::{Error, Result};
use crate::rng::fill_standard_normal;
use crate::targets::GradientTarget;

/// Below this many gradient evaluations per sweep the parallel stepper stays sequential.
const PARALLEL_SWEEP_MIN: usize = 16;

fn check_step_size(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Schedule(format!(
            "step size must be positive and finite, got {h}"
        )))
    }
}

fn check_dims<T: GradientTarget + ?Sized>(state: &SamplerState, target: &T, extra: &[&[f64]]) -> Result<()> {
    let d = target.dim();
    if state.x.len() != d || state.v.len() != d || extra.iter().any(|e| e.len() != d) {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: target has dimension {d}, state has ({}, {})",
            state.x.len(),
            state.v.len()
        )));
    }
    Ok(())
}

/// `1 − e^{−2t}` without cancellation for small `t`.
fn one_minus_decay(t: f64) -> f64 {
    -(-2.0 * t).exp_m1()
}

/// Weight `h(1 − e^{−2(h−αh)})` of the randomized one-point estimate of
/// `∫_0^h (1 − e^{−2(h−s)}) g(s) ds ≈ weight · g(αh)`, unbiased for `α ~ U[0,1]`.
pub fn midpoint_quadrature_weight(h: f64, alpha: f64) -> f64 {
    h * one_minus_decay(h - alpha * h)
}

/// One randomized midpoint step.
///
/// ```text
/// x½ = x + ½(1−e^{−2αh}) v − ½u(αh − ½(1−e^{−2αh})) ∇f(x) + √u W1
/// x' = x + ½(1−e^{−2h}) v − ½u h(1−e^{−2(h−αh)}) ∇f(x½) + √u W2
/// v' = e^{−2h} v − u h e^{−2(h−αh)} ∇f(x½) + 2√u W3
/// ```
///
/// Exactly two gradient evaluations. `inc` must have been generated for the same `(h, α)`.
pub fn rmm_step<T: GradientTarget + ?Sized>(
    state: &SamplerState,
    target: &T,
    h: f64,
    alpha: f64,
    inc: &StepIncrements,
) -> Result<SamplerState> {
    check_step_size(h)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    check_dims(state, target, &[&inc.w1, &inc.w2, &inc.w3])?;
    let d = target.dim();
    let u = 1.0 / target.smoothness();
    let su = u.sqrt();
    let t1 = alpha * h;

    let mid_v = 0.5 * one_minus_decay(t1);
    let mid_g = 0.5 * u * (t1 - mid_v);
    let end_v = 0.5 * one_minus_decay(h);
    let end_xg = 0.5 * u * midpoint_quadrature_weight(h, alpha);
    let decay = (-2.0 * h).exp();
    let end_vg = u * h * (-2.0 * (h - t1)).exp();

    let mut grad = vec![0.0; d];
    target.gradient(&state.x, &mut grad);
    let x_mid: Vec<f64> = (0..d)
        .map(|i| state.x[i] + mid_v * state.v[i] - mid_g * grad[i] + su * inc.w1[i])
        .collect();
    target.gradient(&x_mid, &mut grad);

    let x = (0..d)
        .map(|i| state.x[i] + end_v * state.v[i] - end_xg * grad[i] + su * inc.w2[i])
        .collect();
    let v = (0..d)
        .map(|i| decay * state.v[i] - end_vg * grad[i] + 2.0 * su * inc.w3[i])
        .collect();
    Ok(SamplerState {
        x,
        v,
        step: state.step + 1,
    })
}

/// `∫_{(j−1)δ}^{min(jδ, α_i h)} (1 − e^{−2(α_i h − s)}) ds` for 1-based `j ≤ i`.
pub fn parallel_coefficient(h: f64, r: usize, alpha_i: f64, j: usize) -> f64 {
    let delta = h / r as f64;
    let t = alpha_i * h;
    let a = (j - 1) as f64 * delta;
    let b = (j as f64 * delta).min(t);
    if b <= a {
        return 0.0;
    }
    // (b − a) − ½(e^{−2(t−b)} − e^{−2(t−a)})
    (b - a) - 0.5 * (-2.0 * (t - b)).exp() * one_minus_decay(b - a)
}

/// One parallel randomized midpoint step with `R = alphas.len()` nodes and
/// `k_iters − 1` fixed-point sweeps over the node positions.
///
/// Each sweep evaluates `R` gradients (a pure map over nodes, run on the
/// rayon pool for large `R`); the final update evaluates `R` more, so a step
/// costs `R·K` evaluations. With `R = 1`, `K = 2` it coincides with [`rmm_step`].
pub fn parallel_rmm_step<T: GradientTarget + ?Sized>(
    state: &SamplerState,
    target: &T,
    h: f64,
    k_iters: usize,
    alphas: &[f64],
    inc: &ParallelIncrements,
) -> Result<SamplerState> {
    check_step_size(h)?;
    if k_iters < 2 {
        return Err(Error::Schedule(format!(
            "need at least two fixed-point iterations, got {k_iters}"
        )));
    }
    validate_parallel_alphas(alphas)?;
    let r = alphas.len();
    if inc.w1.len() != r {
        return Err(Error::InvalidArgument(format!(
            "{} W1 increments for {r} midpoints",
            inc.w1.len()
        )));
    }
    let mut extra: Vec<&[f64]> = inc.w1.iter().map(Vec::as_slice).collect();
    extra.push(&inc.w2);
    extra.push(&inc.w3);
    check_dims(state, target, &extra)?;

    let d = target.dim();
    let u = 1.0 / target.smoothness();
    let su = u.sqrt();
    let delta = h / r as f64;

    let base: Vec<Vec<f64>> = alphas
        .iter()
        .zip(&inc.w1)
        .map(|(a, w1)| {
            let mid_v = 0.5 * one_minus_decay(a * h);
            (0..d)
                .map(|k| state.x[k] + mid_v * state.v[k] + su * w1[k])
                .collect()
        })
        .collect();
    let coef: Vec<Vec<f64>> = alphas
        .iter()
        .enumerate()
        .map(|(i, a)| (1..=i + 1).map(|j| parallel_coefficient(h, r, *a, j)).collect())
        .collect();

    let mut nodes = vec![state.x.clone(); r];
    let mut grads = vec![vec![0.0; d]; r];
    let eval_all = |nodes: &[Vec<f64>], grads: &mut [Vec<f64>]| {
        if r >= PARALLEL_SWEEP_MIN {
            grads
                .par_iter_mut()
                .zip(nodes.par_iter())
                .for_each(|(g, x)| target.gradient(x, g));
        } else {
            for (g, x) in grads.iter_mut().zip(nodes) {
                target.gradient(x, g);
            }
        }
    };

    for _ in 1..k_iters {
        eval_all(&nodes, &mut grads);
        for (i, node) in nodes.iter_mut().enumerate() {
            for k in 0..d {
                let drift: f64 = coef[i].iter().zip(&grads).map(|(c, g)| c * g[k]).sum();
                node[k] = base[i][k] - 0.5 * u * drift;
            }
        }
    }
    eval_all(&nodes, &mut grads);

    let end_v = 0.5 * one_minus_decay(h);
    let decay = (-2.0 * h).exp();
    let wx: Vec<f64> = alphas
        .iter()
        .map(|a| delta * one_minus_decay(h - a * h))
        .collect();
    let wv: Vec<f64> = alphas
        .iter()
        .map(|a| delta * (-2.0 * (h - a * h)).exp())
        .collect();
    let x = (0..d)
        .map(|k| {
            let drift: f64 = wx.iter().zip(&grads).map(|(w, g)| w * g[k]).sum();
            state.x[k] + end_v * state.v[k] - 0.5 * u * drift + su * inc.w2[k]
        })
        .collect();
    let v = (0..d)
        .map(|k| {
            let drift: f64 = wv.iter().zip(&grads).map(|(w, g)| w * g[k]).sum();
            decay * state.v[k] - u * drift + 2.0 * su * inc.w3[k]
        })
        .collect();
    Ok(SamplerState {
        x,
        v,
        step: state.step + 1,
    })
}

/// Euler discretization of the kinetic diffusion with explicit noise `ζ`:
/// `v' = (1−2h)v − uh∇f(x) + 2√(uh) ζ`, `x' = x + h v`.
pub fn euler_uld_step_with_noise<T: GradientTarget + ?Sized>(
    state: &SamplerState,
    target: &T,
    h: f64,
    zeta: &[f64],
) -> Result<SamplerState> {
    check_step_size(h)?;
    check_dims(state, target, &[zeta])?;
    let d = target.dim();
    let u = 1.0 / target.smoothness();
    let noise = 2.0 * (u * h).sqrt();
    let mut grad = vec![0.0; d];
    target.gradient(&state.x, &mut grad);
    let x = (0..d).map(|i| state.x[i] + h * state.v[i]).collect();
    let v = (0..d)
        .map(|i| (1.0 - 2.0 * h) * state.v[i] - u * h * grad[i] + noise * zeta[i])
        .collect();
    Ok(SamplerState {
        x,
        v,
        step: state.step + 1,
    })
}

pub fn euler_uld_step<T: GradientTarget + ?Sized, R: Rng + ?Sized>(
    state: &SamplerState,
    target: &T,
    h: f64,
    rng: &mut R,
) -> Result<SamplerState> {
    let mut zeta = vec![0.0; target.dim()];
    fill_standard_normal(rng, &mut zeta);
    euler_uld_step_with_noise(state, target, h, &zeta)
}

/// Exponential integrator with the gradient frozen at the step start:
///
/// ```text
/// x' = x + ½(1−e^{−2h}) v − ½u(h − ½(1−e^{−2h})) ∇f(x) + √u W2
/// v' = e^{−2h} v − ½u(1−e^{−2h}) ∇f(x) + 2√u W3
/// ```
pub fn exponential_euler_uld_step<T: GradientTarget + ?Sized>(
    state: &SamplerState,
    target: &T,
    h: f64,
    w2: &[f64],
    w3: &[f64],
) -> Result<SamplerState> {
    check_step_size(h)?;
    check_dims(state, target, &[w2, w3])?;
    let d = target.dim();
    let u = 1.0 / target.smoothness();
    let su = u.sqrt();
    let end_v = 0.5 * one_minus_decay(h);
    let xg = 0.5 * u * (h - end_v);
    let vg = u * end_v;
    let decay = (-2.0 * h).exp();
    let mut grad = vec![0.0; d];
    target.gradient(&state.x, &mut grad);
    let x = (0..d)
        .map(|i| state.x[i] + end_v * state.v[i] - xg * grad[i] + su * w2[i])
        .collect();
    let v = (0..d)
        .map(|i| decay * state.v[i] - vg * grad[i] + 2.0 * su * w3[i])
        .collect();
    Ok(SamplerState {
        x,
        v,
        step: state.step + 1,
    })
}

/// Euler–Maruyama for the overdamped diffusion: `x' = x − h∇f(x) + √(2h) ζ`.
/// The velocity is carried through unchanged.
pub fn overdamped_lmc_step_with_noise<T: GradientTarget + ?Sized>(
    state: &SamplerState,
    target: &T,
    h: f64,
    zeta: &[f64],
) -> Result<SamplerState> {
    check_step_size(h)?;
    check_dims(state, target, &[zeta])?;
    let d = target.dim();
    let noise = (2.0 * h).sqrt();
    let mut grad = vec![0.0; d];
    target.gradient(&state.x, &mut grad);
    let x = (0..d)
        .map(|i| state.x[i] - h * grad[i] + noise * zeta[i])
        .collect();
    Ok(SamplerState {
        x,
        v: state.v.clone(),
        step: state.step + 1,
    })
}

pub fn overdamped_lmc_step<T: GradientTarget + ?Sized, R: Rng + ?Sized>(
    state: &SamplerState,
    target: &T,
    h: f64,
    rng: &mut R,
) -> Result<SamplerState> {
    let mut zeta = vec![0.0; target.dim()];
    fill_standard_normal(rng, &mut zeta);
    overdamped_lmc_step_with_noise(state, target, h, &zeta)
}
